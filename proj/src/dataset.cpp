#include "fast/dataset.hpp"

#include <algorithm>
#include <set>

#include "fast/errors.hpp"

namespace fast {

std::int32_t DatasetMatrix::label_count() const {
  if (labels.empty()) return 0;
  return *std::max_element(labels.begin(), labels.end()) + 1;
}

std::vector<Eigen::Index> DatasetMatrix::class_rows(std::int32_t label) const {
  std::vector<Eigen::Index> out;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == label) out.push_back(static_cast<Eigen::Index>(i));
  return out;
}

DatasetMatrix DatasetMatrix::create(Eigen::MatrixXd values, std::vector<std::int32_t> labels) {
  if (values.rows() < 2) throw InvalidParameterError("dataset needs at least 2 rows");
  if (values.cols() < 1) throw InvalidParameterError("dataset needs at least 1 column");
  if (!values.allFinite()) throw InvalidParameterError("dataset contains non-finite values");
  if (!labels.empty()) {
    if (static_cast<Eigen::Index>(labels.size()) != values.rows())
      throw InvalidParameterError("label vector length does not match row count");
    std::set<std::int32_t> ids(labels.begin(), labels.end());
    if (*ids.begin() != 0 || *ids.rbegin() != static_cast<std::int32_t>(ids.size()) - 1)
      throw InvalidParameterError("label ids must be contiguous from 0");
  }
  DatasetMatrix ds;
  ds.values = std::move(values);
  ds.labels = std::move(labels);
  return ds;
}

}  // namespace fast
