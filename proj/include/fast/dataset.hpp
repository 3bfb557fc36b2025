#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

namespace fast {

/// Raw sample matrix. Rows are samples, columns are features. Labels, when
/// present, are contiguous class ids starting at 0 (ingest remaps arbitrary
/// integer labels before construction).
struct DatasetMatrix {
  Eigen::MatrixXd values;                // N x D
  std::vector<std::int32_t> labels;      // empty when unlabeled

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index dims() const { return values.cols(); }
  bool has_labels() const { return !labels.empty(); }

  /// Number of classes (0 when unlabeled).
  std::int32_t label_count() const;

  /// Row indices belonging to one class, in ascending order.
  std::vector<Eigen::Index> class_rows(std::int32_t label) const;

  /// Validates invariants (finite values, N >= 2, D >= 1, labels contiguous
  /// from 0) and throws InvalidParameterError on violation.
  static DatasetMatrix create(Eigen::MatrixXd values, std::vector<std::int32_t> labels = {});
};

}  // namespace fast
