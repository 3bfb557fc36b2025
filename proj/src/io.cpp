#include "fast/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include "fast/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "rawf32 I/O assumes a little-endian host");

namespace fast {

namespace {

constexpr char kMagicPlain[4] = {'F', 'C', 'R', 'S'};
constexpr char kMagicLabeled[4] = {'F', 'C', 'R', 'L'};

std::vector<std::int32_t> remap_labels(const std::vector<std::int64_t>& raw) {
  std::map<std::int64_t, std::int32_t> ids;
  for (std::int64_t v : raw) ids.emplace(v, 0);
  std::int32_t next = 0;
  for (auto& [k, v] : ids) v = next++;
  std::vector<std::int32_t> out;
  out.reserve(raw.size());
  for (std::int64_t v : raw) out.push_back(ids[v]);
  return out;
}

bool parse_number(const std::string& tok, double& out) {
  if (tok.empty()) return false;
  char* end = nullptr;
  out = std::strtod(tok.c_str(), &end);
  return end == tok.c_str() + tok.size();
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string tok;
  std::stringstream ss(line);
  while (std::getline(ss, tok, ',')) {
    const auto first = tok.find_first_not_of(" \t\r");
    if (first == std::string::npos) {
      out.emplace_back();
      continue;
    }
    const auto last = tok.find_last_not_of(" \t\r");
    out.push_back(tok.substr(first, last - first + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

DatasetMatrix load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);

  std::string line;
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    rows.push_back(split_csv_line(line));
  }
  if (rows.empty()) throw FormatError(path + ": empty file");

  // Header iff any token of the first line is non-numeric.
  bool has_header = false;
  for (const auto& tok : rows[0]) {
    double unused;
    if (!parse_number(tok, unused)) {
      has_header = true;
      break;
    }
  }
  const bool has_label_col = has_header && !rows[0].empty() && rows[0].back() == "label";
  const std::size_t first_data = has_header ? 1 : 0;
  if (rows.size() <= first_data) throw FormatError(path + ": no data rows");

  const std::size_t width = rows[first_data].size();
  const std::size_t dims = has_label_col ? width - 1 : width;
  if (dims < 1) throw FormatError(path + ": no feature columns");

  const std::size_t n = rows.size() - first_data;
  Eigen::MatrixXd values(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dims));
  std::vector<std::int64_t> raw_labels;

  for (std::size_t r = 0; r < n; ++r) {
    const auto& row = rows[first_data + r];
    if (row.size() != width)
      throw FormatError(path + ": row " + std::to_string(r + 1) + " has " +
                        std::to_string(row.size()) + " fields, expected " + std::to_string(width));
    for (std::size_t c = 0; c < dims; ++c) {
      double v;
      if (!parse_number(row[c], v))
        throw FormatError(path + ": unparsable value at row " + std::to_string(r + 1) +
                          ", column " + std::to_string(c + 1));
      if (!std::isfinite(v))
        throw FormatError(path + ": non-finite value at row " + std::to_string(r + 1) +
                          ", column " + std::to_string(c + 1));
      values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v;
    }
    if (has_label_col) {
      double v;
      if (!parse_number(row[dims], v) || v != std::floor(v))
        throw FormatError(path + ": bad label at row " + std::to_string(r + 1));
      raw_labels.push_back(static_cast<std::int64_t>(v));
    }
  }

  return DatasetMatrix::create(std::move(values),
                               has_label_col ? remap_labels(raw_labels)
                                             : std::vector<std::int32_t>{});
}

DatasetMatrix load_rawf32(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);

  char magic[4];
  std::uint32_t n = 0, d = 0, reserved = 0;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&n), 4);
  in.read(reinterpret_cast<char*>(&d), 4);
  in.read(reinterpret_cast<char*>(&reserved), 4);
  if (!in) throw FormatError(path + ": truncated header");

  bool labeled = false;
  if (std::memcmp(magic, kMagicLabeled, 4) == 0) labeled = true;
  else if (std::memcmp(magic, kMagicPlain, 4) != 0)
    throw FormatError(path + ": bad magic, not a rawf32 file");
  if (n == 0 || d == 0)
    throw InvalidParameterError(path + ": header declares an empty dataset");

  std::vector<float> buf(static_cast<std::size_t>(n) * d);
  in.read(reinterpret_cast<char*>(buf.data()),
          static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (!in) throw FormatError(path + ": truncated value block");

  std::vector<std::int64_t> raw_labels;
  if (labeled) {
    std::vector<std::int32_t> lab(n);
    in.read(reinterpret_cast<char*>(lab.data()), static_cast<std::streamsize>(n * 4));
    if (!in) throw FormatError(path + ": truncated label block");
    raw_labels.assign(lab.begin(), lab.end());
  }
  in.peek();
  if (!in.eof()) throw FormatError(path + ": trailing bytes after payload");

  Eigen::MatrixXd values(n, d);
  for (std::uint32_t r = 0; r < n; ++r)
    for (std::uint32_t c = 0; c < d; ++c) {
      const float v = buf[static_cast<std::size_t>(r) * d + c];
      if (!std::isfinite(v))
        throw FormatError(path + ": non-finite value at row " + std::to_string(r + 1) +
                          ", column " + std::to_string(c + 1));
      values(r, c) = static_cast<double>(v);
    }

  return DatasetMatrix::create(std::move(values),
                               labeled ? remap_labels(raw_labels) : std::vector<std::int32_t>{});
}

DatasetMatrix load_dataset(const std::string& path, const std::string& format) {
  if (format == "csv") return load_csv(path);
  if (format == "rawf32") return load_rawf32(path);
  if (format != "auto") throw InvalidParameterError("unknown dataset format '" + format + "'");

  const auto dot = path.rfind('.');
  const std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
  if (ext == "csv") return load_csv(path);
  if (ext == "rawf32" || ext == "raw" || ext == "bin") return load_rawf32(path);

  std::ifstream probe(path, std::ios::binary);
  char magic[4] = {0, 0, 0, 0};
  probe.read(magic, 4);
  if (probe && (std::memcmp(magic, kMagicPlain, 4) == 0 ||
                std::memcmp(magic, kMagicLabeled, 4) == 0))
    return load_rawf32(path);
  return load_csv(path);
}

void save_rawf32(const DatasetMatrix& data, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");

  const bool labeled = data.has_labels();
  const std::uint32_t n = static_cast<std::uint32_t>(data.rows());
  const std::uint32_t d = static_cast<std::uint32_t>(data.dims());
  const std::uint32_t reserved = 0;
  out.write(labeled ? kMagicLabeled : kMagicPlain, 4);
  out.write(reinterpret_cast<const char*>(&n), 4);
  out.write(reinterpret_cast<const char*>(&d), 4);
  out.write(reinterpret_cast<const char*>(&reserved), 4);

  std::vector<float> buf(static_cast<std::size_t>(n) * d);
  for (std::uint32_t r = 0; r < n; ++r)
    for (std::uint32_t c = 0; c < d; ++c)
      buf[static_cast<std::size_t>(r) * d + c] = static_cast<float>(data.values(r, c));
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (labeled)
    out.write(reinterpret_cast<const char*>(data.labels.data()),
              static_cast<std::streamsize>(n * 4));
  if (!out) throw IoError("write failed for " + path);
}

Eigen::MatrixXd load_matrix_rawf32(const std::string& path) {
  const DatasetMatrix ds = load_rawf32(path);
  return ds.values;
}

void save_matrix_rawf32(const Eigen::MatrixXd& matrix, const std::string& path) {
  DatasetMatrix ds;
  ds.values = matrix;  // bypass create(): artifact matrices may have N >= 1
  if (matrix.rows() < 1 || matrix.cols() < 1)
    throw InvalidParameterError("save_matrix_rawf32: empty matrix");
  if (!matrix.allFinite())
    throw InvalidParameterError("save_matrix_rawf32: non-finite values");
  save_rawf32(ds, path);
}

std::uint64_t checksum_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[4096];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    const std::streamsize got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
    if (!in) break;
  }
  return h;
}

}  // namespace fast
