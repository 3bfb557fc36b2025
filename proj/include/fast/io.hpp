#pragma once

#include <cstdint>
#include <string>

#include "fast/dataset.hpp"

namespace fast {

/// CSV ingest: numeric columns, optional header row, labels taken from a
/// final column named "label". Non-finite values are rejected with 1-based
/// row/column coordinates.
DatasetMatrix load_csv(const std::string& path);

/// rawf32 ingest: 16-byte little-endian header (magic "FCRS" or "FCRL" with
/// trailing int32 labels, u32 N, u32 D, u32 reserved) followed by N*D
/// float32 row-major values.
DatasetMatrix load_rawf32(const std::string& path);

/// Dispatch by explicit format name ("csv", "rawf32") or "auto" (by file
/// extension, falling back to the magic bytes).
DatasetMatrix load_dataset(const std::string& path, const std::string& format);

void save_rawf32(const DatasetMatrix& data, const std::string& path);

/// Label-free matrix variants (used for embedding artifacts).
Eigen::MatrixXd load_matrix_rawf32(const std::string& path);
void save_matrix_rawf32(const Eigen::MatrixXd& matrix, const std::string& path);

/// FNV-1a over the file bytes (manifest checksum).
std::uint64_t checksum_file(const std::string& path);

}  // namespace fast
