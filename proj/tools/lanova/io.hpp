#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "lanova/tensor.hpp"

namespace lanova::cli {

/// Unreadable or malformed input/output files.
class FileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class FileFormat { csv, tensor };

/// csv for a ".csv" extension, tensor otherwise.
FileFormat guess_format(const std::filesystem::path& path);
FileFormat parse_format(const std::string& name);

/// Tensor file: a "dims: p1 ... pK" header, then the values in
/// mode-1-fastest order (any whitespace between values; '#' starts a comment).
/// A bare "dims:" holds a single scalar.
DenseTensor read_tensor_file(const std::filesystem::path& path);
/// Plain numeric CSV, one matrix row per line. A first line that does not
/// parse as numbers is taken as a header and skipped.
DenseTensor read_csv_matrix(const std::filesystem::path& path);
DenseTensor read_input(const std::filesystem::path& path, FileFormat format);

void write_tensor_file(const std::filesystem::path& path, const DenseTensor& t);
std::string format_tensor(const DenseTensor& t);

/// log(x / (1 - x)) applied to x / scale; every scaled value must lie in (0, 1).
void logit_transform(DenseTensor& t, double scale = 1.0);

}  // namespace lanova::cli
