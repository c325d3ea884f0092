#include "io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

#include "lanova/error.hpp"

namespace lanova::cli {

namespace {

std::string strip_comment(const std::string& line) {
  const auto hash = line.find('#');
  return hash == std::string::npos ? line : line.substr(0, hash);
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

bool parse_double(const std::string& token, double& out) {
  const std::string t = trim(token);
  if (t.empty()) return false;
  const char* begin = t.data();
  const char* end = begin + t.size();
  if (*begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FileError("cannot read " + path.string());
  return in;
}

double checked_value(const std::string& token, const std::filesystem::path& path, std::size_t line) {
  double v = 0.0;
  if (!parse_double(token, v)) {
    throw FileError(path.string() + ":" + std::to_string(line) + ": not a number: '" + trim(token) + "'");
  }
  if (!std::isfinite(v)) throw ModelError(path.string() + ":" + std::to_string(line) + ": non-finite value");
  return v;
}

}  // namespace

FileFormat guess_format(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? FileFormat::csv : FileFormat::tensor;
}

FileFormat parse_format(const std::string& name) {
  if (name == "csv") return FileFormat::csv;
  if (name == "tensor") return FileFormat::tensor;
  throw std::invalid_argument("unknown format '" + name + "' (expected csv or tensor)");
}

DenseTensor read_tensor_file(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  std::string line;
  std::size_t line_no = 0;
  Dims dims;
  bool have_header = false;
  std::vector<double> values;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string body = trim(strip_comment(line));
    if (body.empty()) continue;
    if (!have_header) {
      if (body.rfind("dims:", 0) != 0) throw FileError(path.string() + ": missing 'dims:' header");
      std::istringstream header(body.substr(5));
      std::string tok;
      while (header >> tok) {
        std::size_t d = 0;
        const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), d);
        if (ec != std::errc() || ptr != tok.data() + tok.size() || d == 0) {
          throw FileError(path.string() + ": malformed dims header");
        }
        dims.push_back(d);
      }
      have_header = true;
      continue;
    }
    std::istringstream tokens(body);
    std::string tok;
    while (tokens >> tok) values.push_back(checked_value(tok, path, line_no));
  }
  if (!have_header) throw FileError(path.string() + ": missing 'dims:' header");
  if (values.size() != product(dims)) {
    throw FileError(path.string() + ": expected " + std::to_string(product(dims)) + " values, found " +
                    std::to_string(values.size()));
  }
  return DenseTensor(dims, std::move(values));
}

DenseTensor read_csv_matrix(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (rows.empty() && line_no == 1) {
      double ignored = 0.0;
      bool numeric = true;
      for (const auto& c : cells) numeric = numeric && parse_double(c, ignored);
      if (!numeric) continue;
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) row.push_back(checked_value(c, path, line_no));
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw FileError(path.string() + ":" + std::to_string(line_no) + ": ragged row");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw FileError(path.string() + ": no data rows");
  return DenseTensor::from_rows(rows);
}

DenseTensor read_input(const std::filesystem::path& path, FileFormat format) {
  return format == FileFormat::csv ? read_csv_matrix(path) : read_tensor_file(path);
}

std::string format_tensor(const DenseTensor& t) {
  std::ostringstream os;
  os.precision(17);
  os << "dims:";
  for (std::size_t d : t.dims()) os << ' ' << d;
  os << '\n';
  for (double v : t.values()) os << v << '\n';
  return os.str();
}

void write_tensor_file(const std::filesystem::path& path, const DenseTensor& t) {
  std::ofstream out(path);
  if (!out) throw FileError("cannot write " + path.string());
  out << format_tensor(t);
  if (!out) throw FileError("failed writing " + path.string());
}

void logit_transform(DenseTensor& t, double scale) {
  if (!(scale > 0.0)) throw std::invalid_argument("logit scale must be positive");
  for (double& v : t.values()) {
    const double x = v / scale;
    if (!(x > 0.0 && x < 1.0)) throw ModelError("logit transform needs values strictly between 0 and the scale");
    v = std::log(x / (1.0 - x));
  }
}

}  // namespace lanova::cli
