#include "lanova/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>

#include "lanova/error.hpp"

namespace lanova {

namespace {

std::vector<std::size_t> block_strides(const Dims& dims, unsigned mask) {
  std::vector<std::size_t> strides(dims.size(), 0);
  std::size_t stride = 1;
  for (std::size_t k = 0; k < dims.size(); ++k) {
    if (mask & (1u << k)) {
      strides[k] = stride;
      stride *= dims[k];
    }
  }
  return strides;
}

// Visits every linear offset of a tensor with `dims` together with the
// matching offset into a block whose strides are `strides` (0 for modes the
// block does not own).
template <class Fn>
void for_each_block_offset(const Dims& dims, const std::vector<std::size_t>& strides, Fn&& fn) {
  const std::size_t total = product(dims);
  if (total == 0) return;
  const std::size_t order = dims.size();
  if (order == 0) {
    fn(std::size_t{0}, std::size_t{0});
    return;
  }
  std::vector<std::size_t> index(order, 0);
  std::size_t block = 0;
  const std::size_t fast = dims[0];
  const std::size_t fast_stride = strides[0];
  for (std::size_t base = 0; base < total; base += fast) {
    std::size_t b = block;
    for (std::size_t i = 0; i < fast; ++i, b += fast_stride) fn(base + i, b);
    for (std::size_t k = 1; k < order; ++k) {
      block += strides[k];
      if (++index[k] < dims[k]) break;
      block -= strides[k] * dims[k];
      index[k] = 0;
    }
  }
}

}  // namespace

std::size_t product(const Dims& dims) {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
}

DenseTensor::DenseTensor() : dims_(), values_(1, 0.0) {}

DenseTensor::DenseTensor(Dims dims, double fill) : dims_(std::move(dims)), values_(product(dims_), fill) {}

DenseTensor::DenseTensor(Dims dims, std::vector<double> values)
    : dims_(std::move(dims)), values_(std::move(values)) {
  if (values_.size() != product(dims_)) {
    throw std::invalid_argument("DenseTensor: value count does not match dims");
  }
}

DenseTensor DenseTensor::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  std::vector<std::vector<double>> copy;
  for (const auto& r : rows) copy.emplace_back(r);
  return from_rows(copy);
}

DenseTensor DenseTensor::from_rows(const std::vector<std::vector<double>>& rows) {
  const std::size_t n = rows.size();
  const std::size_t p = n == 0 ? 0 : rows.front().size();
  DenseTensor t({n, p});
  for (std::size_t i = 0; i < n; ++i) {
    if (rows[i].size() != p) throw std::invalid_argument("DenseTensor::from_rows: ragged rows");
    for (std::size_t j = 0; j < p; ++j) t(i, j) = rows[i][j];
  }
  return t;
}

std::size_t DenseTensor::offset(std::span<const std::size_t> index) const {
  std::size_t off = 0;
  std::size_t stride = 1;
  for (std::size_t k = 0; k < dims_.size(); ++k) {
    off += index[k] * stride;
    stride *= dims_[k];
  }
  return off;
}

DenseTensor& DenseTensor::operator+=(const DenseTensor& other) {
  if (other.dims_ != dims_) throw std::invalid_argument("DenseTensor: shape mismatch");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

DenseTensor& DenseTensor::operator-=(const DenseTensor& other) {
  if (other.dims_ != dims_) throw std::invalid_argument("DenseTensor: shape mismatch");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
  return *this;
}

bool DenseTensor::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

double DenseTensor::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

std::size_t DenseTensor::count_nonzero() const {
  return static_cast<std::size_t>(
      std::count_if(values_.begin(), values_.end(), [](double v) { return v != 0.0; }));
}

DenseTensor operator+(DenseTensor lhs, const DenseTensor& rhs) { return lhs += rhs; }
DenseTensor operator-(DenseTensor lhs, const DenseTensor& rhs) { return lhs -= rhs; }

double max_abs_diff(const DenseTensor& a, const DenseTensor& b) {
  if (a.dims() != b.dims()) throw std::invalid_argument("max_abs_diff: shape mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

void require_nondegenerate(const Dims& dims) {
  for (std::size_t p : dims) {
    if (p < 2) throw ModelError("degenerate mode");
  }
}

void center_mode(DenseTensor& t, std::size_t mode) {
  const Dims& dims = t.dims();
  std::size_t inner = 1;
  for (std::size_t k = 0; k < mode; ++k) inner *= dims[k];
  const std::size_t levels = dims[mode];
  std::size_t outer = 1;
  for (std::size_t k = mode + 1; k < dims.size(); ++k) outer *= dims[k];

  auto v = t.values();
  std::vector<double> means(inner);
  const double inv = 1.0 / static_cast<double>(levels);
  for (std::size_t o = 0; o < outer; ++o) {
    double* slab = v.data() + o * inner * levels;
    std::fill(means.begin(), means.end(), 0.0);
    for (std::size_t j = 0; j < levels; ++j) {
      const double* row = slab + j * inner;
      for (std::size_t i = 0; i < inner; ++i) means[i] += row[i];
    }
    for (double& m : means) m *= inv;
    for (std::size_t j = 0; j < levels; ++j) {
      double* row = slab + j * inner;
      for (std::size_t i = 0; i < inner; ++i) row[i] -= means[i];
    }
  }
}

DenseTensor center_residuals(const DenseTensor& y) {
  require_nondegenerate(y.dims());
  DenseTensor r = y;
  for (std::size_t k = 0; k < r.order(); ++k) center_mode(r, k);
  return r;
}

DenseTensor lower_order_fit(const DenseTensor& y) { return y - center_residuals(y); }

Dims block_dims(const Dims& dims, unsigned mask) {
  Dims out;
  for (std::size_t k = 0; k < dims.size(); ++k) {
    if (mask & (1u << k)) out.push_back(dims[k]);
  }
  return out;
}

DenseTensor marginal_mean(const DenseTensor& y, unsigned mask) {
  DenseTensor block(block_dims(y.dims(), mask), 0.0);
  const auto strides = block_strides(y.dims(), mask);
  for_each_block_offset(y.dims(), strides, [&](std::size_t full, std::size_t b) { block[b] += y[full]; });
  const double scale = static_cast<double>(block.size()) / static_cast<double>(y.size());
  for (double& v : block.values()) v *= scale;
  return block;
}

void broadcast_add(DenseTensor& target, const DenseTensor& block, unsigned mask, double scale) {
  if (block.dims() != block_dims(target.dims(), mask)) {
    throw std::invalid_argument("broadcast_add: block shape does not match mask");
  }
  const auto strides = block_strides(target.dims(), mask);
  for_each_block_offset(target.dims(), strides,
                        [&](std::size_t full, std::size_t b) { target[full] += scale * block[b]; });
}

DenseTensor AnovaDecomposition::reassemble() const {
  DenseTensor out = residual;
  for (unsigned mask = 0; mask < effects.size(); ++mask) broadcast_add(out, effects[mask], mask);
  return out;
}

AnovaDecomposition anova_decompose(const DenseTensor& y) {
  require_nondegenerate(y.dims());
  if (y.order() >= 8 * sizeof(unsigned) - 1) throw std::invalid_argument("anova_decompose: too many modes");

  AnovaDecomposition out;
  out.dims = y.dims();
  const unsigned n_blocks = 1u << y.order();
  out.effects.reserve(n_blocks);
  for (unsigned mask = 0; mask < n_blocks; ++mask) {
    // Averaging over the other modes and then centering along the block's
    // own modes yields the inclusion-exclusion contrast of the margins.
    DenseTensor block = marginal_mean(y, mask);
    for (std::size_t k = 0; k < block.order(); ++k) center_mode(block, k);
    out.effects.push_back(std::move(block));
  }
  out.residual = DenseTensor(y.dims(), 0.0);
  out.residual = y - out.reassemble();
  return out;
}

SampleMoments sample_moments(const DenseTensor& r) {
  if (r.size() == 0) throw std::invalid_argument("sample_moments: empty tensor");
  double s2 = 0.0;
  double s4 = 0.0;
  for (double v : r.values()) {
    const double sq = v * v;
    s2 += sq;
    s4 += sq * sq;
  }
  const double n = static_cast<double>(r.size());
  return {s2 / n, s4 / n};
}

}  // namespace lanova
