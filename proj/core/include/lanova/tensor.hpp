#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace lanova {

using Dims = std::vector<std::size_t>;

/// Dense K-way array stored with the mode-1 index moving fastest.
///
/// A matrix with dims (n, p) therefore has entry (i, j) at offset i + n*j.
/// Order-0 tensors (empty dims) hold a single scalar; these are used for the
/// grand-mean block of an ANOVA decomposition.
class DenseTensor {
 public:
  DenseTensor();
  explicit DenseTensor(Dims dims, double fill = 0.0);
  DenseTensor(Dims dims, std::vector<double> values);

  /// Builds an n x p matrix from row-major nested lists (rows = mode 1).
  static DenseTensor from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static DenseTensor from_rows(const std::vector<std::vector<double>>& rows);

  const Dims& dims() const { return dims_; }
  std::size_t order() const { return dims_.size(); }
  std::size_t dim(std::size_t mode) const { return dims_[mode]; }
  std::size_t size() const { return values_.size(); }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::vector<double>& storage() { return values_; }

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  // Matrix accessors; require order() == 2.
  double& operator()(std::size_t i, std::size_t j) { return values_[i + dims_[0] * j]; }
  double operator()(std::size_t i, std::size_t j) const { return values_[i + dims_[0] * j]; }

  /// Offset of a full multi-index.
  std::size_t offset(std::span<const std::size_t> index) const;

  DenseTensor& operator+=(const DenseTensor& other);
  DenseTensor& operator-=(const DenseTensor& other);

  bool all_finite() const;
  double max_abs() const;
  std::size_t count_nonzero() const;

 private:
  Dims dims_;
  std::vector<double> values_;
};

DenseTensor operator+(DenseTensor lhs, const DenseTensor& rhs);
DenseTensor operator-(DenseTensor lhs, const DenseTensor& rhs);

/// Max-abs elementwise difference; shapes must agree.
double max_abs_diff(const DenseTensor& a, const DenseTensor& b);

std::size_t product(const Dims& dims);

/// Throws ModelError("degenerate mode") if any mode has fewer than two levels.
void require_nondegenerate(const Dims& dims);

/// Subtracts the mean along one mode, in place.
void center_mode(DenseTensor& t, std::size_t mode);

/// Applies the centering projection along every mode. The result does not
/// depend on the order in which modes are swept.
DenseTensor center_residuals(const DenseTensor& y);

/// Y minus its centered residuals: the OLS fit of all lower-order ANOVA
/// blocks (grand mean, main effects, and every interaction below the top one).
DenseTensor lower_order_fit(const DenseTensor& y);

/// Effect blocks indexed by a bitmask over modes: bit k set means mode k is
/// one of the block's own modes. Mask 0 is the grand mean; the full mask is
/// the top-order (elementwise) block.
struct AnovaDecomposition {
  Dims dims;
  std::vector<DenseTensor> effects;
  DenseTensor residual;

  std::size_t order() const { return dims.size(); }
  unsigned top_mask() const { return (1u << dims.size()) - 1u; }

  const DenseTensor& effect(unsigned mask) const { return effects.at(mask); }
  DenseTensor& effect(unsigned mask) { return effects.at(mask); }
  double grand_mean() const { return effects.at(0)[0]; }

  /// Broadcast-sum of every block plus the residual.
  DenseTensor reassemble() const;
};

/// Dims of the block for `mask` (mode order preserved).
Dims block_dims(const Dims& dims, unsigned mask);

/// Averages `y` over every mode not in `mask`.
DenseTensor marginal_mean(const DenseTensor& y, unsigned mask);

/// Adds `block` (dims = block_dims(target.dims(), mask)) to `target`,
/// broadcasting over the modes outside `mask`. `scale` multiplies the block.
void broadcast_add(DenseTensor& target, const DenseTensor& block, unsigned mask, double scale = 1.0);

/// Classical balanced-design K-way ANOVA decomposition. Every block sums to
/// zero along each of its own modes and the residual is zero up to rounding.
AnovaDecomposition anova_decompose(const DenseTensor& y);

struct SampleMoments {
  double mean_sq = 0.0;
  double mean_fourth = 0.0;
};

/// Second and fourth raw sample moments over all entries.
SampleMoments sample_moments(const DenseTensor& r);

}  // namespace lanova
