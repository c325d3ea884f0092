#include <gtest/gtest.h>

#include "lanova/error.hpp"
#include "lanova/tensor.hpp"
#include "unit/test_helpers.hpp"

namespace lanova {
namespace {

TEST(DenseTensor, MatrixLayoutIsModeOneFastest) {
  const DenseTensor y = DenseTensor::from_rows({{1, 2, 3}, {4, 5, 6}});
  ASSERT_EQ(y.dims(), (Dims{2, 3}));
  EXPECT_EQ(y[0], 1);
  EXPECT_EQ(y[1], 4);
  EXPECT_EQ(y[2], 2);
  EXPECT_EQ(y(1, 2), 6);
  const std::size_t idx[] = {1, 2};
  EXPECT_EQ(y.offset(idx), 5u);
}

TEST(DenseTensor, RejectsMismatchedValueCount) {
  EXPECT_THROW(DenseTensor(Dims{2, 2}, std::vector<double>{1, 2, 3}), std::invalid_argument);
}

TEST(CenterResiduals, TwoByTwoExample) {
  const DenseTensor r = center_residuals(DenseTensor::from_rows({{1, 2}, {3, 5}}));
  const DenseTensor expected = DenseTensor::from_rows({{0.25, -0.25}, {-0.25, 0.25}});
  EXPECT_LT(max_abs_diff(r, expected), 1e-15);
}

TEST(CenterResiduals, ConstantTensorVanishes) {
  const DenseTensor r = center_residuals(DenseTensor(Dims{3, 4, 2}, 7.5));
  EXPECT_LT(r.max_abs(), 1e-14);
}

TEST(CenterResiduals, FixesDoublyCenteredPart) {
  DenseTensor c0 = center_residuals(testing::random_tensor({5, 4}, 11));
  DenseTensor y = c0;
  const double a[] = {1.0, -2.0, 0.5, 3.0, -1.0};
  const double b[] = {0.3, -0.7, 2.0, 4.0};
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 4; ++j) y(i, j) += 10.0 + a[i] + b[j];
  EXPECT_LT(max_abs_diff(center_residuals(y), c0), 1e-13);
}

TEST(CenterResiduals, DegenerateModeIsAnError) {
  EXPECT_THROW(center_residuals(DenseTensor(Dims{1, 4})), ModelError);
  EXPECT_THROW(center_residuals(DenseTensor(Dims{3, 4, 1})), ModelError);
}

TEST(CenterResiduals, ModeOrderDoesNotMatter) {
  const DenseTensor y = testing::random_tensor({4, 3, 5}, 3);
  DenseTensor reversed = y;
  for (std::size_t k = 3; k-- > 0;) center_mode(reversed, k);
  EXPECT_LT(max_abs_diff(center_residuals(y), reversed), 1e-13);
}

TEST(CenterResiduals, PropertyIdempotentAndInvariantToLowerOrderBlocks) {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const Dims dims = seed % 2 == 0 ? Dims{3 + seed % 4, 2 + seed % 5} : Dims{2 + seed % 3, 3, 2 + seed % 4};
    const DenseTensor y = testing::random_tensor(dims, seed);
    const DenseTensor r = center_residuals(y);
    EXPECT_LT(max_abs_diff(center_residuals(r), r), 1e-13);

    // Add arbitrary structure to every block below the top one.
    DenseTensor shifted = y;
    const unsigned top = (1u << dims.size()) - 1u;
    for (unsigned mask = 0; mask < top; ++mask) {
      broadcast_add(shifted, testing::random_tensor(block_dims(dims, mask), 1000 + seed * 16 + mask, 5.0), mask);
    }
    EXPECT_LT(max_abs_diff(center_residuals(shifted), r), 1e-12);
  }
}

TEST(AnovaDecompose, TwoByTwoExample) {
  const AnovaDecomposition d = anova_decompose(DenseTensor::from_rows({{1, 2}, {3, 5}}));
  EXPECT_NEAR(d.grand_mean(), 2.75, 1e-15);
  EXPECT_NEAR(d.effect(0b01)[0], -1.25, 1e-15);
  EXPECT_NEAR(d.effect(0b01)[1], 1.25, 1e-15);
  EXPECT_NEAR(d.effect(0b10)[0], -0.75, 1e-15);
  EXPECT_NEAR(d.effect(0b10)[1], 0.75, 1e-15);
  EXPECT_LT(max_abs_diff(d.effect(0b11), DenseTensor::from_rows({{0.25, -0.25}, {-0.25, 0.25}})), 1e-15);
  EXPECT_LT(d.residual.max_abs(), 1e-15);
}

TEST(AnovaDecompose, ZeroInputGivesZeroBlocks) {
  const AnovaDecomposition d = anova_decompose(DenseTensor(Dims{3, 2, 4}));
  for (const auto& block : d.effects) EXPECT_EQ(block.max_abs(), 0.0);
}

TEST(AnovaDecompose, RecoversBroadcastZeroSumBlocks) {
  const Dims dims{4, 3, 5};
  std::vector<DenseTensor> truth;
  DenseTensor y(dims);
  for (unsigned mask = 0; mask < 8; ++mask) {
    DenseTensor block = testing::random_tensor(block_dims(dims, mask), 50 + mask);
    for (std::size_t k = 0; k < block.order(); ++k) center_mode(block, k);
    broadcast_add(y, block, mask);
    truth.push_back(std::move(block));
  }
  const AnovaDecomposition d = anova_decompose(y);
  for (unsigned mask = 0; mask < 8; ++mask) {
    EXPECT_LT(max_abs_diff(d.effect(mask), truth[mask]), 1e-13) << "mask " << mask;
  }
}

TEST(AnovaDecompose, PropertyZeroSumAndExactReassembly) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Dims dims = seed % 2 == 0 ? Dims{2 + seed % 5, 3 + seed % 3} : Dims{3, 2 + seed % 3, 2, 2 + seed % 2};
    const DenseTensor y = testing::random_tensor(dims, seed, 3.0);
    const AnovaDecomposition d = anova_decompose(y);
    EXPECT_LT(max_abs_diff(d.reassemble(), y), 1e-10);
    EXPECT_LT(d.residual.max_abs(), 1e-10);
    for (unsigned mask = 1; mask < d.effects.size(); ++mask) {
      DenseTensor block = d.effect(mask);
      // A block sums to zero along each own mode iff centering leaves it unchanged.
      DenseTensor centered = block;
      for (std::size_t k = 0; k < centered.order(); ++k) center_mode(centered, k);
      EXPECT_LT(max_abs_diff(centered, block), 1e-12);
    }
    if (dims.size() == 2) EXPECT_LT(max_abs_diff(d.effect(0b11), center_residuals(y)), 1e-13);
  }
}

TEST(SampleMoments, Examples) {
  const auto ones = sample_moments(DenseTensor::from_rows({{1, -1}, {-1, 1}}));
  EXPECT_EQ(ones.mean_sq, 1.0);
  EXPECT_EQ(ones.mean_fourth, 1.0);
  const auto zeros = sample_moments(DenseTensor(Dims{2, 2}));
  EXPECT_EQ(zeros.mean_sq, 0.0);
  EXPECT_EQ(zeros.mean_fourth, 0.0);
  const auto spike = sample_moments(DenseTensor::from_rows({{2, 0}, {0, 0}}));
  EXPECT_EQ(spike.mean_sq, 1.0);
  EXPECT_EQ(spike.mean_fourth, 4.0);
}

TEST(MarginalMean, MatchesDirectAverages) {
  const DenseTensor y = testing::random_tensor({3, 4, 2}, 9);
  const DenseTensor m = marginal_mean(y, 0b101);
  ASSERT_EQ(m.dims(), (Dims{3, 2}));
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t k = 0; k < 2; ++k) {
      double s = 0.0;
      for (std::size_t j = 0; j < 4; ++j) s += y[i + 3 * (j + 4 * k)];
      EXPECT_NEAR(m[i + 3 * k], s / 4.0, 1e-14);
    }
  }
}

}  // namespace
}  // namespace lanova
