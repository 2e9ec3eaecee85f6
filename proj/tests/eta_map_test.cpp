#include <gtest/gtest.h>

#include "opval/eta_map.hpp"
#include "test_support.hpp"

namespace opval {
namespace {

using testing::max_abs_diff;

const Complex I1(0.0, 1.0);

TEST(Toeplitz3, AllOnesPattern) {
  const CMat out = EtaMap::toeplitz3()(toeplitz3_pattern(1.0, 1.0, 1.0));
  const CMat expected = (1.0 / 3.0) * CMat{{3.0, 0.0, 3.0}, {0.0, 5.0, 0.0}, {3.0, 0.0, 3.0}};
  EXPECT_LE(max_abs_diff(out, expected), 1e-15);
}

TEST(Toeplitz3, EntryFormulasOnPattern) {
  const Complex f(0.3, -1.2), g(2.0, 0.5), h(-0.7, 0.1);
  const CMat out = EtaMap::toeplitz3()(toeplitz3_pattern(f, g, h));
  EXPECT_LE(std::abs(out(0, 0) - (2.0 * f + g) / 3.0), 1e-15);
  EXPECT_LE(std::abs(out(0, 2) - (g + 2.0 * h) / 3.0), 1e-15);
  EXPECT_LE(std::abs(out(1, 1) - (2.0 * f + g + 2.0 * h) / 3.0), 1e-15);
  EXPECT_LE(std::abs(out(2, 0) - out(0, 2)), 0.0);
  EXPECT_LE(std::abs(out(2, 2) - out(0, 0)), 0.0);
  EXPECT_EQ(toeplitz3_pattern_deviation(out), 0.0);
}

TEST(Toeplitz3, WarnsOnPatternDeviation) {
  double seen = -1.0;
  const EtaMap eta = EtaMap::toeplitz3([&](double d) { seen = d; });
  CMat w = toeplitz3_pattern(1.0, 1.0, 1.0);
  w(0, 1) = 1e-9;
  eta(w);
  EXPECT_EQ(seen, -1.0);
  w(0, 1) = 1e-6;
  eta(w);
  EXPECT_NEAR(seen, 1e-6, 1e-20);
  const CMat ignored = eta(w);
  EXPECT_EQ(toeplitz3_pattern_deviation(ignored), 0.0);
}

TEST(Toeplitz3, DimensionIsThree) {
  const EtaMap eta = EtaMap::toeplitz3();
  EXPECT_EQ(eta.dim(), 3u);
  EXPECT_EQ(eta.kind(), "toeplitz3");
  EXPECT_TRUE(eta.is_linear());
  EXPECT_THROW(eta(CMat::identity(2)), DimensionMismatch);
}

TEST(Kraus, IdentityOperator) {
  Rng rng(1);
  const CMat w = testing::random_cmat(3, rng);
  EXPECT_LE(max_abs_diff(EtaMap::kraus(3, {CMat::identity(3)})(w), w), 1e-15);
}

TEST(Kraus, SwapOnDiagonal) {
  const std::vector<Complex> d{2.0, 0.5};
  const std::vector<Complex> e{0.5, 2.0};
  const EtaMap eta = EtaMap::kraus(2, {testing::swap2()});
  EXPECT_LE(max_abs_diff(eta(CMat::diagonal(d)), CMat::diagonal(e)), 1e-15);
}

TEST(Kraus, EmptyIsZero) {
  EXPECT_EQ(fro_norm(testing::scalar_zero_eta()(testing::scalar(3.0))), 0.0);
}

TEST(Kraus, RejectsWrongOperatorDimension) {
  EXPECT_THROW(EtaMap::kraus(2, {CMat::identity(3)}), DimensionMismatch);
}

TEST(LinearTensor, IdentityKrausGivesIdentityTensor) {
  const CMat l = EtaMap::kraus(2, {CMat::identity(2)}).to_linear_tensor();
  EXPECT_LE(max_abs_diff(l, CMat::identity(4)), 1e-15);
}

TEST(LinearTensor, KrausTensorIsConjKronA) {
  Rng rng(2);
  const CMat a = testing::random_cmat(3, rng);
  const EtaMap eta = EtaMap::kraus(3, {a});
  EXPECT_LE(max_abs_diff(eta.to_linear_tensor(), kron(conj(a), a)), 1e-14);
}

void expect_tensor_matches_on_units(const EtaMap& eta) {
  const std::size_t d = eta.dim();
  const CMat l = eta.to_linear_tensor();
  ASSERT_EQ(l.dim(), d * d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      const auto v = vec(CMat::unit(d, i, j));
      const auto expected = vec(eta(CMat::unit(d, i, j)));
      for (std::size_t r = 0; r < d * d; ++r) {
        Complex s{};
        for (std::size_t c = 0; c < d * d; ++c) s += l(r, c) * v[c];
        EXPECT_LE(std::abs(s - expected[r]), 1e-12);
      }
    }
}

TEST(LinearTensor, BasisConsistency) {
  Rng rng(3);
  expect_tensor_matches_on_units(EtaMap::toeplitz3());
  expect_tensor_matches_on_units(testing::random_kraus(4, rng, 3));
  const EtaMap lt = EtaMap::linear_tensor(3, EtaMap::toeplitz3().to_linear_tensor());
  expect_tensor_matches_on_units(lt);
  EXPECT_EQ(lt.to_linear_tensor().dim(), 9u);
}

TEST(LinearTensor, EvalMatchesTensorProduct) {
  Rng rng(4);
  const EtaMap k = testing::random_kraus(3, rng, 2);
  const EtaMap lt = EtaMap::linear_tensor(3, k.to_linear_tensor());
  for (int n = 0; n < 20; ++n) {
    const CMat w = testing::random_cmat(3, rng);
    EXPECT_LE(max_abs_diff(lt(w), k(w)), 1e-13);
  }
}

TEST(LinearTensor, WrongShapeThrows) {
  EXPECT_THROW(EtaMap::linear_tensor(2, CMat::identity(3)), DimensionMismatch);
}

TEST(Callback, NotLinear) {
  const EtaMap cb = EtaMap::callback(
      2, [](const CMat& w) { return w; }, [](double r) { return r; });
  EXPECT_FALSE(cb.is_linear());
  EXPECT_THROW(cb.to_linear_tensor(), NotLinear);
  EXPECT_DOUBLE_EQ(cb.bound(3.0), 3.0);
}

TEST(Callback, RejectedWhenNotPositive) {
  EXPECT_THROW(EtaMap::callback(
                   1, [](const CMat& w) { return -1.0 * w; }, [](double r) { return r; }),
               EtaRejected);
}

TEST(Linearity, RandomCombinations) {
  Rng rng(5);
  const std::vector<EtaMap> maps{EtaMap::toeplitz3(), testing::random_kraus(3, rng, 3),
                                 EtaMap::linear_tensor(3, testing::random_kraus(3, rng, 1).to_linear_tensor())};
  for (const auto& eta : maps) {
    for (int n = 0; n < 50; ++n) {
      const CMat w1 = testing::random_cmat(3, rng);
      const CMat w2 = testing::random_cmat(3, rng);
      const Complex a(rng.normal(), rng.normal());
      const Complex b(rng.normal(), rng.normal());
      const CMat lhs = eta(a * w1 + b * w2);
      const CMat rhs = a * eta(w1) + b * eta(w2);
      EXPECT_LE(max_abs_diff(lhs, rhs), 1e-12 * std::max(1.0, fro_norm(rhs)));
    }
  }
}

TEST(Hermiticity, Preserved) {
  Rng rng(6);
  const std::vector<EtaMap> maps{EtaMap::toeplitz3(), testing::random_kraus(3, rng, 2)};
  for (const auto& eta : maps) {
    for (int n = 0; n < 50; ++n) {
      const CMat out = eta(testing::random_hermitian(3, rng));
      EXPECT_LE(max_abs_diff(out, adjoint(out)), 1e-14);
    }
  }
}

TEST(Positivity, KrausPasses) {
  Rng rng(7);
  for (std::size_t d : {1u, 2u, 4u}) {
    const auto report = check_positivity_preserving(testing::random_kraus(d, rng, 2), 200, 11);
    EXPECT_TRUE(report.passed);
    EXPECT_EQ(report.trials, 200u);
    EXPECT_GE(report.worst_margin, -1e-10);
  }
}

TEST(Positivity, Toeplitz3TensorPasses) {
  const EtaMap lt = EtaMap::linear_tensor(3, EtaMap::toeplitz3().to_linear_tensor());
  const auto report = check_positivity_preserving(lt, 500, 12);
  EXPECT_TRUE(report.passed);
  ASSERT_TRUE(report.choi_lambda_min.has_value());
  EXPECT_TRUE(check_positivity_preserving(EtaMap::toeplitz3(), 500, 13).passed);
}

TEST(Positivity, NegatedIdentityFails) {
  const CMat minus_i = -1.0 * CMat::identity(4);
  EXPECT_THROW(EtaMap::linear_tensor(2, minus_i), EtaRejected);
  const EtaMap unchecked = EtaMap::linear_tensor(2, minus_i, Validation::skip);
  const auto report = check_positivity_preserving(unchecked, 50, 14);
  EXPECT_FALSE(report.passed);
  EXPECT_LT(report.worst_margin, 0.0);
  EXPECT_LT(*report.choi_lambda_min, 0.0);
}

TEST(Positivity, TransposeIsPositiveButNotCompletelyPositive) {
  // W -> W^T keeps Re W >= 0 but has a negative Choi eigenvalue.
  CMat l(4);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) l(j + 2 * i, i + 2 * j) = 1.0;
  const EtaMap t = EtaMap::linear_tensor(2, l);
  const auto report = check_positivity_preserving(t, 200, 15);
  EXPECT_TRUE(report.passed);
  EXPECT_LT(*report.choi_lambda_min, -0.5);
}

TEST(Choi, KrausIsPsd) {
  Rng rng(8);
  const CMat c = choi_matrix(testing::random_kraus(3, rng, 2));
  EXPECT_EQ(c.dim(), 9u);
  EXPECT_GE(lambda_min(HermMat(c)), -1e-12);
}

TEST(Bound, KrausExamples) {
  EXPECT_DOUBLE_EQ(EtaMap::kraus(2, {CMat::identity(2)}).bound(5.0), 5.0);
  EXPECT_NEAR(EtaMap::kraus(2, {testing::swap2()}).bound(2.0), 2.0, 1e-14);
  EXPECT_NEAR(EtaMap::kraus(1, {testing::scalar(2.0), testing::scalar(I1)}).bound(1.0), 5.0, 1e-14);
}

TEST(Bound, DominatesSampledNorms) {
  Rng rng(9);
  const std::vector<EtaMap> maps{EtaMap::toeplitz3(), testing::random_kraus(3, rng, 3),
                                 EtaMap::linear_tensor(3, EtaMap::toeplitz3().to_linear_tensor())};
  for (const auto& eta : maps) {
    const double b = eta.bound(1.0);
    EXPECT_GT(b, 0.0);
    for (int n = 0; n < 100; ++n) {
      CMat w = testing::random_in_closure(3, rng, 1e-3);
      w = (1.0 / op_norm(w)) * w;
      EXPECT_LE(op_norm(eta(w)), b * (1 + 1e-12));
    }
  }
}

TEST(Bound, ScalesLinearlyInRadius) {
  const EtaMap eta = EtaMap::toeplitz3();
  EXPECT_NEAR(eta.bound(4.0), 4.0 * eta.bound(1.0), 1e-12);
}

}  // namespace
}  // namespace opval
