// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "mvlpuf/optics.hpp"
#include "mvlpuf/rng.hpp"

using namespace mvlpuf;
using namespace mvlpuf::optics;
using std::numbers::pi;

namespace {

void expect_matrix_near(const TransferMatrix &a, const TransferMatrix &b, double tol) {
  EXPECT_LT(std::abs(a.m00 - b.m00), tol);
  EXPECT_LT(std::abs(a.m01 - b.m01), tol);
  EXPECT_LT(std::abs(a.m10 - b.m10), tol);
  EXPECT_LT(std::abs(a.m11 - b.m11), tol);
}

TransferMatrix random_matrix(Rng &rng) {
  auto z = [&] { return cplx{rng.uniform(-1, 1), rng.uniform(-1, 1)}; };
  return {z(), z(), z(), z()};
}

PolarizationState random_state(Rng &rng) {
  return {cplx{rng.uniform(-1, 1), rng.uniform(-1, 1)},
          cplx{rng.uniform(-1, 1), rng.uniform(-1, 1)}};
}

} // namespace

TEST(ApplyTransfer, Examples) {
  const PolarizationState s{cplx{0.3, -0.2}, cplx{0.1, 0.7}};
  const PolarizationState id = apply_transfer(TransferMatrix::identity(), s);
  EXPECT_EQ(id.ex, s.ex);
  EXPECT_EQ(id.ey, s.ey);

  const PolarizationState killed =
      apply_transfer(TransferMatrix::diagonal(0.0, 1.0), {cplx{1.0}, cplx{0.0}});
  EXPECT_EQ(killed.power(), 0.0);

  // R(a) = [[cos a, -sin a], [sin a, cos a]] turns x into +y.
  const PolarizationState rot = apply_transfer(TransferMatrix::rotation(pi / 2), {});
  EXPECT_NEAR(std::abs(rot.ex), 0.0, 1e-15);
  EXPECT_NEAR(rot.ey.real(), 1.0, 1e-15);
}

TEST(Compose, Examples) {
  const TransferMatrix I = TransferMatrix::identity();
  const std::vector<TransferMatrix> ii{I, I};
  expect_matrix_near(compose(ii), I, 0.0 + 1e-300);
  Rng rng(1, "test.compose");
  const TransferMatrix A = random_matrix(rng);
  const std::vector<TransferMatrix> one{A};
  expect_matrix_near(compose(one), A, 1e-300);
  const std::vector<TransferMatrix> rots{TransferMatrix::rotation(0.3),
                                         TransferMatrix::rotation(1.1)};
  expect_matrix_near(compose(rots), TransferMatrix::rotation(1.4), 1e-15);
}

TEST(Compose, OrderIsInputToOutput) {
  Rng rng(2, "test.compose.order");
  const TransferMatrix A = random_matrix(rng), B = random_matrix(rng);
  const PolarizationState s = random_state(rng);
  const std::vector<TransferMatrix> ab{A, B};
  const PolarizationState lhs = apply_transfer(compose(ab), s);
  const PolarizationState rhs = apply_transfer(B, apply_transfer(A, s));
  EXPECT_LT(std::abs(lhs.ex - rhs.ex), 1e-14);
  EXPECT_LT(std::abs(lhs.ey - rhs.ey), 1e-14);
}

TEST(Compose, Associative) {
  Rng rng(3, "test.compose.assoc");
  for (int i = 0; i < 100; ++i) {
    const TransferMatrix A = random_matrix(rng), B = random_matrix(rng), C = random_matrix(rng);
    const std::vector<TransferMatrix> abc{A, B, C}, ab{A, B};
    const std::vector<TransferMatrix> nested{compose(ab), C};
    expect_matrix_near(compose(abc), compose(nested), 1e-12);
  }
}

TEST(Compose, EmptyThrows) {
  EXPECT_THROW(compose(std::vector<TransferMatrix>{}), InvalidArgument);
}

TEST(TrenchCoupler, Examples) {
  expect_matrix_near(trench_coupler_transfer({}), TransferMatrix::identity(), 1e-15);
  EXPECT_NEAR(std::abs(fabry_perot_transmission(0.3, 0.0) - 1.0), 0.0, 1e-15);
  const cplx t = fabry_perot_transmission(0.3, pi / 2);
  EXPECT_NEAR(t.real(), 0.0, 1e-15);
  EXPECT_NEAR(t.imag(), 0.91 / 1.09, 1e-15);
  EXPECT_NEAR(std::abs(t), 0.8348623853, 1e-9);
}

TEST(TrenchCoupler, ClosedFormMatchesTruncatedSeries) {
  Rng rng(4, "test.fp");
  for (int i = 0; i < 200; ++i) {
    const double rho = rng.uniform(0.0, 0.9);
    const double delta = rng.uniform(0.0, 2 * pi);
    // Pass k adds two internal reflections and a round-trip phase.
    cplx sum{0.0};
    const cplx step = rho * rho * std::polar(1.0, 2 * delta);
    cplx term = (1 - rho * rho) * std::polar(1.0, delta);
    for (int k = 0; k < 200; ++k) {
      sum += term;
      term *= step;
    }
    EXPECT_LT(std::abs(fabry_perot_transmission(rho, delta) - sum), 1e-9);
  }
}

TEST(TrenchCoupler, PassiveAndRejectsDivergence) {
  Rng rng(5, "test.tc");
  for (int i = 0; i < 500; ++i) {
    const TrenchCouplerParams p{rng.uniform(0, 0.95), rng.uniform(0, 0.95),
                                rng.uniform(0, 2 * pi), rng.uniform(0, 2 * pi),
                                rng.normal(0, 0.5)};
    const PolarizationState s = random_state(rng);
    EXPECT_LE(apply_transfer(trench_coupler_transfer(p), s).power(), s.power() + 1e-9);
  }
  EXPECT_THROW(fabry_perot_transmission(1.0, 0.0), DivergentSeries);
  EXPECT_THROW(trench_coupler_transfer({0.2, 1.5, 0, 0, 0}), DivergentSeries);
  EXPECT_THROW(fabry_perot_transmission(-0.1, 0.0), InvalidArgument);
}

TEST(Waveguide, Examples) {
  expect_matrix_near(waveguide_transfer({0.7, 0.0, 0.0}), TransferMatrix::identity(), 1e-15);
  expect_matrix_near(waveguide_transfer({0.0, pi, 0.0}), TransferMatrix::diagonal(-1.0, 1.0),
                     1e-15);
  // Half-wave plate at 45 degrees: -[[0, 1], [1, 0]] with these conventions.
  const TransferMatrix h = waveguide_transfer({pi / 4, pi, 0.0});
  EXPECT_NEAR(std::abs(h.m00), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(h.m11), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(h.m01), 1.0, 1e-15);
  EXPECT_NEAR(std::abs(h.m10), 1.0, 1e-15);
  EXPECT_LT(std::abs(h.m01 - h.m10), 1e-15);
}

TEST(Waveguide, UnitaryAndNormPreserving) {
  Rng rng(6, "test.wg");
  for (int i = 0; i < 500; ++i) {
    const TransferMatrix m =
        waveguide_transfer({rng.normal(0, 1), rng.uniform(0, 2 * pi), rng.uniform(0, 2 * pi)});
    EXPECT_LT(unitarity_defect(m), 1e-9);
    const PolarizationState s = random_state(rng);
    EXPECT_LT(std::abs(apply_transfer(m, s).power() - s.power()), 1e-9 * s.power());
  }
}

TEST(EdgeCoupler, PassiveAndValidated) {
  const TransferMatrix m = edge_coupler_transfer({0.9, 0.5});
  const PolarizationState s{cplx{0.6}, cplx{0.0, 0.8}};
  EXPECT_LE(apply_transfer(m, s).power(), s.power() + 1e-9);
  EXPECT_THROW(edge_coupler_transfer({0.0, 0.5}), InvalidArgument);
  EXPECT_THROW(edge_coupler_transfer({0.5, 1.01}), InvalidArgument);
}

TEST(PowerFraction, Examples) {
  EXPECT_DOUBLE_EQ(polarized_power_fraction({cplx{1.0}, cplx{0.0}}), 1.0);
  EXPECT_DOUBLE_EQ(polarized_power_fraction({cplx{1.0}, cplx{1.0}}), 0.5);
  EXPECT_NEAR(polarized_power_fraction({cplx{0.6}, cplx{0.0, 0.8}}), 0.36, 1e-15);
  EXPECT_EQ(polarized_power_fraction({cplx{0.0}, cplx{0.0}}), 0.0);
}
