// SPDX-License-Identifier: Apache-2.0
/**
 * @file   optics.hpp
 * @brief  2x2 Jones-calculus transfer matrices and the parametric component
 *         models used by the photonic PUF cells.
 *
 * Conventions: a state is (ex, ey) = (TE, TM) complex amplitudes. The
 * rotation R(a) = [[cos a, -sin a], [sin a, cos a]] maps (1, 0) to
 * (cos a, sin a), so R(pi/2) takes horizontal to vertical with a positive
 * sign. Only the transmitted (bar) port of each coupler is modeled.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <vector>

#include "mvlpuf/error.hpp"

namespace mvlpuf::optics {

using cplx = std::complex<double>;

struct PolarizationState {
  cplx ex{1.0, 0.0};
  cplx ey{0.0, 0.0};

  double power() const noexcept { return std::norm(ex) + std::norm(ey); }
};

struct TransferMatrix {
  cplx m00{1.0}, m01{0.0}, m10{0.0}, m11{1.0};

  static TransferMatrix identity() noexcept { return {}; }

  static TransferMatrix diagonal(cplx a, cplx b) noexcept {
    return {a, cplx{0.0}, cplx{0.0}, b};
  }

  static TransferMatrix rotation(double angle) noexcept {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    return {cplx{c}, cplx{-s}, cplx{s}, cplx{c}};
  }

  friend TransferMatrix operator*(const TransferMatrix &a,
                                  const TransferMatrix &b) noexcept {
    return {a.m00 * b.m00 + a.m01 * b.m10, a.m00 * b.m01 + a.m01 * b.m11,
            a.m10 * b.m00 + a.m11 * b.m10, a.m10 * b.m01 + a.m11 * b.m11};
  }

  TransferMatrix adjoint() const noexcept {
    return {std::conj(m00), std::conj(m10), std::conj(m01), std::conj(m11)};
  }

  bool finite() const noexcept {
    for (const cplx &z : {m00, m01, m10, m11})
      if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
        return false;
    return true;
  }
};

inline PolarizationState apply_transfer(const TransferMatrix &m,
                                        const PolarizationState &s) noexcept {
  return {m.m00 * s.ex + m.m01 * s.ey, m.m10 * s.ex + m.m11 * s.ey};
}

/// Cascade ordered input-to-output: compose({A, B}) == B * A.
inline TransferMatrix compose(std::span<const TransferMatrix> ms) {
  if (ms.empty())
    throw InvalidArgument("compose() needs at least one matrix");
  TransferMatrix acc = ms.front();
  for (std::size_t i = 1; i < ms.size(); ++i)
    acc = ms[i] * acc;
  return acc;
}

/// Largest |(M^H M - I)_ij|; zero for an exactly unitary matrix.
inline double unitarity_defect(const TransferMatrix &m) noexcept {
  const TransferMatrix g = m.adjoint() * m;
  return std::max({std::abs(g.m00 - 1.0), std::abs(g.m01), std::abs(g.m10),
                   std::abs(g.m11 - 1.0)});
}

struct TrenchCouplerParams {
  double rho_te = 0.0;   // internal amplitude reflectance, [0, 1)
  double rho_tm = 0.0;
  double delta_te = 0.0; // single-pass phase, radians
  double delta_tm = 0.0;
  double kappa = 0.0;    // TE/TM cross-coupling rotation, radians
};

struct WaveguideParams {
  double theta = 0.0; // birefringence axis angle
  double phi_te = 0.0;
  double phi_tm = 0.0;
};

struct EdgeCouplerParams {
  double a_te = 1.0; // amplitude transmittance, (0, 1]
  double a_tm = 1.0;
};

/// Closed-form sum of the multi-pass series for one polarization mode:
/// sum_k (1 - rho^2) e^{i delta} (rho^2 e^{2 i delta})^k.
inline cplx fabry_perot_transmission(double rho, double delta) {
  if (!(rho >= 0.0))
    throw InvalidArgument("reflectance must be >= 0");
  if (rho >= 1.0)
    throw DivergentSeries("reflectance >= 1: multi-pass series diverges");
  const double r2 = rho * rho;
  return (1.0 - r2) * std::polar(1.0, delta) /
         (1.0 - r2 * std::polar(1.0, 2.0 * delta));
}

inline TransferMatrix trench_coupler_transfer(const TrenchCouplerParams &p) {
  const cplx t_te = fabry_perot_transmission(p.rho_te, p.delta_te);
  const cplx t_tm = fabry_perot_transmission(p.rho_tm, p.delta_tm);
  return TransferMatrix::rotation(p.kappa) *
         TransferMatrix::diagonal(t_te, t_tm) *
         TransferMatrix::rotation(-p.kappa);
}

inline TransferMatrix waveguide_transfer(const WaveguideParams &p) noexcept {
  return TransferMatrix::rotation(p.theta) *
         TransferMatrix::diagonal(std::polar(1.0, p.phi_te),
                                  std::polar(1.0, p.phi_tm)) *
         TransferMatrix::rotation(-p.theta);
}

inline TransferMatrix edge_coupler_transfer(const EdgeCouplerParams &p) {
  if (!(p.a_te > 0.0 && p.a_te <= 1.0 && p.a_tm > 0.0 && p.a_tm <= 1.0))
    throw InvalidArgument("edge-coupler transmittance must lie in (0, 1]");
  return TransferMatrix::diagonal(cplx{p.a_te}, cplx{p.a_tm});
}

/// |ex|^2 / (|ex|^2 + |ey|^2); zero-power input returns 0.
inline double polarized_power_fraction(const PolarizationState &s) noexcept {
  const double px = std::norm(s.ex);
  const double total = px + std::norm(s.ey);
  if (!(total > 0.0))
    return 0.0;
  return px / total;
}

} // namespace mvlpuf::optics
