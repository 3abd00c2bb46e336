// Copyright 2026 The eaudit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <string>

#include "eaudit/opcore.hpp"
#include "eaudit/states.hpp"

namespace eaudit {

/// A value in bits that may be +∞. Never stored as a floating infinity.
struct ExtendedBits {
  double value = 0.0;
  bool infinite = false;

  static ExtendedBits finite(double v) { return {v, false}; }
  static ExtendedBits infinity() { return {0.0, true}; }

  std::string to_string(const char* fmt = "%.12e") const {
    if (infinite) return "inf";
    char buf[48];
    std::snprintf(buf, sizeof buf, fmt, value);
    return buf;
  }
};

/// Support test cutoffs for S(ρ||σ).
inline constexpr double kKernelCutoff = 1e-12;
inline constexpr double kSupportLeakTol = 1e-10;

inline double entropy_of_spectrum(const RealVector& lambda) {
  double h = 0.0;
  for (double v : lambda) {
    if (v > kEigenvalueFloor) h -= v * std::log2(v);
  }
  return h;
}

inline double von_neumann_entropy(const HermitianOperator& rho) {
  return entropy_of_spectrum(hermitian_eigenvalues(rho));
}

inline double von_neumann_entropy(const DensityOperator& rho) {
  return von_neumann_entropy(rho.op());
}

/// tr ρ log2 σ, restricted to σ's support (the caller checks support).
inline double cross_log_trace(const HermitianOperator& rho,
                              const EigenDecomposition& sigma) {
  const auto& u = sigma.eigenvectors;
  double acc = 0.0;
  for (Eigen::Index k = 0; k < u.cols(); ++k) {
    double lam = sigma.eigenvalues(k);
    if (lam <= kKernelCutoff) continue;
    double weight = (u.col(k).adjoint() * rho.matrix() * u.col(k))(0, 0).real();
    acc += weight * std::log2(lam);
  }
  return acc;
}

/// S(ρ||σ) = tr ρ log2 ρ - tr ρ log2 σ; +∞ when ρ leaks out of supp σ.
inline ExtendedBits quantum_relative_entropy(const HermitianOperator& rho,
                                             const HermitianOperator& sigma) {
  if (rho.dim() != sigma.dim()) {
    throw Error(ErrorKind::shape, "relative entropy between dimensions " +
                                      std::to_string(rho.dim()) + " and " +
                                      std::to_string(sigma.dim()));
  }
  auto eig = hermitian_eig(sigma);
  double leak = 0.0;
  for (Eigen::Index k = 0; k < eig.eigenvectors.cols(); ++k) {
    if (eig.eigenvalues(k) > kKernelCutoff) continue;
    const auto v = eig.eigenvectors.col(k);
    leak += (v.adjoint() * rho.matrix() * v)(0, 0).real();
  }
  if (leak > kSupportLeakTol) return ExtendedBits::infinity();
  double s = -von_neumann_entropy(rho) - cross_log_trace(rho, eig);
  return ExtendedBits::finite(s);
}

inline ExtendedBits quantum_relative_entropy(const DensityOperator& rho,
                                             const DensityOperator& sigma) {
  if (!(rho.dims() == sigma.dims())) {
    throw Error(ErrorKind::shape, "relative entropy between dims " +
                                      to_string(rho.dims()) + " and " +
                                      to_string(sigma.dims()));
  }
  return quantum_relative_entropy(rho.op(), sigma.op());
}

inline constexpr double kPurityTol = 1e-9;

/// Entanglement entropy S(tr_B ψ) of a pure bipartite state, in ebits.
inline double entropy_of_entanglement(const DensityOperator& psi,
                                      Subsystem traced = Subsystem::B) {
  double purity = (psi.matrix() * psi.matrix()).trace().real();
  if (purity < 1.0 - kPurityTol) {
    throw Error(ErrorKind::purity,
                "state is mixed (tr rho^2 = " + std::to_string(purity) + ")");
  }
  return von_neumann_entropy(
      partial_trace(psi.op(), psi.dims().dA, psi.dims().dB, traced));
}

}  // namespace eaudit
