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

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "eaudit/error.hpp"
#include "eaudit/opcore.hpp"

namespace eaudit {

inline constexpr double kStateTol = 1e-9;

struct BipartiteDims {
  std::size_t dA = 2;
  std::size_t dB = 2;

  std::size_t total() const { return dA * dB; }
  bool small_enough_for_ppt_exactness() const { return dA * dB <= 6; }
  friend bool operator==(const BipartiteDims&, const BipartiteDims&) = default;
};

inline std::string to_string(const BipartiteDims& d) {
  return "(" + std::to_string(d.dA) + "," + std::to_string(d.dB) + ")";
}

/// Unit-trace positive semidefinite operator on H_A ⊗ H_B. Only
/// `validate_state` constructs one, so every instance satisfies the
/// invariants.
class DensityOperator {
 public:
  DensityOperator() = default;

  const HermitianOperator& op() const { return op_; }
  const ComplexMatrix& matrix() const { return op_.matrix(); }
  const BipartiteDims& dims() const { return dims_; }
  std::size_t dim() const { return op_.dim(); }
  /// Total negative eigenvalue mass removed at validation (0 if none).
  double clamped_mass() const { return clamped_mass_; }

 private:
  friend DensityOperator validate_state(const HermitianOperator&,
                                        const BipartiteDims&);
  HermitianOperator op_;
  BipartiteDims dims_;
  double clamped_mass_ = 0.0;
};

/// Checks, in order: dimension factorization, Hermiticity (already enforced
/// by HermitianOperator), trace, positivity, and the factor sizes. Slightly
/// negative eigenvalues in [-1e-9, 0) are clamped and the trace restored.
inline DensityOperator validate_state(const HermitianOperator& m,
                                      const BipartiteDims& dims) {
  if (dims.dA * dims.dB != m.dim()) {
    throw Error(ErrorKind::shape, "dims " + to_string(dims) +
                                      " do not match operator dimension " +
                                      std::to_string(m.dim()));
  }
  double tr = m.trace();
  if (std::abs(tr - 1.0) > kStateTol) {
    throw Error(ErrorKind::trace, "trace " + std::to_string(tr) + " != 1");
  }
  auto eig = hermitian_eig(m);
  double lmin = eig.eigenvalues.size() ? eig.eigenvalues.minCoeff() : 0.0;
  if (lmin < -kStateTol) {
    throw Error(ErrorKind::positivity,
                "min eigenvalue " + std::to_string(lmin) + " < -1e-9");
  }
  if (dims.dA < 2 || dims.dB < 2) {
    throw Error(ErrorKind::shape,
                "both factors need dimension >= 2, got " + to_string(dims));
  }
  DensityOperator out;
  out.dims_ = dims;
  if (lmin < 0.0) {
    double removed = 0.0;
    for (double v : eig.eigenvalues)
      if (v < 0.0) removed -= v;
    HermitianOperator clamped =
        apply_function(eig, [](double v) { return v < 0.0 ? 0.0 : v; });
    clamped *= 1.0 / clamped.trace();
    out.op_ = std::move(clamped);
    out.clamped_mass_ = removed;
  } else {
    out.op_ = m;
  }
  return out;
}

inline DensityOperator validate_state(const ComplexMatrix& m,
                                      const BipartiteDims& dims) {
  return validate_state(HermitianOperator(m), dims);
}

/// Trace-normalizes, clamps away eigensolver noise and validates. For
/// operators that are states up to rounding (solver outputs, mixtures).
inline DensityOperator normalize_state(const HermitianOperator& m,
                                       const BipartiteDims& dims) {
  auto eig = hermitian_eig(m);
  HermitianOperator fixed =
      apply_function(eig, [](double v) { return v < 0.0 ? 0.0 : v; });
  fixed *= 1.0 / fixed.trace();
  return validate_state(fixed, dims);
}

// ---------------------------------------------------------------------------
// Multi-copy ordering

/// Permutation taking the naive (A1 B1)(A2 B2)... index order of an n-fold
/// tensor power to (A1 A2 ... An)(B1 B2 ... Bn). Entry t of the result is
/// the naive index of grouped index t.
inline std::vector<std::size_t> copy_grouping_permutation(
    const BipartiteDims& dims, std::size_t copies) {
  std::size_t da_n = 1, db_n = 1;
  for (std::size_t c = 0; c < copies; ++c) {
    da_n *= dims.dA;
    db_n *= dims.dB;
  }
  std::vector<std::size_t> perm(da_n * db_n);
  std::vector<std::size_t> a(copies), b(copies);
  for (std::size_t ia = 0; ia < da_n; ++ia) {
    std::size_t r = ia;
    for (std::size_t c = copies; c-- > 0;) {
      a[c] = r % dims.dA;
      r /= dims.dA;
    }
    for (std::size_t ib = 0; ib < db_n; ++ib) {
      std::size_t s = ib;
      for (std::size_t c = copies; c-- > 0;) {
        b[c] = s % dims.dB;
        s /= dims.dB;
      }
      std::size_t naive = 0;
      for (std::size_t c = 0; c < copies; ++c)
        naive = naive * dims.total() + a[c] * dims.dB + b[c];
      perm[ia * db_n + ib] = naive;
    }
  }
  return perm;
}

inline ComplexMatrix permute_basis(const ComplexMatrix& m,
                                   const std::vector<std::size_t>& perm) {
  ComplexMatrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < perm.size(); ++i)
    for (std::size_t j = 0; j < perm.size(); ++j)
      out(i, j) = m(perm[i], perm[j]);
  return out;
}

inline ComplexVector permute_basis(const ComplexVector& v,
                                   const std::vector<std::size_t>& perm) {
  ComplexVector out(v.size());
  for (std::size_t i = 0; i < perm.size(); ++i) out(i) = v(perm[i]);
  return out;
}

/// ρ⊗σ regarded as a bipartite state on (A_ρ A_σ)|(B_ρ B_σ).
inline DensityOperator bipartite_tensor(const DensityOperator& rho,
                                        const DensityOperator& sigma,
                                        std::size_t cap = kDefaultDimensionCap) {
  if (rho.dim() * sigma.dim() > cap) {
    throw Error(ErrorKind::size, "tensor dimension exceeds cap");
  }
  const auto& d1 = rho.dims();
  const auto& d2 = sigma.dims();
  ComplexMatrix naive = kron(rho.matrix(), sigma.matrix());
  BipartiteDims out{d1.dA * d2.dA, d1.dB * d2.dB};
  std::vector<std::size_t> perm(out.total());
  for (std::size_t a1 = 0; a1 < d1.dA; ++a1)
    for (std::size_t a2 = 0; a2 < d2.dA; ++a2)
      for (std::size_t b1 = 0; b1 < d1.dB; ++b1)
        for (std::size_t b2 = 0; b2 < d2.dB; ++b2) {
          std::size_t grouped = (a1 * d2.dA + a2) * out.dB + b1 * d2.dB + b2;
          perm[grouped] = (a1 * d1.dB + b1) * d2.total() + a2 * d2.dB + b2;
        }
  return validate_state(HermitianOperator::trusted(permute_basis(naive, perm)),
                        out);
}

/// ρ^⊗n with dims (dA^n, dB^n), A factors grouped ahead of B factors.
inline DensityOperator tensor_power(const DensityOperator& rho,
                                    std::size_t copies,
                                    std::size_t cap = kDefaultDimensionCap) {
  if (copies == 0) throw Error(ErrorKind::domain, "copies must be >= 1");
  double dim = std::pow(static_cast<double>(rho.dim()),
                        static_cast<double>(copies));
  if (dim > static_cast<double>(cap)) {
    throw Error(ErrorKind::size, "dimension of " + std::to_string(copies) +
                                     " copies exceeds cap " +
                                     std::to_string(cap));
  }
  DensityOperator out = rho;
  for (std::size_t c = 1; c < copies; ++c) out = bipartite_tensor(out, rho, cap);
  return out;
}

/// Plain (ungrouped) n-fold Kronecker power of an operator.
inline HermitianOperator operator_power(const HermitianOperator& h,
                                        std::size_t copies,
                                        std::size_t cap = kDefaultDimensionCap) {
  HermitianOperator out = h;
  for (std::size_t c = 1; c < copies; ++c) out = tensor_product(out, h, cap);
  return out;
}

// ---------------------------------------------------------------------------
// Reference states

namespace bell {

inline ComplexVector vector(int which) {
  const double r = 1.0 / std::sqrt(2.0);
  ComplexVector v = ComplexVector::Zero(4);
  switch (which) {
    case 0: v(0) = r; v(3) = r; break;    // φ+
    case 1: v(0) = r; v(3) = -r; break;   // φ-
    case 2: v(1) = r; v(2) = r; break;    // ψ+
    case 3: v(1) = r; v(2) = -r; break;   // ψ-
    default: throw Error(ErrorKind::domain, "Bell index out of range");
  }
  return v;
}

inline HermitianOperator projector(int which) {
  return HermitianOperator::projector(vector(which));
}

}  // namespace bell

/// (φ+)^⊗k with the k A-qubits grouped first: Σ_i |i⟩_A|i⟩_B / √(2^k).
inline DensityOperator make_max_entangled(std::size_t k,
                                          std::size_t cap = kDefaultDimensionCap) {
  if (k == 0) throw Error(ErrorKind::domain, "k must be >= 1");
  if (2 * k >= 64 || (std::size_t{1} << (2 * k)) > cap) {
    throw Error(ErrorKind::size, "(phi+)^k dimension exceeds cap");
  }
  std::size_t d = std::size_t{1} << k;
  ComplexVector v = ComplexVector::Zero(d * d);
  for (std::size_t i = 0; i < d; ++i) v(i * d + i) = 1.0 / std::sqrt(double(d));
  return validate_state(HermitianOperator::projector(v), {d, d});
}

/// p·|ψ-⟩⟨ψ-| + (1-p)·I/4.
inline DensityOperator make_werner(double p) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw Error(ErrorKind::domain, "werner parameter must lie in [0,1]");
  }
  HermitianOperator m =
      p * bell::projector(3) + ((1.0 - p) / 4.0) * HermitianOperator::identity(4);
  return validate_state(m, {2, 2});
}

/// f·φ+ + (1-f)(I - φ+)/(d²-1) on d⊗d.
inline DensityOperator make_isotropic(double f, std::size_t d = 2) {
  if (!(f >= 0.0 && f <= 1.0)) {
    throw Error(ErrorKind::domain, "isotropic fidelity must lie in [0,1]");
  }
  if (d < 2) throw Error(ErrorKind::domain, "local dimension must be >= 2");
  ComplexVector v = ComplexVector::Zero(d * d);
  for (std::size_t i = 0; i < d; ++i) v(i * d + i) = 1.0 / std::sqrt(double(d));
  HermitianOperator phi = HermitianOperator::projector(v);
  double n = static_cast<double>(d * d);
  HermitianOperator m =
      f * phi + ((1.0 - f) / (n - 1.0)) * (HermitianOperator::identity(d * d) - phi);
  return validate_state(m, {d, d});
}

/// Σ p_i over (φ+, φ-, ψ+, ψ-).
inline DensityOperator make_bell_diagonal(const std::array<double, 4>& p) {
  double sum = 0.0;
  for (double x : p) {
    if (!(x >= 0.0)) throw Error(ErrorKind::domain, "Bell weights must be >= 0");
    sum += x;
  }
  if (std::abs(sum - 1.0) > kStateTol) {
    throw Error(ErrorKind::domain, "Bell weights must sum to 1");
  }
  HermitianOperator m = HermitianOperator::zero(4);
  for (int i = 0; i < 4; ++i) m += p[i] * bell::projector(i);
  return validate_state(m, {2, 2});
}

inline DensityOperator make_product(const HermitianOperator& a,
                                    const HermitianOperator& b) {
  return validate_state(tensor_product(a, b), {a.dim(), b.dim()});
}

inline DensityOperator make_pure(const ComplexVector& psi,
                                 const BipartiteDims& dims) {
  return validate_state(HermitianOperator::projector(psi / psi.norm()), dims);
}

/// D(ρ,σ) = ||ρ - σ||_1, without the customary factor 1/2.
inline double trace_distance(const DensityOperator& rho,
                             const DensityOperator& sigma) {
  if (!(rho.dims() == sigma.dims())) {
    throw Error(ErrorKind::shape, "trace distance between dims " +
                                      to_string(rho.dims()) + " and " +
                                      to_string(sigma.dims()));
  }
  return trace_norm(rho.op() - sigma.op());
}

// ---------------------------------------------------------------------------
// Random sampling (deterministic for a given engine state)

using Rng = std::mt19937_64;

inline ComplexVector random_unit_vector(std::size_t d, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  ComplexVector v(d);
  for (std::size_t i = 0; i < d; ++i) {
    double re = g(rng);
    double im = g(rng);
    v(i) = Complex(re, im);
  }
  return v / v.norm();
}

inline ComplexMatrix ginibre(std::size_t rows, std::size_t cols, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  ComplexMatrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) {
      double re = g(rng);
      double im = g(rng);
      m(i, j) = Complex(re, im);
    }
  return m;
}

/// Induced-measure random state of the given rank (rank 0 means full).
inline DensityOperator random_state(const BipartiteDims& dims, Rng& rng,
                                    std::size_t rank = 0) {
  std::size_t d = dims.total();
  ComplexMatrix g = ginibre(d, rank == 0 ? d : rank, rng);
  ComplexMatrix m = g * g.adjoint();
  m /= m.trace().real();
  return validate_state(HermitianOperator::trusted(m), dims);
}

inline ComplexMatrix random_unitary(std::size_t d, Rng& rng) {
  Eigen::HouseholderQR<ComplexMatrix> qr(ginibre(d, d, rng));
  ComplexMatrix q = qr.householderQ();
  ComplexMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (std::size_t i = 0; i < d; ++i) {
    Complex ph = r(i, i) / std::abs(r(i, i));
    q.col(i) *= ph;
  }
  return q;
}

/// Σ_j p_j ρA_j ⊗ ρB_j with random local mixed states.
inline DensityOperator random_separable_state(const BipartiteDims& dims,
                                              std::size_t terms, Rng& rng) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  HermitianOperator m = HermitianOperator::zero(dims.total());
  std::vector<double> p(terms);
  double total = 0.0;
  for (auto& x : p) total += (x = u(rng));
  for (std::size_t j = 0; j < terms; ++j) {
    ComplexMatrix ga = ginibre(dims.dA, dims.dA, rng);
    ComplexMatrix gb = ginibre(dims.dB, dims.dB, rng);
    ComplexMatrix ra = ga * ga.adjoint();
    ComplexMatrix rb = gb * gb.adjoint();
    ra /= ra.trace().real();
    rb /= rb.trace().real();
    m += (p[j] / total) * HermitianOperator::trusted(kron(ra, rb));
  }
  return normalize_state(m, dims);
}

inline DensityOperator conjugate(const DensityOperator& rho,
                                 const ComplexMatrix& u) {
  return normalize_state(
      HermitianOperator::trusted(u * rho.matrix() * u.adjoint()), rho.dims());
}

}  // namespace eaudit
