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

// Dense complex Hermitian operator algebra. Everything downstream (states,
// entropies, the SDP solver, the measures) is written against this header.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "eaudit/error.hpp"

namespace eaudit {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

inline constexpr std::size_t kDefaultDimensionCap = std::size_t{1} << 16;
inline constexpr double kHermiticityTol = 1e-10;
/// Eigenvalues at or below this magnitude count as zero.
inline constexpr double kEigenvalueFloor = 1e-12;
inline constexpr double kLn2 = std::numbers::ln2;

/// Square complex matrix that is Hermitian within `kHermiticityTol`. The
/// stored matrix is the exact Hermitian part of whatever was passed in.
class HermitianOperator {
 public:
  HermitianOperator() = default;

  explicit HermitianOperator(const ComplexMatrix& m,
                             double tol = kHermiticityTol) {
    if (m.rows() != m.cols()) {
      throw Error(ErrorKind::shape, "operator must be square, got " +
                                        std::to_string(m.rows()) + "x" +
                                        std::to_string(m.cols()));
    }
    double asym = m.size() == 0 ? 0.0
                                : (m - m.adjoint()).cwiseAbs().maxCoeff();
    if (asym > tol) {
      throw Error(ErrorKind::hermiticity,
                  "max |H - H^dagger| = " + std::to_string(asym));
    }
    m_ = 0.5 * (m + m.adjoint());
  }

  static HermitianOperator identity(std::size_t d) {
    return trusted(ComplexMatrix::Identity(d, d));
  }

  static HermitianOperator zero(std::size_t d) {
    return trusted(ComplexMatrix::Zero(d, d));
  }

  static HermitianOperator diagonal(std::span<const double> values) {
    ComplexMatrix m = ComplexMatrix::Zero(values.size(), values.size());
    for (std::size_t i = 0; i < values.size(); ++i) m(i, i) = values[i];
    return trusted(std::move(m));
  }

  static HermitianOperator diagonal(std::initializer_list<double> values) {
    return diagonal(std::span<const double>(values.begin(), values.size()));
  }

  /// |v><v| (v is not normalized here).
  static HermitianOperator projector(const ComplexVector& v) {
    return trusted(v * v.adjoint());
  }

  /// Skips the tolerance check; only symmetrizes. For results of operations
  /// that are Hermitian by construction.
  static HermitianOperator trusted(ComplexMatrix m) {
    HermitianOperator h;
    h.m_ = 0.5 * (m + m.adjoint());
    return h;
  }

  std::size_t dim() const { return static_cast<std::size_t>(m_.rows()); }
  const ComplexMatrix& matrix() const { return m_; }
  Complex operator()(std::size_t i, std::size_t j) const { return m_(i, j); }
  double trace() const { return m_.trace().real(); }

  /// Real inner product tr(A B) for Hermitian A, B.
  double inner(const HermitianOperator& other) const {
    return (m_.cwiseProduct(other.m_.conjugate())).sum().real();
  }

  HermitianOperator& operator+=(const HermitianOperator& o) {
    m_ += o.m_;
    return *this;
  }
  HermitianOperator& operator-=(const HermitianOperator& o) {
    m_ -= o.m_;
    return *this;
  }
  HermitianOperator& operator*=(double s) {
    m_ *= s;
    return *this;
  }

  friend HermitianOperator operator+(HermitianOperator a,
                                     const HermitianOperator& b) {
    return a += b;
  }
  friend HermitianOperator operator-(HermitianOperator a,
                                     const HermitianOperator& b) {
    return a -= b;
  }
  friend HermitianOperator operator*(double s, HermitianOperator a) {
    return a *= s;
  }
  friend HermitianOperator operator*(HermitianOperator a, double s) {
    return a *= s;
  }
  friend HermitianOperator operator-(HermitianOperator a) { return a *= -1.0; }

 private:
  ComplexMatrix m_;
};

/// Eigenvalues ascending; eigenvectors are the columns of a unitary matrix.
struct EigenDecomposition {
  RealVector eigenvalues;
  ComplexMatrix eigenvectors;
};

/// Tridiagonalization + implicit QL (Eigen's self-adjoint solver). Fixed
/// operation order, so output bits depend only on input bits.
inline EigenDecomposition hermitian_eig(const HermitianOperator& h) {
  if (h.dim() == 0) return {};
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(h.matrix());
  if (solver.info() != Eigen::Success) {
    throw NumericalError("Hermitian eigensolver did not converge",
                         (h.matrix() - h.matrix().adjoint()).norm());
  }
  return {solver.eigenvalues(), solver.eigenvectors()};
}

inline RealVector hermitian_eigenvalues(const HermitianOperator& h) {
  if (h.dim() == 0) return {};
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(h.matrix(),
                                                      Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("Hermitian eigensolver did not converge", 0.0);
  }
  return solver.eigenvalues();
}

inline double min_eigenvalue(const HermitianOperator& h) {
  return hermitian_eigenvalues(h).minCoeff();
}

/// U f(Λ) U† for a real scalar function f.
template <typename F>
HermitianOperator apply_function(const EigenDecomposition& eig, F&& f) {
  const auto& u = eig.eigenvectors;
  ComplexMatrix scaled = u;
  for (Eigen::Index j = 0; j < u.cols(); ++j) {
    scaled.col(j) *= f(eig.eigenvalues(j));
  }
  return HermitianOperator::trusted(scaled * u.adjoint());
}

template <typename F>
HermitianOperator apply_function(const HermitianOperator& h, F&& f) {
  return apply_function(hermitian_eig(h), std::forward<F>(f));
}

inline ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

inline ComplexVector kron(const ComplexVector& a, const ComplexVector& b) {
  ComplexVector out(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    out.segment(i * b.size(), b.size()) = a(i) * b;
  }
  return out;
}

/// (A⊗B)[(i·dB+k),(j·dB+l)] = A[i,j]·B[k,l].
inline HermitianOperator tensor_product(
    const HermitianOperator& a, const HermitianOperator& b,
    std::size_t cap = kDefaultDimensionCap) {
  if (a.dim() * b.dim() > cap) {
    throw Error(ErrorKind::size, "tensor product dimension " +
                                     std::to_string(a.dim() * b.dim()) +
                                     " exceeds cap " + std::to_string(cap));
  }
  return HermitianOperator::trusted(kron(a.matrix(), b.matrix()));
}

enum class Subsystem { A, B };

namespace detail {

inline void check_bipartite(std::size_t dim, std::size_t da, std::size_t db) {
  if (da == 0 || db == 0 || da * db != dim) {
    throw Error(ErrorKind::shape, "dims (" + std::to_string(da) + "," +
                                      std::to_string(db) +
                                      ") do not factor dimension " +
                                      std::to_string(dim));
  }
}

}  // namespace detail

/// Traces out `traced`; the result lives on the other factor.
inline ComplexMatrix partial_trace(const ComplexMatrix& m, std::size_t da,
                                   std::size_t db, Subsystem traced) {
  detail::check_bipartite(static_cast<std::size_t>(m.rows()), da, db);
  if (traced == Subsystem::B) {
    ComplexMatrix out = ComplexMatrix::Zero(da, da);
    for (std::size_t i = 0; i < da; ++i)
      for (std::size_t j = 0; j < da; ++j)
        for (std::size_t k = 0; k < db; ++k) out(i, j) += m(i * db + k, j * db + k);
    return out;
  }
  ComplexMatrix out = ComplexMatrix::Zero(db, db);
  for (std::size_t i = 0; i < da; ++i)
    for (std::size_t k = 0; k < db; ++k)
      for (std::size_t l = 0; l < db; ++l) out(k, l) += m(i * db + k, i * db + l);
  return out;
}

inline HermitianOperator partial_trace(const HermitianOperator& m,
                                       std::size_t da, std::size_t db,
                                       Subsystem traced) {
  return HermitianOperator::trusted(partial_trace(m.matrix(), da, db, traced));
}

/// Transpose on the B factor: blocks stay in place, each dB×dB block is
/// transposed.
inline ComplexMatrix partial_transpose(const ComplexMatrix& m, std::size_t da,
                                       std::size_t db) {
  detail::check_bipartite(static_cast<std::size_t>(m.rows()), da, db);
  ComplexMatrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < da; ++i)
    for (std::size_t j = 0; j < da; ++j)
      out.block(i * db, j * db, db, db) =
          m.block(i * db, j * db, db, db).transpose();
  return out;
}

inline HermitianOperator partial_transpose(const HermitianOperator& m,
                                           std::size_t da, std::size_t db) {
  return HermitianOperator::trusted(partial_transpose(m.matrix(), da, db));
}

/// tr(H)_+ : sum of the strictly positive eigenvalues.
inline double positive_part_trace(const HermitianOperator& h) {
  double sum = 0.0;
  for (double v : hermitian_eigenvalues(h)) {
    if (v > kEigenvalueFloor) sum += v;
  }
  return sum;
}

inline double trace_norm(const HermitianOperator& h) {
  double sum = 0.0;
  for (double v : hermitian_eigenvalues(h)) sum += std::abs(v);
  return sum;
}

/// Divided difference of log2: (log2 a - log2 b)/(a - b), with the
/// derivative 1/(a ln 2) on the diagonal.
inline double log2_divided_difference(double a, double b) {
  if (a == b) return 1.0 / (a * kLn2);
  double x = (a - b) / b;
  if (std::abs(x) < 1e-8) return (1.0 - 0.5 * x + x * x / 3.0) / (b * kLn2);
  return std::log1p(x) / ((a - b) * kLn2);
}

struct LogDerivative {
  HermitianOperator value;
  /// Eigenvalues of σ raised to the floor before differentiation; nonzero
  /// means σ was numerically singular.
  std::size_t floored = 0;
};

/// Adjoint Fréchet derivative of log2 at σ applied to ρ, i.e. the operator
/// L with d/dt tr(ρ log2(σ + tΔ)) = tr(L Δ) at t = 0.
inline LogDerivative log_frechet_adjoint(const EigenDecomposition& sigma_eig,
                                         const HermitianOperator& rho) {
  const auto& u = sigma_eig.eigenvectors;
  RealVector lam = sigma_eig.eigenvalues;
  std::size_t floored = 0;
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    if (lam(i) < kEigenvalueFloor) {
      lam(i) = kEigenvalueFloor;
      ++floored;
    }
  }
  ComplexMatrix rt = u.adjoint() * rho.matrix() * u;
  for (Eigen::Index i = 0; i < rt.rows(); ++i)
    for (Eigen::Index j = 0; j < rt.cols(); ++j)
      rt(i, j) *= log2_divided_difference(lam(i), lam(j));
  return {HermitianOperator::trusted(u * rt * u.adjoint()), floored};
}

inline LogDerivative log_frechet_adjoint(const HermitianOperator& sigma,
                                         const HermitianOperator& rho) {
  return log_frechet_adjoint(hermitian_eig(sigma), rho);
}

}  // namespace eaudit
