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

// The separable set and its two computable stand-ins:
//  - outer: the PPT spectrahedron {σ ⪰ 0, σ^Γ ⪰ 0, tr σ = 1};
//  - inner: convex hulls of pure product vectors found by seesaw.
// For dA·dB ≤ 6 the outer set is exactly the separable set.

#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include "eaudit/opcore.hpp"
#include "eaudit/sdp.hpp"
#include "eaudit/states.hpp"

namespace eaudit {

inline constexpr double kPptTol = 1e-9;

struct PptVerdict {
  bool is_ppt = false;
  double min_pt_eigenvalue = 0.0;
  /// True when PPT ⇔ separable for these dims (2⊗2, 2⊗3).
  bool exact = false;
};

inline PptVerdict is_ppt(const HermitianOperator& rho, const BipartiteDims& dims) {
  double lmin = min_eigenvalue(partial_transpose(rho, dims.dA, dims.dB));
  return {lmin >= -kPptTol, lmin, dims.small_enough_for_ppt_exactness()};
}

inline PptVerdict is_ppt(const DensityOperator& rho) {
  return is_ppt(rho.op(), rho.dims());
}

/// |a⟩ ⊗ |b⟩ with unit vectors a, b.
struct ProductVertex {
  ComplexVector a;
  ComplexVector b;

  ComplexVector joint() const { return kron(a, b); }
  HermitianOperator projector() const { return HermitianOperator::projector(joint()); }

  /// Vertex of the grouped two-system tensor product (A1A2 | B1B2).
  friend ProductVertex tensor(const ProductVertex& x, const ProductVertex& y) {
    return {kron(x.a, y.a), kron(x.b, y.b)};
  }
};

// ---------------------------------------------------------------------------
// SDP building blocks for PPT constraints

namespace detail {

inline std::size_t pt_row(std::size_t r, std::size_t c, const BipartiteDims& d) {
  return (r / d.dB) * d.dB + c % d.dB;
}

inline bool is_real_matrix(const ComplexMatrix& m) {
  return m.imag().cwiseAbs().maxCoeff() == 0.0;
}

// Term whose trace against X gives Re X(r,c) (imag=false) or Im X(r,c).
inline HermitianTerm entry_functional(std::size_t block, std::size_t r,
                                      std::size_t c, bool imag, double scale) {
  if (r == c) return {block, r, r, Complex(scale, 0.0)};
  return {block, r, c, imag ? Complex(0.0, 0.5 * scale) : Complex(0.5 * scale, 0.0)};
}

/// Adds the constraints  Y - X^Γ = rhs  entrywise (Re parts, plus Im parts
/// unless `real_only`), where X lives on `xb` and Y on `yb`.
inline void add_partial_transpose_link(SdpProblem& p, std::size_t xb,
                                       std::size_t yb, const BipartiteDims& d,
                                       const ComplexMatrix& rhs, bool real_only) {
  const std::size_t n = d.total();
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = r; c < n; ++c) {
      std::size_t rp = pt_row(r, c, d);
      std::size_t cp = pt_row(c, r, d);
      for (bool imag : {false, true}) {
        if (imag && (r == c || real_only)) continue;
        SdpConstraint con;
        con.terms.push_back(entry_functional(yb, r, c, imag, 1.0));
        con.terms.push_back(entry_functional(xb, rp, cp, imag, -1.0));
        con.rhs = imag ? rhs(r, c).imag() : rhs(r, c).real();
        p.constraints.push_back(std::move(con));
      }
    }
  }
}

inline SdpConstraint trace_constraint(std::size_t block, std::size_t n, double rhs) {
  SdpConstraint c;
  for (std::size_t i = 0; i < n; ++i) c.terms.push_back({block, i, i, Complex(1.0, 0.0)});
  c.rhs = rhs;
  return c;
}

// Degenerate minimal eigenspaces resolve to the projection of the first
// standard basis vector with non-negligible overlap, phase-fixed so that
// the first nonzero coordinate is real positive.
inline std::pair<double, ComplexVector> canonical_min_eigvec(const ComplexMatrix& h) {
  auto eig = hermitian_eig(HermitianOperator::trusted(h));
  double l0 = eig.eigenvalues(0);
  double scale = std::max(1.0, eig.eigenvalues.cwiseAbs().maxCoeff());
  Eigen::Index mult = 1;
  while (mult < eig.eigenvalues.size() &&
         eig.eigenvalues(mult) - l0 <= 1e-12 * scale)
    ++mult;
  ComplexVector v = eig.eigenvectors.col(0);
  if (mult > 1) {
    const auto basis = eig.eigenvectors.leftCols(mult);
    for (Eigen::Index k = 0; k < h.rows(); ++k) {
      ComplexVector proj = basis * basis.row(k).adjoint();
      if (proj.norm() > 1e-6) {
        v = proj / proj.norm();
        break;
      }
    }
  }
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v(i)) > 1e-12) {
      v *= std::conj(v(i)) / std::abs(v(i));
      break;
    }
  }
  return {l0, v};
}

// (a† ⊗ I) G (a ⊗ I) on B.
inline ComplexMatrix contract_a(const ComplexMatrix& g, const ComplexVector& a,
                                const BipartiteDims& d) {
  ComplexMatrix out = ComplexMatrix::Zero(d.dB, d.dB);
  for (std::size_t i = 0; i < d.dA; ++i) {
    if (a(i) == 0.0) continue;
    for (std::size_t j = 0; j < d.dA; ++j)
      out += std::conj(a(i)) * a(j) * g.block(i * d.dB, j * d.dB, d.dB, d.dB);
  }
  return out;
}

// (I ⊗ b†) G (I ⊗ b) on A.
inline ComplexMatrix contract_b(const ComplexMatrix& g, const ComplexVector& b,
                                const BipartiteDims& d) {
  ComplexMatrix out(d.dA, d.dA);
  for (std::size_t i = 0; i < d.dA; ++i)
    for (std::size_t j = 0; j < d.dA; ++j)
      out(i, j) = b.dot(g.block(i * d.dB, j * d.dB, d.dB, d.dB) * b);
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Linear minimization oracles

struct PptLmoResult {
  DensityOperator argmin;
  double value = 0.0;
  /// Dual objective: no PPT state does better than this.
  double lower_bound = 0.0;
  double certified_gap = 0.0;
  std::size_t sdp_iterations = 0;
};

/// min tr(Gσ) over PPT states, via the SDP with blocks σ and τ = σ^Γ.
inline PptLmoResult lmo_ppt(const HermitianOperator& g, const BipartiteDims& dims,
                            const SdpOptions& options = {}) {
  const std::size_t n = dims.total();
  if (g.dim() != n) throw Error(ErrorKind::shape, "LMO operator does not match dims");
  // shift and scale for conditioning: tr σ = 1 makes the shift exact
  double shift = g.trace() / double(n);
  ComplexMatrix centered = g.matrix() - shift * ComplexMatrix::Identity(n, n);
  double scale = centered.cwiseAbs().maxCoeff();
  if (scale == 0.0) scale = 1.0;
  SdpProblem p;
  std::size_t sb = p.add_block(n);
  std::size_t tb = p.add_block(n);
  p.objective[sb] = centered / scale;
  bool real = detail::is_real_matrix(g.matrix());
  detail::add_partial_transpose_link(p, sb, tb, dims, ComplexMatrix::Zero(n, n), real);
  p.constraints.push_back(detail::trace_constraint(sb, n, 1.0));
  SdpSolver solver(options);
  auto sol = solver.solve(p);
  require_near_optimal(sol, "PPT linear minimization");
  PptLmoResult out;
  out.argmin = normalize_state(HermitianOperator::trusted(sol.primal[sb]), dims);
  out.value = scale * sol.primal_objective + shift;
  out.lower_bound = scale * std::min(sol.primal_objective, sol.dual_objective) + shift;
  out.certified_gap = scale * sol.gap;
  out.sdp_iterations = sol.iterations;
  return out;
}

struct SeesawResult {
  ProductVertex vertex;
  double value = 0.0;
  std::size_t restart = 0;
};

struct SeesawOptions {
  std::size_t restarts = 32;
  std::uint64_t seed = 0;
  std::size_t max_sweeps = 500;
  double stall_tol = 1e-10;
};

inline Rng restart_rng(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32),
                    std::uint32_t(index), std::uint32_t(index >> 32)};
  return Rng(seq);
}

/// Alternating minimization of ⟨a⊗b|G|a⊗b⟩; each half-step is an exact
/// minimal-eigenvector solve. Best over restarts by (value, restart index).
inline SeesawResult lmo_product_seesaw(const HermitianOperator& g,
                                       const BipartiteDims& dims,
                                       const SeesawOptions& opt = {}) {
  if (g.dim() != dims.total()) {
    throw Error(ErrorKind::shape, "LMO operator does not match dims");
  }
  SeesawResult best;
  best.value = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < std::max<std::size_t>(1, opt.restarts); ++r) {
    Rng rng = restart_rng(opt.seed, r);
    ComplexVector a = random_unit_vector(dims.dA, rng);
    ComplexVector b;
    double value = std::numeric_limits<double>::infinity();
    for (std::size_t sweep = 0; sweep < opt.max_sweeps; ++sweep) {
      b = detail::canonical_min_eigvec(detail::contract_a(g.matrix(), a, dims)).second;
      auto [lam, a_next] = detail::canonical_min_eigvec(detail::contract_b(g.matrix(), b, dims));
      a = a_next;
      bool stalled = value - lam <= opt.stall_tol;
      value = std::min(value, lam);
      if (stalled) break;
    }
    if (value < best.value) {
      best.value = value;
      best.vertex = {a, b};
      best.restart = r;
    }
  }
  // report the value at the returned vertex exactly
  ComplexVector v = best.vertex.joint();
  best.value = v.dot(g.matrix() * v).real();
  return best;
}

enum class OverlapMethod { ppt, seesaw, both };

struct OverlapBounds {
  std::optional<double> lower;  ///< attained by a product vector (seesaw)
  std::optional<double> upper;  ///< PPT relaxation
};

/// Bounds on max_{σ separable} tr(σ T).
inline OverlapBounds max_separable_overlap(const HermitianOperator& target,
                                           const BipartiteDims& dims,
                                           OverlapMethod method = OverlapMethod::both,
                                           const SeesawOptions& seesaw = {}) {
  OverlapBounds out;
  HermitianOperator g = -target;
  if (method != OverlapMethod::ppt) out.lower = -lmo_product_seesaw(g, dims, seesaw).value;
  if (method != OverlapMethod::seesaw) out.upper = -lmo_ppt(g, dims).value;
  return out;
}

inline OverlapBounds max_separable_overlap(const DensityOperator& target,
                                           OverlapMethod method = OverlapMethod::both,
                                           const SeesawOptions& seesaw = {}) {
  return max_separable_overlap(target.op(), target.dims(), method, seesaw);
}

// ---------------------------------------------------------------------------
// Explicit decompositions

/// min ½ wᵀQw - cᵀw over w ≥ 0 (Lawson–Hanson active set on the Gram form).
inline RealVector nonnegative_least_squares(const RealMatrix& q, const RealVector& c,
                                            std::size_t max_iter = 500) {
  const Eigen::Index k = c.size();
  RealVector w = RealVector::Zero(k);
  std::vector<bool> passive(k, false);
  auto solve_passive = [&]() {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index i = 0; i < k; ++i)
      if (passive[i]) idx.push_back(i);
    RealVector z = RealVector::Zero(k);
    if (idx.empty()) return z;
    RealMatrix qp(idx.size(), idx.size());
    RealVector cp(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
      cp(i) = c(idx[i]);
      for (std::size_t j = 0; j < idx.size(); ++j) qp(i, j) = q(idx[i], idx[j]);
    }
    RealVector zp = qp.ldlt().solve(cp);
    for (std::size_t i = 0; i < idx.size(); ++i) z(idx[i]) = zp(i);
    return z;
  };
  for (std::size_t it = 0; it < max_iter; ++it) {
    RealVector grad = c - q * w;
    Eigen::Index enter = -1;
    double best = 1e-14 * std::max(1.0, c.cwiseAbs().maxCoeff());
    for (Eigen::Index i = 0; i < k; ++i)
      if (!passive[i] && grad(i) > best) {
        best = grad(i);
        enter = i;
      }
    if (enter < 0) break;
    passive[enter] = true;
    for (std::size_t inner = 0; inner < max_iter; ++inner) {
      RealVector z = solve_passive();
      bool feasible = true;
      for (Eigen::Index i = 0; i < k; ++i)
        if (passive[i] && z(i) <= 0.0) feasible = false;
      if (feasible) {
        w = z;
        break;
      }
      double alpha = 1.0;
      for (Eigen::Index i = 0; i < k; ++i)
        if (passive[i] && z(i) <= 0.0) alpha = std::min(alpha, w(i) / (w(i) - z(i)));
      w += alpha * (z - w);
      for (Eigen::Index i = 0; i < k; ++i)
        if (passive[i] && w(i) <= 1e-15) {
          passive[i] = false;
          w(i) = 0.0;
        }
    }
  }
  return w;
}

struct SeparableDecomposition {
  std::vector<ProductVertex> vertices;
  std::vector<double> weights;
  double trace_distance = 0.0;  ///< ||ρ - Σ w_k |v_k⟩⟨v_k| ||_1
  bool found = false;
};

/// Attempts ρ ≈ Σ w_k |a_k b_k⟩⟨a_k b_k| by conditional gradient on the
/// Frobenius residual: seesaw supplies new vertices, weights are refit by
/// nonnegative least squares. At most `max_vertices` vertices are kept.
inline SeparableDecomposition find_separable_decomposition(
    const DensityOperator& rho, std::size_t max_vertices = 100,
    double target = 1e-6, std::size_t max_rounds = 400,
    const SeesawOptions& seesaw = {}) {
  const std::size_t n = rho.dim();
  std::vector<ProductVertex> verts;
  std::vector<ComplexMatrix> proj;
  RealVector w;
  SeparableDecomposition out;
  ComplexMatrix sigma = ComplexMatrix::Zero(n, n);
  auto inner = [](const ComplexMatrix& x, const ComplexMatrix& y) {
    return x.cwiseProduct(y.conjugate()).sum().real();
  };
  for (std::size_t round = 0; round < max_rounds; ++round) {
    HermitianOperator residual = HermitianOperator::trusted(sigma - rho.matrix());
    out.trace_distance = trace_norm(residual);
    if (out.trace_distance <= target) break;
    SeesawOptions so = seesaw;
    so.seed = seesaw.seed + 7919 * round;
    auto lmo = lmo_product_seesaw(residual, rho.dims(), so);
    ComplexMatrix p = lmo.vertex.projector().matrix();
    if (inner(residual.matrix(), p) >= inner(residual.matrix(), sigma) - 1e-15) break;
    verts.push_back(lmo.vertex);
    proj.push_back(p);
    const Eigen::Index k = Eigen::Index(proj.size());
    RealMatrix q(k, k);
    RealVector c(k);
    for (Eigen::Index i = 0; i < k; ++i) {
      c(i) = inner(proj[i], rho.matrix());
      for (Eigen::Index j = 0; j < k; ++j) q(i, j) = inner(proj[i], proj[j]);
    }
    w = nonnegative_least_squares(q, c);
    // keep only supported vertices, then enforce the cap
    std::vector<std::size_t> order(k);
    for (Eigen::Index i = 0; i < k; ++i) order[i] = std::size_t(i);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return w(x) > w(y); });
    std::vector<ProductVertex> nv;
    std::vector<ComplexMatrix> np;
    std::vector<double> nw;
    for (std::size_t i : order) {
      if (w(i) <= 0.0 || nv.size() >= max_vertices) continue;
      nv.push_back(verts[i]);
      np.push_back(proj[i]);
      nw.push_back(w(i));
    }
    verts = std::move(nv);
    proj = std::move(np);
    w = RealVector::Map(nw.data(), Eigen::Index(nw.size()));
    sigma.setZero();
    for (std::size_t i = 0; i < proj.size(); ++i) sigma += w(i) * proj[i];
  }
  out.vertices = verts;
  out.weights.assign(w.data(), w.data() + w.size());
  out.trace_distance = trace_norm(HermitianOperator::trusted(sigma - rho.matrix()));
  out.found = out.trace_distance <= target;
  return out;
}

}  // namespace eaudit
