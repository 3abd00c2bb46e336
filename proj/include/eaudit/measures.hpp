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

// Entanglement measures:
//   E_R(ρ)  = min_{σ separable} S(ρ||σ)
//   R_G(ρ)  = min { s : (ρ + sπ)/(1+s) separable for some state π }
//   LR_G(ρ) = log2(1 + R_G(ρ))
// and their per-copy sequences on ρ^⊗n.

#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "eaudit/entropy.hpp"
#include "eaudit/separability.hpp"

namespace eaudit {

enum class SeparableSet { ppt, hull };

inline const char* to_string(SeparableSet s) {
  return s == SeparableSet::ppt ? "ppt" : "hull";
}

enum class BoundKind { lower_ppt, upper_hull, exact_smalldim };

inline const char* to_string(BoundKind k) {
  switch (k) {
    case BoundKind::lower_ppt: return "lower-ppt";
    case BoundKind::upper_hull: return "upper-hull";
    case BoundKind::exact_smalldim: return "exact-smalldim";
  }
  return "?";
}

struct FwTraceEntry {
  double objective = 0.0;
  double linearization_bound = 0.0;  ///< objective - gap
};

struct MeasureReport {
  double value = 0.0;
  BoundKind bound_kind = BoundKind::lower_ppt;
  double certified_gap = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<FwTraceEntry> trace;
  /// Final iterate (before the interior mixing).
  HermitianOperator closest;
  /// Hull only: active vertices and their weights.
  std::vector<ProductVertex> vertices;
  std::vector<double> weights;

  /// A value guaranteed not to exceed the minimum over the chosen set.
  double lower_bound() const { return value - certified_gap; }
};

struct ErOptions {
  double tol = 1e-6;
  std::size_t max_iter = 500;
  std::uint64_t seed = 0;
  std::size_t restarts = 32;
  std::size_t max_vertices = 200;
  std::size_t inner_steps = 50;
  /// Warm start. Hull: a convex combination of product vertices (weights
  /// are renormalized). PPT: a PPT state.
  std::vector<ProductVertex> initial_vertices;
  std::vector<double> initial_weights;
  std::optional<HermitianOperator> initial_state;
  /// Hull: also try a product decomposition of the PPT minimizer as the
  /// starting hull (operators up to kPptStartMaxDim).
  bool hull_from_ppt = true;
};

inline constexpr std::size_t kPptStartMaxDim = 16;

inline constexpr double kInteriorMix = 1e-10;
inline constexpr double kLineSearchWidth = 1e-12;

namespace detail {

/// Golden-section minimization of a convex function on [0, hi].
template <class F>
double golden_section(F&& f, double hi, double width = kLineSearchWidth) {
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = 0.0, b = hi;
  double x1 = b - r * (b - a), x2 = a + r * (b - a);
  double f1 = f(x1), f2 = f(x2);
  while (b - a > width) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - r * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + r * (b - a);
      f2 = f(x2);
    }
  }
  double t = 0.5 * (a + b);
  double best = f(t);
  for (double cand : {0.0, hi}) {
    double v = f(cand);
    if (v < best) {
      best = v;
      t = cand;
    }
  }
  return t;
}

class ErObjective {
 public:
  explicit ErObjective(const DensityOperator& rho)
      : rho_(rho.op()), neg_entropy_(-von_neumann_entropy(rho)), n_(rho.dim()) {}

  ComplexMatrix interior(const ComplexMatrix& sigma) const {
    return (1.0 - kInteriorMix) * sigma +
           (kInteriorMix / double(n_)) * ComplexMatrix::Identity(n_, n_);
  }

  double value(const ComplexMatrix& sigma) const {
    auto eig = hermitian_eig(HermitianOperator::trusted(interior(sigma)));
    double acc = 0.0;
    for (Eigen::Index k = 0; k < eig.eigenvalues.size(); ++k) {
      double lam = std::max(eig.eigenvalues(k), kEigenvalueFloor);
      const auto u = eig.eigenvectors.col(k);
      acc += u.dot(rho_.matrix() * u).real() * std::log2(lam);
    }
    return neg_entropy_ - acc;
  }

  /// Gradient of σ ↦ value(σ).
  HermitianOperator gradient(const ComplexMatrix& sigma) const {
    auto l = log_frechet_adjoint(HermitianOperator::trusted(interior(sigma)), rho_);
    return -(1.0 - kInteriorMix) * l.value;
  }

 private:
  HermitianOperator rho_;
  double neg_entropy_;
  std::size_t n_;
};

inline double real_inner(const HermitianOperator& g, const ComplexMatrix& m) {
  return g.matrix().cwiseProduct(m.conjugate()).sum().real();
}

// Second divided difference of log2.
inline double log2_second_divided_difference(double x, double y, double z) {
  const double rel = 1e-6;
  if (std::abs(x - z) > rel * std::max(x, z))
    return (log2_divided_difference(x, y) - log2_divided_difference(y, z)) / (x - z);
  if (std::abs(x - y) > rel * std::max(x, y))
    return (log2_divided_difference(x, y) - log2_divided_difference(x, x)) / (y - x);
  return -1.0 / (2.0 * x * x * kLn2);
}

/// Hessian of σ ↦ -tr ρ log2 σ at a fixed σ, applied to Hermitian directions.
class LogHessian {
 public:
  LogHessian(const EigenDecomposition& sigma, const HermitianOperator& rho)
      : u_(sigma.eigenvectors), n_(sigma.eigenvalues.size()) {
    RealVector lam = sigma.eigenvalues.cwiseMax(kEigenvalueFloor);
    rho_t_ = u_.adjoint() * rho.matrix() * u_;
    f2_.resize(std::size_t(n_ * n_ * n_));
    for (Eigen::Index a = 0; a < n_; ++a)
      for (Eigen::Index j = 0; j < n_; ++j)
        for (Eigen::Index b = 0; b < n_; ++b)
          f2_[std::size_t((a * n_ + j) * n_ + b)] =
              log2_second_divided_difference(lam(a), lam(j), lam(b));
  }

  ComplexMatrix apply(const ComplexMatrix& delta) const {
    ComplexMatrix dt = u_.adjoint() * delta * u_;
    ComplexMatrix out = ComplexMatrix::Zero(n_, n_);
    for (Eigen::Index a = 0; a < n_; ++a)
      for (Eigen::Index b = 0; b < n_; ++b) {
        Complex acc = 0.0;
        for (Eigen::Index j = 0; j < n_; ++j)
          acc += f2_[std::size_t((a * n_ + j) * n_ + b)] *
                 (dt(a, j) * rho_t_(j, b) + rho_t_(a, j) * dt(j, b));
        out(a, b) = -acc;
      }
    return u_ * out * u_.adjoint();
  }

 private:
  ComplexMatrix u_;
  ComplexMatrix rho_t_;
  Eigen::Index n_;
  std::vector<double> f2_;
};

// Orthonormal traceless Hermitian basis element: off-diagonal real/imag
// pairs (r < c) and generalized Gell-Mann diagonals.
struct BasisElement {
  enum Kind { re, im, diag } kind;
  std::size_t r, c;  // for diag: c is the level k ≥ 1

  void terms(std::size_t block, double scale, const BipartiteDims* pt,
             std::vector<HermitianTerm>& out) const {
    const double h = 1.0 / std::sqrt(2.0);
    auto map = [&](std::size_t i, std::size_t j) {
      return pt ? std::pair{pt_row(i, j, *pt), pt_row(j, i, *pt)} : std::pair{i, j};
    };
    if (kind == diag) {
      const double norm = 1.0 / std::sqrt(double(c) * double(c + 1));
      for (std::size_t j = 0; j <= c; ++j) {
        double v = (j < c ? 1.0 : -double(c)) * norm * scale;
        out.push_back({block, j, j, Complex(v, 0.0)});
      }
      return;
    }
    auto [i, j] = map(r, c);
    out.push_back({block, i, j, kind == re ? Complex(h * scale, 0.0) : Complex(0.0, h * scale)});
  }

  ComplexMatrix matrix(std::size_t n) const {
    std::vector<HermitianTerm> t;
    terms(0, 1.0, nullptr, t);
    SdpConstraint con{t, 0.0};
    return coefficient_matrix(con, 0, n);
  }
};

inline std::vector<BasisElement> traceless_basis(std::size_t n, bool real_only) {
  std::vector<BasisElement> out;
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = r + 1; c < n; ++c) {
      out.push_back({BasisElement::re, r, c});
      if (!real_only) out.push_back({BasisElement::im, r, c});
    }
  for (std::size_t k = 1; k < n; ++k) out.push_back({BasisElement::diag, 0, k});
  return out;
}

/// Minimizer over PPT states of the quadratic model
///   tr(G Δ) + ½ ⟨Δ, H Δ⟩,   Δ = σ' - σ,
/// solved as an LMI in the coordinates of Δ with an arrow block for the
/// quadratic term. Returns nullopt when the SDP yields no usable point.
inline std::optional<ComplexMatrix> newton_point(const ComplexMatrix& sigma,
                                                 const HermitianOperator& g,
                                                 const LogHessian& hess,
                                                 const BipartiteDims& dims,
                                                 bool real_only) {
  const std::size_t n = dims.total();
  auto basis = traceless_basis(n, real_only);
  const std::size_t p = basis.size();
  std::vector<ComplexMatrix> mats(p);
  for (std::size_t i = 0; i < p; ++i) mats[i] = basis[i].matrix(n);
  RealVector grad(p);
  RealMatrix h(p, p);
  for (std::size_t j = 0; j < p; ++j) {
    grad(j) = real_inner(g, mats[j]);
    ComplexMatrix hj = hess.apply(mats[j]);
    for (std::size_t i = 0; i < p; ++i) h(i, j) = mats[i].cwiseProduct(hj.conjugate()).sum().real();
  }
  h = 0.5 * (h + h.transpose());
  Eigen::SelfAdjointEigenSolver<RealMatrix> es(h);
  RealVector ev = es.eigenvalues().cwiseMax(0.0);
  const double cutoff = 1e-12 * std::max(ev.maxCoeff(), 1e-300);
  RealVector inv = ev.unaryExpr([&](double x) { return x > cutoff ? 1.0 / x : 0.0; });
  RealVector v_newton = -(es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose()) * grad;
  auto to_matrix = [&](const RealVector& v, double scale) {
    ComplexMatrix m = sigma;
    for (std::size_t i = 0; i < p; ++i) m += (scale * v(i)) * mats[i];
    return m;
  };
  {
    ComplexMatrix cand = to_matrix(v_newton, 1.0);
    if (min_eigenvalue(HermitianOperator::trusted(cand)) >= 0.0 &&
        min_eigenvalue(HermitianOperator::trusted(
            partial_transpose(cand, dims.dA, dims.dB))) >= 0.0)
      return cand;
  }
  // Δ = step · Σ v_i B_i. The first guess for step is the unconstrained
  // Newton length; if the constrained step turns out much shorter the
  // problem is re-solved at the observed length so the SDP sees O(1) data.
  double step = std::clamp(v_newton.norm(), 1e-12, 1.0);
  std::optional<ComplexMatrix> result;
  for (int pass = 0; pass < 4; ++pass) {
    RealVector gs = step * grad;
    RealVector es_scaled = step * step * ev;
    double scale = std::max({gs.cwiseAbs().maxCoeff(), es_scaled.maxCoeff(), 1e-300});
    RealMatrix r = es.eigenvectors() * (es_scaled / scale).cwiseSqrt().asDiagonal();
    RealVector gn = gs / scale;

    SdpProblem prob;
    std::size_t sb = prob.add_block(n);
    std::size_t tb = prob.add_block(n);
    std::size_t ab = prob.add_block(p + 1);
    prob.objective[sb] = sigma;
    prob.objective[tb] = partial_transpose(sigma, dims.dA, dims.dB);
    prob.objective[ab] = ComplexMatrix::Identity(p + 1, p + 1);
    prob.objective[ab](p, p) = 0.0;
    for (std::size_t i = 0; i < p; ++i) {
      SdpConstraint con;
      basis[i].terms(sb, -step, nullptr, con.terms);
      basis[i].terms(tb, -step, &dims, con.terms);
      for (std::size_t j = 0; j < p; ++j)
        if (r(i, j) != 0.0) con.terms.push_back({ab, j, p, Complex(-r(i, j), 0.0)});
      con.rhs = -gn(i);
      prob.constraints.push_back(std::move(con));
    }
    SdpConstraint tcon;
    tcon.terms.push_back({ab, p, p, Complex(-1.0, 0.0)});
    tcon.rhs = -0.5;
    prob.constraints.push_back(std::move(tcon));

    SdpSolver solver;
    auto sol = solver.solve(prob);
    if (sol.slack.empty()) break;
    // the dual slack on the first block is σ + Δ
    ComplexMatrix next = sol.slack[sb];
    if (std::abs(next.trace().real() - 1.0) > 1e-6) break;
    result = next;
    double len = (next - sigma).norm();
    if (len >= 0.1 * step || len == 0.0) break;
    step = std::max(2.0 * len, 1e-14);
  }
  return result;
}

struct Atom {
  ComplexMatrix m;
  std::optional<ProductVertex> vertex;
};

}  // namespace detail

inline constexpr std::size_t kNewtonMaxDim = 16;

namespace detail {

// PPT branch of compute_er for small operators: each iteration takes the
// better of the Frank–Wolfe step and a Newton-type step toward the PPT
// minimizer of the local quadratic model. The Frank–Wolfe vertex also
// supplies the stopping certificate.
inline MeasureReport er_ppt_newton(const DensityOperator& rho, const ErOptions& opt) {
  const std::size_t n = rho.dim();
  const BipartiteDims& dims = rho.dims();
  const bool real_only = is_real_matrix(rho.matrix());
  ErObjective obj(rho);
  ComplexMatrix sigma = opt.initial_state ? opt.initial_state->matrix()
                                          : ComplexMatrix(ComplexMatrix::Identity(n, n) / double(n));
  double f = obj.value(sigma);
  MeasureReport rep;
  rep.bound_kind = dims.small_enough_for_ppt_exactness() ? BoundKind::exact_smalldim
                                                         : BoundKind::lower_ppt;
  double gap = std::numeric_limits<double>::infinity();
  auto try_step = [&](const ComplexMatrix& target) {
    ComplexMatrix dir = target - sigma;
    auto phi = [&](double t) { return obj.value(sigma + t * dir); };
    double t = golden_section(phi, 1.0);
    double ft = phi(t);
    return std::pair{t, ft};
  };
  std::size_t it = 0;
  for (; it < opt.max_iter; ++it) {
    auto eig = hermitian_eig(HermitianOperator::trusted(obj.interior(sigma)));
    HermitianOperator g = -(1.0 - kInteriorMix) * log_frechet_adjoint(eig, rho.op()).value;
    auto lmo = lmo_ppt(g, dims);
    gap = std::max(0.0, real_inner(g, sigma) - lmo.lower_bound);
    rep.trace.push_back({f, f - gap});
    if (gap <= opt.tol) {
      rep.converged = true;
      break;
    }
    auto [tf, ff] = try_step(lmo.argmin.matrix());
    ComplexMatrix best = sigma + tf * (lmo.argmin.matrix() - sigma);
    double fbest = ff;
    LogHessian hess(eig, rho.op());
    if (auto np = newton_point(sigma, g, hess, dims, real_only)) {
      auto [tn, fn] = try_step(*np);
      if (fn < fbest) {
        fbest = fn;
        best = sigma + tn * (*np - sigma);
      }
    }
    if (!(fbest < f)) break;  // no progress at double precision
    sigma = 0.5 * (best + best.adjoint());
    f = fbest;
  }
  rep.iterations = it;
  rep.value = f;
  rep.certified_gap = gap;
  rep.closest = HermitianOperator::trusted(sigma);
  return rep;
}

}  // namespace detail

/// Relative entropy of entanglement by corrective Frank–Wolfe. With
/// set = ppt the result lower-bounds E_R (exact for dims ≤ 2⊗3); with
/// set = hull the minimization runs over convex hulls of product vectors
/// and the result upper-bounds E_R.
inline MeasureReport compute_er(const DensityOperator& rho, SeparableSet set,
                                const ErOptions& opt = {}) {
  const std::size_t n = rho.dim();
  if (set == SeparableSet::ppt && n <= kNewtonMaxDim) return detail::er_ppt_newton(rho, opt);
  const BipartiteDims& dims = rho.dims();
  detail::ErObjective obj(rho);
  std::vector<detail::Atom> atoms;
  std::vector<double> w;

  SeesawOptions seesaw;
  seesaw.restarts = opt.restarts;
  auto add_atom = [&](detail::Atom a) -> std::size_t {
    for (std::size_t i = 0; i < atoms.size(); ++i)
      if ((atoms[i].m - a.m).cwiseAbs().maxCoeff() < 1e-12) return i;
    atoms.push_back(std::move(a));
    w.push_back(0.0);
    return atoms.size() - 1;
  };

  if (set == SeparableSet::ppt) {
    if (opt.initial_state) {
      add_atom({opt.initial_state->matrix(), std::nullopt});
    } else {
      add_atom({ComplexMatrix::Identity(n, n) / double(n), std::nullopt});
    }
    w.assign(atoms.size(), 1.0);
  } else {
    // candidate starting hulls; the one with the lowest objective wins
    std::vector<std::pair<std::vector<ProductVertex>, std::vector<double>>> starts;
    if (!opt.initial_vertices.empty()) {
      if (opt.initial_weights.size() != opt.initial_vertices.size()) {
        throw Error(ErrorKind::shape, "one initial weight per initial vertex required");
      }
      starts.emplace_back(opt.initial_vertices, opt.initial_weights);
    }
    if (opt.hull_from_ppt && n <= kPptStartMaxDim) {
      ErOptions po;
      po.tol = opt.tol;
      po.max_iter = opt.max_iter;
      auto pr = compute_er(rho, SeparableSet::ppt, po);
      SeesawOptions so;
      so.seed = opt.seed;
      auto dec = find_separable_decomposition(normalize_state(pr.closest, dims),
                                              opt.max_vertices, 1e-10, 400, so);
      if (!dec.vertices.empty()) starts.emplace_back(dec.vertices, dec.weights);
    }
    {
      Rng rng = restart_rng(opt.seed, ~std::uint64_t{0});
      std::vector<ProductVertex> rv;
      for (int k = 0; k < 4; ++k)
        rv.push_back({random_unit_vector(dims.dA, rng), random_unit_vector(dims.dB, rng)});
      starts.emplace_back(rv, std::vector<double>(4, 1.0));
    }
    double best = std::numeric_limits<double>::infinity();
    std::size_t pick = 0;
    for (std::size_t c = 0; c < starts.size(); ++c) {
      ComplexMatrix m = ComplexMatrix::Zero(n, n);
      double total = 0.0;
      for (double x : starts[c].second) total += x;
      for (std::size_t k = 0; k < starts[c].first.size(); ++k)
        m += (starts[c].second[k] / total) * starts[c].first[k].projector().matrix();
      double v = obj.value(m);
      if (v < best) {
        best = v;
        pick = c;
      }
    }
    for (std::size_t k = 0; k < starts[pick].first.size(); ++k) {
      const auto& v = starts[pick].first[k];
      std::size_t i = add_atom({v.projector().matrix(), v});
      w[i] += starts[pick].second[k];
    }
  }
  {
    double total = 0.0;
    for (double x : w) total += x;
    for (double& x : w) x /= total;
  }

  auto assemble = [&]() {
    ComplexMatrix s = ComplexMatrix::Zero(n, n);
    for (std::size_t i = 0; i < atoms.size(); ++i)
      if (w[i] > 0.0) s += w[i] * atoms[i].m;
    return s;
  };
  ComplexMatrix sigma = assemble();
  double f = obj.value(sigma);

  auto step_between = [&](std::size_t to, std::size_t from, double hi) {
    ComplexMatrix dir = atoms[to].m - atoms[from].m;
    auto phi = [&](double t) { return obj.value(sigma + t * dir); };
    double t = detail::golden_section(phi, hi);
    double ft = phi(t);
    if (!(ft <= f) || t <= 0.0) return false;
    w[to] += t;
    w[from] -= t;
    if (w[from] <= 1e-15 || t >= hi) w[from] = 0.0;
    sigma = assemble();
    f = obj.value(sigma);
    return true;
  };

  auto prune = [&]() {
    std::vector<detail::Atom> na;
    std::vector<double> nw;
    for (std::size_t i = 0; i < atoms.size(); ++i)
      if (w[i] > 0.0) {
        na.push_back(std::move(atoms[i]));
        nw.push_back(w[i]);
      }
    while (na.size() > opt.max_vertices) {
      auto it = std::min_element(nw.begin(), nw.end());
      std::size_t k = std::size_t(it - nw.begin());
      na.erase(na.begin() + k);
      nw.erase(nw.begin() + k);
    }
    double total = 0.0;
    for (double x : nw) total += x;
    for (double& x : nw) x /= total;
    atoms = std::move(na);
    w = std::move(nw);
    sigma = assemble();
    f = obj.value(sigma);
  };

  MeasureReport rep;
  rep.bound_kind = set == SeparableSet::hull ? BoundKind::upper_hull
                   : dims.small_enough_for_ppt_exactness() ? BoundKind::exact_smalldim
                                                            : BoundKind::lower_ppt;
  double gap = std::numeric_limits<double>::infinity();
  std::size_t it = 0;
  for (; it < opt.max_iter; ++it) {
    HermitianOperator g = obj.gradient(sigma);
    detail::Atom s;
    double lmo_value;
    if (set == SeparableSet::ppt) {
      auto r = lmo_ppt(g, dims);
      s = {r.argmin.matrix(), std::nullopt};
      lmo_value = r.lower_bound;
    } else {
      seesaw.seed = opt.seed + it;
      auto r = lmo_product_seesaw(g, dims, seesaw);
      s = {r.vertex.projector().matrix(), r.vertex};
      lmo_value = r.value;
      // existing atoms are valid LMO candidates as well
      for (const auto& a : atoms) lmo_value = std::min(lmo_value, detail::real_inner(g, a.m));
    }
    gap = std::max(0.0, detail::real_inner(g, sigma) - lmo_value);
    rep.trace.push_back({f, f - gap});
    if (gap <= opt.tol) {
      rep.converged = true;
      break;
    }
    // Frank–Wolfe step toward s: moves all weights toward s proportionally
    std::size_t si = add_atom(std::move(s));
    {
      ComplexMatrix dir = atoms[si].m - sigma;
      auto phi = [&](double t) { return obj.value(sigma + t * dir); };
      double t = detail::golden_section(phi, 1.0);
      if (phi(t) <= f && t > 0.0) {
        for (double& x : w) x *= (1.0 - t);
        w[si] += t;
        sigma = assemble();
        f = obj.value(sigma);
      }
    }
    // pairwise corrective steps over the active set
    for (std::size_t inner = 0; inner < opt.inner_steps; ++inner) {
      HermitianOperator gi = obj.gradient(sigma);
      std::size_t to = 0, from = atoms.size();
      double lo = std::numeric_limits<double>::infinity();
      double hi = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < atoms.size(); ++k) {
        double v = detail::real_inner(gi, atoms[k].m);
        if (v < lo) { lo = v; to = k; }
        if (w[k] > 0.0 && v > hi) { hi = v; from = k; }
      }
      if (from == atoms.size() || hi - lo <= 0.25 * opt.tol) break;
      if (!step_between(to, from, w[from])) break;
    }
    prune();
  }
  rep.iterations = it;
  rep.value = f;
  rep.certified_gap = gap;
  rep.closest = HermitianOperator::trusted(sigma);
  if (set == SeparableSet::hull) {
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      rep.vertices.push_back(*atoms[i].vertex);
      rep.weights.push_back(w[i]);
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Global robustness

inline constexpr double kRgExactEps = 1e-9;

struct RobustnessWitness {
  double s = 0.0;
  HermitianOperator pi;     ///< mixing state
  HermitianOperator sigma;  ///< (ρ + sπ)/(1+s)
  /// True when the PPT relaxation is exact (dA·dB ≤ 6).
  bool exact = false;
  /// True when s = 0 and π is the maximally mixed placeholder.
  bool pi_placeholder = false;
  double certified_gap = 0.0;
  /// Dual witness W: R_G(τ) ≥ tr(Wτ) for every state τ, tight at ρ.
  HermitianOperator witness;
};

/// min tr X  s.t.  X ⪰ 0,  (ρ + X)^Γ ⪰ 0, solved with Y = (ρ + X)^Γ as a
/// second block.
inline RobustnessWitness compute_rg(const HermitianOperator& rho, const BipartiteDims& dims,
                                    const SdpOptions& options = {}) {
  const std::size_t n = dims.total();
  RobustnessWitness out;
  out.exact = dims.small_enough_for_ppt_exactness();
  auto verdict = is_ppt(rho, dims);
  if (verdict.is_ppt) {
    out.s = 0.0;
    out.pi = HermitianOperator::identity(n) * (1.0 / double(n));
    out.sigma = rho;
    out.pi_placeholder = true;
    out.witness = HermitianOperator::zero(n);
    return out;
  }
  SdpProblem p;
  std::size_t xb = p.add_block(n);
  std::size_t yb = p.add_block(n);
  p.objective[xb] = ComplexMatrix::Identity(n, n);
  ComplexMatrix rhs = partial_transpose(rho.matrix(), dims.dA, dims.dB);
  detail::add_partial_transpose_link(p, xb, yb, dims, rhs,
                                     detail::is_real_matrix(rho.matrix()));
  SdpSolver solver(options);
  auto sol = solver.solve(p);
  require_near_optimal(sol, "global robustness");
  // clean the witness: PSD part of X, then a shift so (ρ+X)^Γ clears the PPT test
  auto xe = hermitian_eig(HermitianOperator::trusted(sol.primal[xb]));
  HermitianOperator x = apply_function(xe, [](double v) { return v < 0.0 ? 0.0 : v; });
  double lmin = min_eigenvalue(partial_transpose(rho + x, dims.dA, dims.dB));
  if (lmin < 0.0) x += HermitianOperator::identity(n) * (-lmin);
  out.s = x.trace();
  out.pi = x * (1.0 / out.s);
  out.sigma = (rho + x) * (1.0 / (1.0 + out.s));
  out.certified_gap = sol.gap + std::max(0.0, out.s - sol.primal_objective);
  ComplexMatrix sy = sol.slack[yb];
  out.witness = HermitianOperator::trusted(
      -partial_transpose(ComplexMatrix(0.5 * (sy + sy.adjoint())), dims.dA, dims.dB));
  return out;
}

inline RobustnessWitness compute_rg(const DensityOperator& rho, const SdpOptions& options = {}) {
  return compute_rg(rho.op(), rho.dims(), options);
}

inline double log_robustness(const DensityOperator& rho) {
  return std::log2(1.0 + compute_rg(rho).s);
}

// ---------------------------------------------------------------------------
// Per-copy sequences

struct RegularizationEntry {
  std::size_t copies = 0;
  double per_copy = 0.0;
  BoundKind bound_kind = BoundKind::lower_ppt;
  double certified_gap = 0.0;
};

struct RegularizationTrace {
  std::vector<RegularizationEntry> entries;
};

inline constexpr std::size_t kMaxCopies = 3;

inline void check_copies(const DensityOperator& rho, std::size_t max_copies) {
  if (max_copies == 0 || max_copies > kMaxCopies) {
    throw Error(ErrorKind::domain, "copies must be in 1.." + std::to_string(kMaxCopies));
  }
  if (std::pow(double(rho.dim()), double(max_copies)) > double(kDefaultDimensionCap)) {
    throw Error(ErrorKind::size, "dimension of " + std::to_string(max_copies) +
                                     " copies exceeds cap");
  }
}

/// v_n = E_R(ρ^⊗n)/n for n = 1..max_copies. Each level is warm-started from
/// tensor products of the previous solution with the single-copy one, so
/// hull entries never exceed v_1 beyond solver tolerance.
inline RegularizationTrace regularized_er_sequence(const DensityOperator& rho,
                                                   std::size_t max_copies, SeparableSet set,
                                                   const ErOptions& opt = {}) {
  check_copies(rho, max_copies);
  RegularizationTrace out;
  MeasureReport first;
  MeasureReport prev;
  for (std::size_t n = 1; n <= max_copies; ++n) {
    DensityOperator rn = tensor_power(rho, n);
    ErOptions o = opt;
    if (n > 1) {
      if (set == SeparableSet::hull) {
        for (std::size_t i = 0; i < prev.vertices.size(); ++i)
          for (std::size_t j = 0; j < first.vertices.size(); ++j) {
            o.initial_vertices.push_back(tensor(prev.vertices[i], first.vertices[j]));
            o.initial_weights.push_back(prev.weights[i] * first.weights[j]);
          }
      } else {
        auto sp = normalize_state(prev.closest, tensor_power(rho, n - 1).dims());
        auto s1 = normalize_state(first.closest, rho.dims());
        o.initial_state = bipartite_tensor(sp, s1).op();
      }
    }
    MeasureReport r = compute_er(rn, set, o);
    out.entries.push_back({n, r.value / double(n), r.bound_kind, r.certified_gap / double(n)});
    if (n == 1) first = r;
    prev = std::move(r);
  }
  return out;
}

struct LgEstimate {
  RegularizationTrace lg;  ///< LR_G(ρ^⊗n)/n
  RegularizationTrace er;  ///< E_R(ρ^⊗n)/n over PPT
  /// Width of [er, lg] per n; both sides estimate the same limit.
  std::vector<double> band_width;
};

inline LgEstimate lg_estimate(const DensityOperator& rho, std::size_t max_copies,
                              const ErOptions& opt = {}) {
  check_copies(rho, max_copies);
  LgEstimate out;
  out.er = regularized_er_sequence(rho, max_copies, SeparableSet::ppt, opt);
  for (std::size_t n = 1; n <= max_copies; ++n) {
    DensityOperator rn = tensor_power(rho, n);
    auto w = compute_rg(rn);
    BoundKind kind = w.exact ? BoundKind::exact_smalldim : BoundKind::lower_ppt;
    double v = std::log2(1.0 + w.s) / double(n);
    out.lg.entries.push_back({n, v, kind, w.certified_gap / double(n)});
    out.band_width.push_back(v - out.er.entries[n - 1].per_copy);
  }
  return out;
}

}  // namespace eaudit
