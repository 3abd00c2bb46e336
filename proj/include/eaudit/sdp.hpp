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

// Dense block semidefinite programs in standard form
//
//   minimize   Σ_b tr(C_b X_b)
//   subject to Σ_b tr(A_ib X_b) = b_i,   X_b ⪰ 0,
//
// with dual  maximize b·y  s.t.  S_b = C_b - Σ_i y_i A_ib ⪰ 0.
//
// Solved by an infeasible primal-dual interior point method: HKM search
// direction, Mehrotra predictor-corrector, dense Schur complement.
//
// Complex Hermitian blocks are mapped to real symmetric blocks of twice the
// size, X ↦ [[Re X, -Im X], [Im X, Re X]], with all coefficients halved so
// that tr(Ã X̃)/2 = tr(A X). A block whose objective and coefficient terms are
// all real is solved directly as a real symmetric block (the real part of
// any complex optimum is also optimal there), so real instances cost a
// quarter of the embedded size.
//
// Infeasibility: linearly dependent constraints are detected on the first
// Schur factorization; inconsistent right-hand sides give an exact Farkas
// certificate (status infeasible), consistent ones are dropped. Otherwise a
// dual objective diverging past 1e12 marks the primal infeasible, and a
// primal objective diverging below -1e12 marks it unbounded.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "eaudit/error.hpp"
#include "eaudit/opcore.hpp"

namespace eaudit {

/// `value` at (row, col) and conj(value) at (col, row); a diagonal term
/// contributes value.real() at (row, row).
struct HermitianTerm {
  std::size_t block = 0;
  std::size_t row = 0;
  std::size_t col = 0;
  Complex value;
};

struct SdpConstraint {
  std::vector<HermitianTerm> terms;
  double rhs = 0.0;
};

struct SdpProblem {
  std::vector<std::size_t> blocks;
  std::vector<ComplexMatrix> objective;
  std::vector<SdpConstraint> constraints;

  std::size_t add_block(std::size_t dim) {
    blocks.push_back(dim);
    objective.push_back(ComplexMatrix::Zero(dim, dim));
    return blocks.size() - 1;
  }

  std::size_t add_constraint(std::vector<HermitianTerm> terms, double rhs) {
    constraints.push_back({std::move(terms), rhs});
    return constraints.size() - 1;
  }

  /// Throws on malformed input: mismatched objective shapes, terms outside
  /// their block, non-Hermitian objectives. Surplus (dependent) constraints
  /// are not an error; the solver reduces them.
  void validate() const {
    if (objective.size() != blocks.size()) {
      throw Error(ErrorKind::shape, "one objective matrix per block required");
    }
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      if (blocks[b] == 0) throw Error(ErrorKind::shape, "empty block");
      const auto& c = objective[b];
      if (c.rows() != static_cast<Eigen::Index>(blocks[b]) || c.cols() != c.rows()) {
        throw Error(ErrorKind::shape, "objective block " + std::to_string(b) +
                                          " has wrong size");
      }
      if ((c - c.adjoint()).cwiseAbs().maxCoeff() > kHermiticityTol) {
        throw Error(ErrorKind::hermiticity, "objective block " +
                                                std::to_string(b) +
                                                " is not Hermitian");
      }
    }
    for (const auto& con : constraints) {
      for (const auto& t : con.terms) {
        if (t.block >= blocks.size() || t.row >= blocks[t.block] ||
            t.col >= blocks[t.block]) {
          throw Error(ErrorKind::shape, "constraint term outside its block");
        }
      }
    }
  }
};

/// Dense Hermitian coefficient matrix → terms (upper triangle).
inline std::vector<HermitianTerm> terms_from_matrix(std::size_t block,
                                                    const ComplexMatrix& a,
                                                    double drop = 0.0) {
  std::vector<HermitianTerm> out;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = i; j < a.cols(); ++j)
      if (std::abs(a(i, j)) > drop)
        out.push_back({block, std::size_t(i), std::size_t(j), a(i, j)});
  return out;
}

/// Matrix view of a constraint's terms on one block.
inline ComplexMatrix coefficient_matrix(const SdpConstraint& c,
                                        std::size_t block, std::size_t dim) {
  ComplexMatrix a = ComplexMatrix::Zero(dim, dim);
  for (const auto& t : c.terms) {
    if (t.block != block) continue;
    if (t.row == t.col) {
      a(t.row, t.row) += t.value.real();
    } else {
      a(t.row, t.col) += t.value;
      a(t.col, t.row) += std::conj(t.value);
    }
  }
  return a;
}

/// Debug dump: block sizes, then "constraint block row col re im" lines.
inline void dump_problem(const SdpProblem& p, std::ostream& os) {
  os << "blocks";
  for (auto d : p.blocks) os << ' ' << d;
  os << "\nconstraints " << p.constraints.size() << '\n';
  for (std::size_t k = 0; k < p.constraints.size(); ++k) {
    os << "rhs " << k << ' ' << p.constraints[k].rhs << '\n';
    for (const auto& t : p.constraints[k].terms)
      os << k << ' ' << t.block << ' ' << t.row << ' ' << t.col << ' '
         << t.value.real() << ' ' << t.value.imag() << '\n';
  }
  for (std::size_t b = 0; b < p.blocks.size(); ++b)
    for (const auto& t : terms_from_matrix(b, p.objective[b]))
      os << "obj " << t.block << ' ' << t.row << ' ' << t.col << ' '
         << t.value.real() << ' ' << t.value.imag() << '\n';
}

enum class SdpStatus { optimal, infeasible, unbounded, numerical_failure };

inline const char* to_string(SdpStatus s) {
  switch (s) {
    case SdpStatus::optimal: return "optimal";
    case SdpStatus::infeasible: return "infeasible";
    case SdpStatus::unbounded: return "unbounded";
    case SdpStatus::numerical_failure: return "numerical-failure";
  }
  return "?";
}

struct SdpOptions {
  double gap_tol = 1e-8;
  double feas_tol = 1e-8;
  std::size_t max_iter = 200;
};

struct SdpSolution {
  SdpStatus status = SdpStatus::numerical_failure;
  std::vector<ComplexMatrix> primal;  ///< X_b
  std::vector<ComplexMatrix> slack;   ///< S_b = C_b - Σ y_i A_ib
  RealVector dual;                    ///< y
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double gap = 0.0;                   ///< |primal - dual|
  double primal_residual = 0.0;       ///< max_i |b_i - Σ tr(A_ib X_b)|
  double dual_residual = 0.0;         ///< max entry of |C - S - A^T y|
  double min_primal_eigenvalue = 0.0;
  std::size_t iterations = 0;

  bool optimal() const { return status == SdpStatus::optimal; }
};

namespace detail {

struct SymEntry {
  std::uint32_t i, j;  // i <= j
  double v;
};

// Constraint k restricted to one real block.
struct BlockRow {
  std::size_t constraint;
  std::vector<SymEntry> entries;
};

struct RealBlock {
  std::size_t n = 0;        // real dimension
  bool embedded = false;    // complex block mapped to 2x size
  RealMatrix c;
  std::vector<BlockRow> rows;
};

struct RealSdp {
  std::vector<RealBlock> blocks;
  RealVector b;
  std::size_t m = 0;
};

inline bool is_real(Complex z) { return z.imag() == 0.0; }

inline void push_sym(std::vector<SymEntry>& out, std::size_t i, std::size_t j,
                     double v) {
  if (v == 0.0) return;
  if (i > j) std::swap(i, j);
  out.push_back({std::uint32_t(i), std::uint32_t(j), v});
}

inline RealSdp to_real(const SdpProblem& p,
                       const std::vector<std::size_t>& keep) {
  RealSdp r;
  r.m = keep.size();
  r.b.resize(r.m);
  r.blocks.resize(p.blocks.size());
  for (std::size_t b = 0; b < p.blocks.size(); ++b) {
    bool real = p.objective[b].imag().cwiseAbs().maxCoeff() == 0.0;
    for (std::size_t k : keep)
      for (const auto& t : p.constraints[k].terms)
        if (t.block == b && !is_real(t.value) && t.row != t.col) real = false;
    auto& blk = r.blocks[b];
    std::size_t n = p.blocks[b];
    blk.embedded = !real;
    blk.n = real ? n : 2 * n;
    if (real) {
      blk.c = p.objective[b].real();
    } else {
      blk.c.resize(2 * n, 2 * n);
      RealMatrix re = 0.5 * p.objective[b].real();
      RealMatrix im = 0.5 * p.objective[b].imag();
      blk.c << re, -im, im, re;
    }
  }
  for (std::size_t kk = 0; kk < keep.size(); ++kk) {
    const auto& con = p.constraints[keep[kk]];
    r.b(kk) = con.rhs;
    std::vector<std::vector<SymEntry>> per_block(p.blocks.size());
    for (const auto& t : con.terms) {
      auto& out = per_block[t.block];
      if (!r.blocks[t.block].embedded) {
        push_sym(out, t.row, t.col, t.value.real());
        continue;
      }
      std::size_t n = p.blocks[t.block];
      double a = 0.5 * t.value.real();
      if (t.row == t.col) {
        push_sym(out, t.row, t.row, a);
        push_sym(out, n + t.row, n + t.row, a);
        continue;
      }
      double bi = 0.5 * t.value.imag();
      push_sym(out, t.row, t.col, a);
      push_sym(out, n + t.row, n + t.col, a);
      push_sym(out, t.row, n + t.col, -bi);
      push_sym(out, t.col, n + t.row, bi);
    }
    for (std::size_t b = 0; b < p.blocks.size(); ++b) {
      if (per_block[b].empty()) continue;
      // merge duplicates so the Schur assembly sees one entry per position
      auto& e = per_block[b];
      std::sort(e.begin(), e.end(), [](const SymEntry& x, const SymEntry& y) {
        return x.i != y.i ? x.i < y.i : x.j < y.j;
      });
      std::vector<SymEntry> merged;
      for (const auto& x : e) {
        if (!merged.empty() && merged.back().i == x.i && merged.back().j == x.j)
          merged.back().v += x.v;
        else
          merged.push_back(x);
      }
      r.blocks[b].rows.push_back({kk, std::move(merged)});
    }
  }
  return r;
}

inline double apply_row(const BlockRow& row, const RealMatrix& w) {
  double acc = 0.0;
  for (const auto& e : row.entries)
    acc += e.i == e.j ? e.v * w(e.i, e.i) : e.v * (w(e.i, e.j) + w(e.j, e.i));
  return acc;
}

// A(W) for per-block (not necessarily symmetric) W.
inline RealVector apply_a(const RealSdp& p, const std::vector<RealMatrix>& w) {
  RealVector out = RealVector::Zero(p.m);
  for (std::size_t b = 0; b < p.blocks.size(); ++b)
    for (const auto& row : p.blocks[b].rows)
      out(row.constraint) += apply_row(row, w[b]);
  return out;
}

inline std::vector<RealMatrix> apply_at(const RealSdp& p, const RealVector& y) {
  std::vector<RealMatrix> out;
  out.reserve(p.blocks.size());
  for (const auto& blk : p.blocks) {
    RealMatrix m = RealMatrix::Zero(blk.n, blk.n);
    for (const auto& row : blk.rows) {
      double yk = y(row.constraint);
      if (yk == 0.0) continue;
      for (const auto& e : row.entries) {
        m(e.i, e.j) += yk * e.v;
        if (e.i != e.j) m(e.j, e.i) += yk * e.v;
      }
    }
    out.push_back(std::move(m));
  }
  return out;
}

inline double frob(const std::vector<RealMatrix>& a,
                   const std::vector<RealMatrix>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i].cwiseProduct(b[i]).sum();
  return s;
}

// Largest α with X + α dX ⪰ 0 (infinity if unbounded). X must be PD.
inline double max_step(const RealMatrix& x, const RealMatrix& dx) {
  Eigen::LLT<RealMatrix> llt(x);
  if (llt.info() != Eigen::Success) return 0.0;
  RealMatrix t = llt.matrixL().solve(dx);
  t = llt.matrixL().solve(t.transpose()).transpose();
  t = 0.5 * (t + t.transpose());
  Eigen::SelfAdjointEigenSolver<RealMatrix> es(t, Eigen::EigenvaluesOnly);
  double lmin = es.eigenvalues().minCoeff();
  return lmin < 0.0 ? -1.0 / lmin : std::numeric_limits<double>::infinity();
}

inline ComplexMatrix extract(const RealBlock& blk, const RealMatrix& x,
                             double scale) {
  if (!blk.embedded) return scale * x.cast<Complex>();
  std::size_t n = blk.n / 2;
  RealMatrix re = 0.5 * (x.topLeftCorner(n, n) + x.bottomRightCorner(n, n));
  RealMatrix im = 0.5 * (x.bottomLeftCorner(n, n) - x.topRightCorner(n, n));
  ComplexMatrix out(n, n);
  out.real() = scale * re;
  out.imag() = scale * im;
  return out;
}

}  // namespace detail

/// Sees every solution returned by SdpSolver::solve, with the tolerances it
/// was certified against. Install before starting worker threads; the
/// callback itself must be thread safe.
using SdpObserver = std::function<void(const SdpSolution&, const SdpOptions&)>;

inline SdpObserver& sdp_observer() {
  static SdpObserver observer;
  return observer;
}

/// Owns per-solve scratch; not safe to share across threads. Separate
/// instances are independent.
class SdpSolver {
 public:
  explicit SdpSolver(SdpOptions options = {}) : opt_(options) {}

  const SdpOptions& options() const { return opt_; }

  SdpSolution solve(const SdpProblem& problem) {
    problem.validate();
    std::vector<std::size_t> keep(problem.constraints.size());
    for (std::size_t k = 0; k < keep.size(); ++k) keep[k] = k;
    for (int attempt = 0; attempt < 2; ++attempt) {
      detail::RealSdp real = detail::to_real(problem, keep);
      Outcome out = run(real, attempt == 0);
      if (out.dependent) {
        auto reduced = reduce_constraints(real);
        if (reduced.inconsistent) {
          SdpSolution sol = finish(problem, real, keep, out);
          sol.status = SdpStatus::infeasible;
          return observed(std::move(sol));
        }
        std::vector<std::size_t> next;
        for (std::size_t k : reduced.keep) next.push_back(keep[k]);
        keep = std::move(next);
        continue;
      }
      return observed(finish(problem, real, keep, out));
    }
    throw NumericalError("constraint reduction did not settle", 0.0);
  }

 private:
  struct Outcome {
    SdpStatus status = SdpStatus::numerical_failure;
    std::vector<RealMatrix> x, s;
    RealVector y;
    std::size_t iterations = 0;
    bool dependent = false;
  };

  struct Reduction {
    bool inconsistent = false;
    std::vector<std::size_t> keep;
  };

  SdpOptions opt_;
  RealMatrix schur_;

  SdpSolution observed(SdpSolution sol) const {
    if (const auto& obs = sdp_observer()) obs(sol, opt_);
    return sol;
  }

  static double block_scale(const detail::RealBlock& blk) {
    return blk.embedded ? 2.0 : 1.0;
  }

  // Gram matrix of the (real) constraints, rank-revealing QR, and a
  // consistency test of b against the left null space.
  static Reduction reduce_constraints(const detail::RealSdp& p) {
    RealMatrix gram = RealMatrix::Zero(p.m, p.m);
    for (const auto& blk : p.blocks) {
      std::vector<RealMatrix> unit(1);
      for (const auto& r1 : blk.rows) {
        RealMatrix a = RealMatrix::Zero(blk.n, blk.n);
        for (const auto& e : r1.entries) {
          a(e.i, e.j) += e.v;
          if (e.i != e.j) a(e.j, e.i) += e.v;
        }
        for (const auto& r2 : blk.rows)
          gram(r1.constraint, r2.constraint) += detail::apply_row(r2, a);
      }
    }
    Eigen::SelfAdjointEigenSolver<RealMatrix> es(gram);
    double top = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
    Reduction red;
    double bnorm = std::max(1.0, p.b.norm());
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
      if (es.eigenvalues()(i) > 1e-10 * top) continue;
      if (std::abs(es.eigenvectors().col(i).dot(p.b)) > 1e-8 * bnorm) {
        red.inconsistent = true;
      }
    }
    Eigen::ColPivHouseholderQR<RealMatrix> qr(gram);
    qr.setThreshold(1e-10);
    auto rank = qr.rank();
    for (Eigen::Index i = 0; i < rank; ++i)
      red.keep.push_back(std::size_t(qr.colsPermutation().indices()(i)));
    std::sort(red.keep.begin(), red.keep.end());
    return red;
  }

  void assemble_schur(const detail::RealSdp& p, const std::vector<RealMatrix>& x,
                      const std::vector<RealMatrix>& sinv) {
    schur_.setZero(p.m, p.m);
    for (std::size_t b = 0; b < p.blocks.size(); ++b) {
      const auto& blk = p.blocks[b];
      RealMatrix w(blk.n, blk.n);
      for (std::size_t r = 0; r < blk.rows.size(); ++r) {
        const auto& row = blk.rows[r];
        w.setZero();
        for (const auto& e : row.entries) {
          w.noalias() += e.v * x[b].col(e.i) * sinv[b].row(e.j);
          if (e.i != e.j) w.noalias() += e.v * x[b].col(e.j) * sinv[b].row(e.i);
        }
        for (std::size_t q = r; q < blk.rows.size(); ++q) {
          double v = detail::apply_row(blk.rows[q], w);
          schur_(row.constraint, blk.rows[q].constraint) += v;
          if (q != r) schur_(blk.rows[q].constraint, row.constraint) += v;
        }
      }
    }
  }

  Outcome run(const detail::RealSdp& p, bool check_rank) {
    const std::size_t nb = p.blocks.size();
    Outcome out;
    std::vector<RealMatrix> x(nb), s(nb);
    RealVector y = RealVector::Zero(p.m);
    std::size_t total_n = 0;
    for (std::size_t b = 0; b < nb; ++b) {
      const auto& blk = p.blocks[b];
      total_n += blk.n;
      double n = double(blk.n);
      double xi = std::max(10.0, std::sqrt(n));
      double eta = std::max({10.0, std::sqrt(n), blk.c.norm()});
      for (const auto& row : blk.rows) {
        double an = 0.0;
        for (const auto& e : row.entries)
          an += (e.i == e.j ? 1.0 : 2.0) * e.v * e.v;
        an = std::sqrt(an);
        xi = std::max(xi, n * (1.0 + std::abs(p.b(row.constraint))) / (1.0 + an));
        eta = std::max(eta, an);
      }
      x[b] = xi * RealMatrix::Identity(blk.n, blk.n);
      s[b] = eta * RealMatrix::Identity(blk.n, blk.n);
    }

    // A A^T, used to keep primal steps on A(dx) = r_p despite an
    // ill-conditioned S^{-1} near low-rank optima
    Eigen::LDLT<RealMatrix> gram;
    if (p.m) {
      RealMatrix g(p.m, p.m);
      for (std::size_t k = 0; k < p.m; ++k)
        g.col(k) = detail::apply_a(p, detail::apply_at(p, RealVector::Unit(p.m, k)));
      gram.compute(g);
    }

    double best_merit = std::numeric_limits<double>::infinity();
    std::vector<RealMatrix> sinv(nb), rd(nb), xrds(nb);
    for (std::size_t it = 0; it <= opt_.max_iter; ++it) {
      RealVector rp = p.b - detail::apply_a(p, x);
      auto aty = detail::apply_at(p, y);
      double rd_max = 0.0, pobj = 0.0;
      for (std::size_t b = 0; b < nb; ++b) {
        rd[b] = p.blocks[b].c - s[b] - aty[b];
        rd_max = std::max(rd_max, block_scale(p.blocks[b]) * rd[b].cwiseAbs().maxCoeff());
        pobj += p.blocks[b].c.cwiseProduct(x[b]).sum();
      }
      double dobj = p.b.dot(y);
      double rp_max = p.m ? rp.cwiseAbs().maxCoeff() : 0.0;
      double gap = std::abs(pobj - dobj);
      double merit = std::max({gap / (1.0 + std::abs(pobj)), rp_max, rd_max});
      if (merit < best_merit) {
        best_merit = merit;
        out.x = x;
        out.s = s;
        out.y = y;
        out.iterations = it;
      }
      if (gap <= opt_.gap_tol * (1.0 + std::abs(pobj)) && rp_max <= opt_.feas_tol &&
          rd_max <= opt_.feas_tol) {
        out.status = SdpStatus::optimal;
        out.x = x;
        out.s = s;
        out.y = y;
        out.iterations = it;
        return out;
      }
      if (dobj > 1e12) {
        out.status = SdpStatus::infeasible;
        return out;
      }
      if (pobj < -1e12) {
        out.status = SdpStatus::unbounded;
        return out;
      }
      if (it == opt_.max_iter) break;

      double mu = detail::frob(x, s) / double(total_n);
      for (std::size_t b = 0; b < nb; ++b) {
        Eigen::LLT<RealMatrix> llt(s[b]);
        if (llt.info() != Eigen::Success) return out;
        sinv[b] = llt.solve(RealMatrix::Identity(p.blocks[b].n, p.blocks[b].n));
        sinv[b] = 0.5 * (sinv[b] + sinv[b].transpose());
        xrds[b] = x[b] * rd[b] * sinv[b];
      }
      assemble_schur(p, x, sinv);

      Eigen::LDLT<RealMatrix> ldlt;
      if (p.m) {
        ldlt.compute(schur_);
        if (ldlt.info() != Eigen::Success || !std::isfinite(ldlt.vectorD().sum())) {
          // near-singular Schur complement late in the run: regularize once
          double shift = 1e-14 * schur_.diagonal().cwiseAbs().maxCoeff();
          ldlt.compute(schur_ + shift * RealMatrix::Identity(p.m, p.m));
          if (ldlt.info() != Eigen::Success) return out;
        }
        if (it == 0 && check_rank) {
          RealVector d = ldlt.vectorD().cwiseAbs();
          if (d.minCoeff() <= 1e-11 * d.maxCoeff()) {
            out.dependent = true;
            return out;
          }
        }
      }
      RealVector base = rp + detail::apply_a(p, xrds);

      auto direction = [&](const std::vector<RealMatrix>& rc,
                           std::vector<RealMatrix>& dx, RealVector& dy,
                           std::vector<RealMatrix>& ds) {
        std::vector<RealMatrix> rcs(nb);
        for (std::size_t b = 0; b < nb; ++b) rcs[b] = rc[b] * sinv[b];
        RealVector rhs = base - detail::apply_a(p, rcs);
        if (p.m) {
          dy = ldlt.solve(rhs);
          for (int refine = 0; refine < 2; ++refine) dy += ldlt.solve(rhs - schur_ * dy);
        } else {
          dy = RealVector();
        }
        auto atdy = detail::apply_at(p, dy);
        dx.resize(nb);
        ds.resize(nb);
        for (std::size_t b = 0; b < nb; ++b) {
          ds[b] = rd[b] - atdy[b];
          RealMatrix t = (rc[b] - x[b] * ds[b]) * sinv[b];
          dx[b] = 0.5 * (t + t.transpose());
        }
        if (p.m) {
          auto corr = detail::apply_at(p, gram.solve(rp - detail::apply_a(p, dx)));
          for (std::size_t b = 0; b < nb; ++b) dx[b] += corr[b];
        }
      };
      auto step_lengths = [&](const std::vector<RealMatrix>& dx,
                              const std::vector<RealMatrix>& ds, double tau,
                              double& ap, double& ad) {
        ap = ad = std::numeric_limits<double>::infinity();
        for (std::size_t b = 0; b < nb; ++b) {
          ap = std::min(ap, detail::max_step(x[b], dx[b]));
          ad = std::min(ad, detail::max_step(s[b], ds[b]));
        }
        ap = std::min(1.0, tau * ap);
        ad = std::min(1.0, tau * ad);
      };

      // predictor
      std::vector<RealMatrix> rc(nb), dxa, dsa, dx, ds;
      RealVector dya, dy;
      for (std::size_t b = 0; b < nb; ++b) rc[b] = -x[b] * s[b];
      direction(rc, dxa, dya, dsa);
      double ap, ad;
      step_lengths(dxa, dsa, 1.0, ap, ad);
      double mu_aff = 0.0;
      for (std::size_t b = 0; b < nb; ++b)
        mu_aff += (x[b] + ap * dxa[b]).cwiseProduct(s[b] + ad * dsa[b]).sum();
      mu_aff /= double(total_n);
      double sigma = std::clamp(std::pow(mu_aff / mu, 3.0), 0.0, 1.0);

      // corrector
      for (std::size_t b = 0; b < nb; ++b) {
        rc[b] = sigma * mu * RealMatrix::Identity(p.blocks[b].n, p.blocks[b].n) -
                x[b] * s[b] - dxa[b] * dsa[b];
      }
      direction(rc, dx, dy, ds);
      step_lengths(dx, ds, 0.98, ap, ad);
      if (!(ap > 0.0) || !(ad > 0.0)) return out;
      for (std::size_t b = 0; b < nb; ++b) {
        x[b] += ap * dx[b];
        s[b] += ad * ds[b];
        x[b] = 0.5 * (x[b] + x[b].transpose());
        s[b] = 0.5 * (s[b] + s[b].transpose());
      }
      y += ad * dy;
    }
    return out;
  }

  SdpSolution finish(const SdpProblem& problem, const detail::RealSdp& p,
                     const std::vector<std::size_t>& keep, const Outcome& o) {
    SdpSolution sol;
    sol.status = o.status;
    sol.iterations = o.iterations;
    const std::size_t nb = p.blocks.size();
    sol.dual = RealVector::Zero(problem.constraints.size());
    if (o.x.empty()) return sol;
    for (std::size_t k = 0; k < keep.size(); ++k) sol.dual(keep[k]) = o.y(k);
    sol.primal.resize(nb);
    sol.slack.resize(nb);
    sol.min_primal_eigenvalue = std::numeric_limits<double>::infinity();
    for (std::size_t b = 0; b < nb; ++b) {
      sol.primal[b] = detail::extract(p.blocks[b], o.x[b], 1.0);
      sol.slack[b] = detail::extract(p.blocks[b], o.s[b], block_scale(p.blocks[b]));
      sol.min_primal_eigenvalue = std::min(
          sol.min_primal_eigenvalue,
          min_eigenvalue(HermitianOperator::trusted(sol.primal[b])));
    }
    // residuals and objectives in the caller's (complex) units
    sol.primal_objective = 0.0;
    for (std::size_t b = 0; b < nb; ++b)
      sol.primal_objective +=
          (problem.objective[b].cwiseProduct(sol.primal[b].conjugate())).sum().real();
    sol.dual_objective = 0.0;
    for (std::size_t k = 0; k < problem.constraints.size(); ++k)
      sol.dual_objective += problem.constraints[k].rhs * sol.dual(k);
    sol.gap = std::abs(sol.primal_objective - sol.dual_objective);
    std::vector<ComplexMatrix> aty(nb);
    for (std::size_t b = 0; b < nb; ++b)
      aty[b] = ComplexMatrix::Zero(problem.blocks[b], problem.blocks[b]);
    sol.primal_residual = 0.0;
    for (std::size_t k = 0; k < problem.constraints.size(); ++k) {
      const auto& con = problem.constraints[k];
      double ax = 0.0;
      for (const auto& t : con.terms) {
        const auto& xb = sol.primal[t.block];
        if (t.row == t.col) {
          ax += t.value.real() * xb(t.row, t.row).real();
          aty[t.block](t.row, t.row) += sol.dual(k) * t.value.real();
        } else {
          ax += 2.0 * (std::conj(t.value) * xb(t.row, t.col)).real();
          aty[t.block](t.row, t.col) += sol.dual(k) * t.value;
          aty[t.block](t.col, t.row) += sol.dual(k) * std::conj(t.value);
        }
      }
      sol.primal_residual = std::max(sol.primal_residual, std::abs(con.rhs - ax));
    }
    sol.dual_residual = 0.0;
    for (std::size_t b = 0; b < nb; ++b)
      sol.dual_residual = std::max(
          sol.dual_residual,
          (problem.objective[b] - sol.slack[b] - aty[b]).cwiseAbs().maxCoeff());
    if (sol.status == SdpStatus::optimal &&
        (sol.gap > opt_.gap_tol * (1.0 + std::abs(sol.primal_objective)) ||
         sol.primal_residual > opt_.feas_tol || sol.dual_residual > opt_.feas_tol ||
         sol.min_primal_eigenvalue < -opt_.feas_tol)) {
      sol.status = SdpStatus::numerical_failure;
    }
    return sol;
  }
};

inline SdpSolution solve_sdp(const SdpProblem& p, double gap_tol = 1e-8,
                             double feas_tol = 1e-8, std::size_t max_iter = 200) {
  SdpSolver solver({gap_tol, feas_tol, max_iter});
  return solver.solve(p);
}

/// Throws NumericalError unless the solve is certified optimal.
inline const SdpSolution& require_optimal(const SdpSolution& sol,
                                          const std::string& what) {
  if (!sol.optimal()) {
    throw NumericalError(what + ": SDP status " + to_string(sol.status),
                         std::max(sol.gap, std::max(sol.primal_residual,
                                                    sol.dual_residual)));
  }
  return sol;
}

/// Like require_optimal, but also accepts the best iterate of a run that
/// stalled short of the default tolerances, provided it is feasible and its
/// duality gap is within `tol`. Callers report the gap alongside the value.
inline const SdpSolution& require_near_optimal(const SdpSolution& sol,
                                               const std::string& what,
                                               double tol = 1e-6) {
  if (sol.optimal()) return sol;
  bool usable = sol.status == SdpStatus::numerical_failure && !sol.primal.empty() &&
                sol.gap <= tol * (1.0 + std::abs(sol.primal_objective)) &&
                sol.primal_residual <= tol && sol.dual_residual <= tol;
  if (!usable) return require_optimal(sol, what);
  return sol;
}

}  // namespace eaudit
