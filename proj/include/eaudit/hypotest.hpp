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

// Asymmetric hypothesis testing between ρ^⊗n and σ^⊗n:
//   tr(ρ^⊗n - 2^{yn} σ^⊗n)_+
// densely for small n, and by a type-class sum when ρ and σ commute.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

#include "eaudit/opcore.hpp"
#include "eaudit/states.hpp"

namespace eaudit {

inline constexpr std::size_t kDenseTestCap = 4096;
inline constexpr std::size_t kMaxAlphabet = 8;
inline constexpr double kProbabilitySlack = 1e-9;

struct HypothesisTestPoint {
  std::size_t n = 0;
  double threshold = 0.0;
  double beta1 = 0.0;  ///< 1 - tr(ρ^⊗n P)
  double beta2 = 0.0;  ///< tr(σ^⊗n P)
};

namespace detail {

inline std::size_t checked_power_dim(std::size_t d, std::size_t n, std::size_t cap) {
  if (n == 0) throw Error(ErrorKind::domain, "n must be >= 1");
  double dim = std::pow(double(d), double(n));
  if (dim > double(cap)) {
    throw Error(ErrorKind::size, std::to_string(n) + " copies of dimension " +
                                     std::to_string(d) + " exceed the dense cap " +
                                     std::to_string(cap));
  }
  return std::size_t(dim);
}

inline void check_same_dim(const HermitianOperator& rho, const HermitianOperator& sigma) {
  if (rho.dim() != sigma.dim()) {
    throw Error(ErrorKind::shape, "hypotheses act on different dimensions");
  }
}

inline double clamp_probability(double v) {
  if (v < 0.0 && v >= -kProbabilitySlack) return 0.0;
  if (v > 1.0 && v <= 1.0 + kProbabilitySlack) return 1.0;
  return v;
}

}  // namespace detail

/// Errors of the deterministic test P = {ρ^⊗n - tσ^⊗n > 1e-12}.
inline HypothesisTestPoint neyman_pearson_point(const HermitianOperator& rho,
                                                const HermitianOperator& sigma,
                                                std::size_t n, double t,
                                                std::size_t cap = kDenseTestCap) {
  detail::check_same_dim(rho, sigma);
  detail::checked_power_dim(rho.dim(), n, cap);
  if (!(t > 0.0)) throw Error(ErrorKind::domain, "threshold must be positive");
  HermitianOperator rn = operator_power(rho, n, cap);
  HermitianOperator sn = operator_power(sigma, n, cap);
  auto eig = hermitian_eig(rn - sn * t);
  const auto& u = eig.eigenvectors;
  double accept_rho = 0.0, accept_sigma = 0.0;
  for (Eigen::Index k = 0; k < u.cols(); ++k) {
    if (eig.eigenvalues(k) <= kEigenvalueFloor) continue;
    const auto v = u.col(k);
    accept_rho += v.dot(rn.matrix() * v).real();
    accept_sigma += v.dot(sn.matrix() * v).real();
  }
  return {n, t, detail::clamp_probability(1.0 - accept_rho),
          detail::clamp_probability(accept_sigma)};
}

inline HypothesisTestPoint neyman_pearson_point(const DensityOperator& rho,
                                                const DensityOperator& sigma,
                                                std::size_t n, double t,
                                                std::size_t cap = kDenseTestCap) {
  return neyman_pearson_point(rho.op(), sigma.op(), n, t, cap);
}

inline double stein_quantity_dense(const HermitianOperator& rho,
                                   const HermitianOperator& sigma, std::size_t n,
                                   double y, std::size_t cap = kDenseTestCap) {
  detail::check_same_dim(rho, sigma);
  detail::checked_power_dim(rho.dim(), n, cap);
  HermitianOperator rn = operator_power(rho, n, cap);
  HermitianOperator sn = operator_power(sigma, n, cap);
  return positive_part_trace(rn - sn * std::exp2(y * double(n)));
}

inline double stein_quantity_dense(const DensityOperator& rho, const DensityOperator& sigma,
                                   std::size_t n, double y, std::size_t cap = kDenseTestCap) {
  return stein_quantity_dense(rho.op(), sigma.op(), n, y, cap);
}

// ---------------------------------------------------------------------------
// Commuting case

/// Neumaier-compensated sum of 2^{x_i - shift}.
class CompensatedSum {
 public:
  void add(double v) {
    double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v))
      comp_ += (sum_ - t) + v;
    else
      comp_ += (v - t) + sum_;
    sum_ = t;
  }
  void merge(const CompensatedSum& other) {
    add(other.sum_);
    add(other.comp_);
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

namespace detail {

inline void check_distribution(std::span<const double> p, const char* name) {
  double total = 0.0;
  for (double v : p) {
    if (!(v >= 0.0)) throw Error(ErrorKind::domain, std::string(name) + " has a negative entry");
    total += v;
  }
  if (std::abs(total - 1.0) > kProbabilitySlack) {
    throw Error(ErrorKind::domain, std::string(name) + " does not sum to 1");
  }
}

// Visits the compositions k of `remaining` into parts k[0..len) in colex
// order (k[0] fastest).
template <class F>
void for_each_composition(std::vector<int>& k, std::size_t len, int remaining, F&& f) {
  if (len == 1) {
    k[0] = remaining;
    f(k);
    return;
  }
  for (int last = 0; last <= remaining; ++last) {
    k[len - 1] = last;
    for_each_composition(k, len - 1, remaining - last, f);
  }
}

}  // namespace detail

/// Σ over types k of  n!/Π k_i! · max(0, Π p_i^{k_i} - 2^{yn} Π q_i^{k_i}),
/// evaluated in log space. `jobs` > 1 splits the sum by the last coordinate
/// of the type; partial sums merge in index order.
inline double stein_quantity_commuting(std::span<const double> p, std::span<const double> q,
                                       std::size_t n, double y, std::size_t jobs = 1) {
  if (p.size() != q.size() || p.empty()) {
    throw Error(ErrorKind::shape, "distributions must have the same nonzero length");
  }
  if (p.size() > kMaxAlphabet) {
    throw Error(ErrorKind::size, "alphabet larger than " + std::to_string(kMaxAlphabet));
  }
  if (n == 0) throw Error(ErrorKind::domain, "n must be >= 1");
  detail::check_distribution(p, "p");
  detail::check_distribution(q, "q");
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0 && q[i] == 0.0 && std::isfinite(y)) {
      throw Error(ErrorKind::domain, "support of p is not contained in the support of q");
    }
  }
  const std::size_t d = p.size();
  const double ninf = -std::numeric_limits<double>::infinity();
  std::vector<double> lp(d), lq(d);
  for (std::size_t i = 0; i < d; ++i) {
    lp[i] = p[i] > 0.0 ? std::log2(p[i]) : ninf;
    lq[i] = q[i] > 0.0 ? std::log2(q[i]) : ninf;
  }
  const int nn = int(n);
  const double log2_nfact = std::lgamma(double(n) + 1.0) / kLn2;
  const double shift_q = y * double(n);

  // log2 of the contribution of type k, or -inf if it contributes nothing
  auto log_term = [&](const std::vector<int>& k) {
    double a = 0.0, b = shift_q, mult = log2_nfact;
    for (std::size_t i = 0; i < d; ++i) {
      if (k[i] == 0) continue;
      a += k[i] * lp[i];
      b += k[i] * lq[i];
      mult -= std::lgamma(double(k[i]) + 1.0) / kLn2;
    }
    if (!(a > b)) return ninf;  // also covers a = -inf
    double diff = b == ninf ? 0.0 : std::log1p(-std::exp2(b - a)) / kLn2;
    return mult + a + diff;
  };

  // per-chunk pass over types with a fixed last coordinate
  auto run_chunk = [&](int last, double shift, CompensatedSum* acc, double* max_out) {
    std::vector<int> k(d, 0);
    double local_max = ninf;
    auto visit = [&](const std::vector<int>& kk) {
      double v = log_term(kk);
      if (v == ninf) return;
      if (acc)
        acc->add(std::exp2(v - shift));
      else
        local_max = std::max(local_max, v);
    };
    if (d == 1) {
      k[0] = nn;
      visit(k);
    } else {
      k[d - 1] = last;
      detail::for_each_composition(k, d - 1, nn - last, visit);
    }
    if (max_out) *max_out = local_max;
  };

  const int chunks = d == 1 ? 1 : nn + 1;
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(jobs, std::size_t(chunks)));
  auto parallel_for = [&](auto&& body) {
    if (workers == 1) {
      for (int c = 0; c < chunks; ++c) body(c);
      return;
    }
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (int c = int(w); c < chunks; c += int(workers)) body(c);
      });
    for (auto& t : pool) t.join();
  };

  std::vector<double> maxima(static_cast<std::size_t>(chunks), ninf);
  parallel_for([&](int c) { run_chunk(c, 0.0, nullptr, &maxima[std::size_t(c)]); });
  double shift = *std::max_element(maxima.begin(), maxima.end());
  if (shift == ninf) return 0.0;
  std::vector<CompensatedSum> partial(static_cast<std::size_t>(chunks));
  parallel_for([&](int c) { run_chunk(c, shift, &partial[std::size_t(c)], nullptr); });
  CompensatedSum total;
  for (const auto& part : partial) total.merge(part);
  return total.value() * std::exp2(shift);
}

// ---------------------------------------------------------------------------
// Scans

enum class SteinEngine { dense, dp };

inline const char* to_string(SteinEngine e) { return e == SteinEngine::dense ? "dense" : "dp"; }

struct SteinRow {
  std::size_t n = 0;
  double y = 0.0;
  double value = 0.0;
  SteinEngine engine = SteinEngine::dense;
};

struct SteinCurve {
  std::vector<SteinRow> rows;

  std::string to_csv() const {
    std::string out = "n,y,value,engine\n";
    char buf[96];
    for (const auto& r : rows) {
      std::snprintf(buf, sizeof buf, "%zu,%.12e,%.12e,%s\n", r.n, r.y, r.value,
                    to_string(r.engine));
      out += buf;
    }
    return out;
  }
};

/// A pair of hypotheses in either representation.
struct HypothesisPair {
  HermitianOperator rho;
  HermitianOperator sigma;

  static HypothesisPair from_distributions(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size()) throw Error(ErrorKind::shape, "distributions differ in length");
    detail::check_distribution(p, "p");
    detail::check_distribution(q, "q");
    return {HermitianOperator::diagonal(p), HermitianOperator::diagonal(q)};
  }

  /// Eigenvalue pairs in a common eigenbasis; requires [ρ, σ] = 0.
  std::pair<std::vector<double>, std::vector<double>> commuting_spectra() const {
    detail::check_same_dim(rho, sigma);
    const ComplexMatrix& a = rho.matrix();
    const ComplexMatrix& b = sigma.matrix();
    if ((a * b - b * a).cwiseAbs().maxCoeff() > 1e-10) {
      throw Error(ErrorKind::mode, "dp engine requires commuting hypotheses");
    }
    // diagonalize σ inside each eigenspace of ρ
    auto eig = hermitian_eig(rho);
    const auto& lam = eig.eigenvalues;
    std::vector<double> p, q;
    Eigen::Index start = 0;
    while (start < lam.size()) {
      Eigen::Index stop = start + 1;
      while (stop < lam.size() && lam(stop) - lam(start) < 1e-9) ++stop;
      ComplexMatrix u = eig.eigenvectors.middleCols(start, stop - start);
      ComplexMatrix restricted = u.adjoint() * b * u;
      restricted = 0.5 * (restricted + restricted.adjoint()).eval();
      Eigen::SelfAdjointEigenSolver<ComplexMatrix> inner(restricted);
      for (Eigen::Index k = 0; k < inner.eigenvalues().size(); ++k) {
        p.push_back(std::max(0.0, double(lam(start + k))));
        q.push_back(std::max(0.0, double(inner.eigenvalues()(k))));
      }
      start = stop;
    }
    double sp = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      sp += p[i];
      sq += q[i];
    }
    for (auto& v : p) v /= sp;
    for (auto& v : q) v /= sq;
    return {p, q};
  }
};

inline SteinCurve stein_scan(const HypothesisPair& pair, std::span<const double> y_grid,
                             std::span<const std::size_t> n_grid, SteinEngine engine,
                             std::size_t jobs = 1, std::size_t cap = kDenseTestCap) {
  if (y_grid.empty() || n_grid.empty()) throw Error(ErrorKind::domain, "empty grid");
  std::vector<double> p, q;
  if (engine == SteinEngine::dp) std::tie(p, q) = pair.commuting_spectra();
  else
    for (std::size_t n : n_grid) detail::checked_power_dim(pair.rho.dim(), n, cap);
  SteinCurve out;
  out.rows.resize(n_grid.size() * y_grid.size());
  auto eval = [&](std::size_t idx) {
    std::size_t n = n_grid[idx / y_grid.size()];
    double y = y_grid[idx % y_grid.size()];
    double v = engine == SteinEngine::dp
                   ? stein_quantity_commuting(p, q, n, y)
                   : stein_quantity_dense(pair.rho, pair.sigma, n, y, cap);
    out.rows[idx] = {n, y, v, engine};
  };
  const std::size_t total = out.rows.size();
  const std::size_t workers = std::max<std::size_t>(1, std::min(jobs, total));
  if (workers == 1) {
    for (std::size_t i = 0; i < total; ++i) eval(i);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < total; i += workers) eval(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    for (auto& t : pool) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace eaudit
