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

// Channels, non-entangling audits and the asymptotic bracket
// E_D ≤ E_R^∞ ≤ E_C estimated at finite copy number.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "eaudit/hypotest.hpp"
#include "eaudit/measures.hpp"
#include "eaudit/separability.hpp"
#include "eaudit/state_io.hpp"

namespace eaudit {

inline constexpr double kChoiPositivityTol = 1e-9;
inline constexpr double kTracePreservationTol = 1e-8;

/// Λ(X) = tr(MX)·accept + tr((I−M)X)·reject.
struct MeasurePrepare {
  HermitianOperator effect;
  HermitianOperator accept;
  HermitianOperator reject;
};

/// A CPTP map given by its Choi matrix J = Σ_ij Λ(|i⟩⟨j|) ⊗ |i⟩⟨j|, with
/// the output factor first.
class QuantumChannel {
 public:
  QuantumChannel(HermitianOperator choi, BipartiteDims in, BipartiteDims out)
      : choi_(std::move(choi)), in_(in), out_(out) {
    validate();
  }

  static QuantumChannel measure_prepare(const HermitianOperator& effect,
                                        const DensityOperator& accept,
                                        const DensityOperator& reject,
                                        const BipartiteDims& in) {
    if (effect.dim() != in.total()) {
      throw Error(ErrorKind::shape, "effect does not act on the input space");
    }
    if (!(accept.dims() == reject.dims())) {
      throw Error(ErrorKind::shape, "prepared states have different dimensions");
    }
    auto ev = hermitian_eigenvalues(effect);
    if (ev(0) < -kChoiPositivityTol || ev(ev.size() - 1) > 1.0 + kChoiPositivityTol) {
      throw Error(ErrorKind::positivity, "effect is not between 0 and I");
    }
    ComplexMatrix mt = effect.matrix().transpose();
    ComplexMatrix rest = ComplexMatrix::Identity(mt.rows(), mt.cols()) - mt;
    ComplexMatrix j = kron(accept.matrix(), mt) + kron(reject.matrix(), rest);
    QuantumChannel ch(HermitianOperator(j), in, accept.dims());
    ch.form_ = MeasurePrepare{effect, accept.op(), reject.op()};
    return ch;
  }

  static QuantumChannel identity(const BipartiteDims& d) {
    const std::size_t n = d.total();
    ComplexVector v = ComplexVector::Zero(Eigen::Index(n * n));
    for (std::size_t i = 0; i < n; ++i) v(Eigen::Index(i * n + i)) = 1.0;
    return QuantumChannel(HermitianOperator::trusted(v * v.adjoint()), d, d);
  }

  static QuantumChannel constant(const DensityOperator& omega, const BipartiteDims& in) {
    auto id = HermitianOperator::identity(in.total());
    auto ch = measure_prepare(id, omega, omega, in);
    return ch;
  }

  /// t·a + (1−t)·b. Two-point structure survives when both share an effect.
  friend QuantumChannel mix(const QuantumChannel& a, const QuantumChannel& b, double t) {
    if (!(a.in_ == b.in_) || !(a.out_ == b.out_)) {
      throw Error(ErrorKind::shape, "mixed channels must have equal dimensions");
    }
    if (!(t >= 0.0 && t <= 1.0)) throw Error(ErrorKind::domain, "mixing weight outside [0,1]");
    QuantumChannel out(a.choi_ * t + b.choi_ * (1.0 - t), a.in_, a.out_);
    if (a.form_ && b.form_ &&
        (a.form_->effect.matrix() - b.form_->effect.matrix()).cwiseAbs().maxCoeff() <= 1e-12) {
      out.form_ = MeasurePrepare{a.form_->effect, a.form_->accept * t + b.form_->accept * (1.0 - t),
                                 a.form_->reject * t + b.form_->reject * (1.0 - t)};
    }
    return out;
  }

  const HermitianOperator& choi() const { return choi_; }
  const BipartiteDims& input_dims() const { return in_; }
  const BipartiteDims& output_dims() const { return out_; }
  const std::optional<MeasurePrepare>& measure_prepare_form() const { return form_; }

  HermitianOperator apply(const HermitianOperator& x) const {
    if (x.dim() != in_.total()) throw Error(ErrorKind::shape, "input has wrong dimension");
    const std::size_t di = in_.total(), dout = out_.total();
    const ComplexMatrix& j = choi_.matrix();
    ComplexMatrix y = ComplexMatrix::Zero(Eigen::Index(dout), Eigen::Index(dout));
    for (std::size_t o = 0; o < dout; ++o)
      for (std::size_t p = 0; p < dout; ++p) {
        Complex acc = 0.0;
        for (std::size_t i = 0; i < di; ++i)
          for (std::size_t k = 0; k < di; ++k)
            acc += x(i, k) * j(Eigen::Index(o * di + i), Eigen::Index(p * di + k));
        y(Eigen::Index(o), Eigen::Index(p)) = acc;
      }
    return HermitianOperator::trusted(0.5 * (y + y.adjoint()));
  }

  DensityOperator apply(const DensityOperator& rho) const {
    if (!(rho.dims() == in_)) throw Error(ErrorKind::shape, "input state has wrong dims");
    return validate_state(apply(rho.op()), out_);
  }

  /// Λ† in the Hilbert–Schmidt inner product.
  HermitianOperator adjoint(const HermitianOperator& w) const {
    if (w.dim() != out_.total()) throw Error(ErrorKind::shape, "observable has wrong dimension");
    const std::size_t di = in_.total(), dout = out_.total();
    const ComplexMatrix& j = choi_.matrix();
    ComplexMatrix a = ComplexMatrix::Zero(Eigen::Index(di), Eigen::Index(di));
    for (std::size_t i = 0; i < di; ++i)
      for (std::size_t k = 0; k < di; ++k) {
        Complex acc = 0.0;
        for (std::size_t o = 0; o < dout; ++o)
          for (std::size_t p = 0; p < dout; ++p)
            acc += w(p, o) * j(Eigen::Index(o * di + i), Eigen::Index(p * di + k));
        a(Eigen::Index(k), Eigen::Index(i)) = acc;
      }
    return HermitianOperator::trusted(0.5 * (a + a.adjoint()));
  }

 private:
  void validate() const {
    if (choi_.dim() != in_.total() * out_.total()) {
      throw Error(ErrorKind::shape, "Choi matrix dimension " + std::to_string(choi_.dim()) +
                                        " does not match " + to_string(out_) + " x " +
                                        to_string(in_));
    }
    double lmin = min_eigenvalue(choi_);
    if (lmin < -kChoiPositivityTol) {
      throw Error(ErrorKind::positivity,
                  "Choi matrix has eigenvalue " + std::to_string(lmin));
    }
    ComplexMatrix reduced = partial_trace(choi_.matrix(), out_.total(), in_.total(), Subsystem::A);
    double dev = (reduced - ComplexMatrix::Identity(reduced.rows(), reduced.cols()))
                     .cwiseAbs()
                     .maxCoeff();
    if (dev > kTracePreservationTol) {
      throw Error(ErrorKind::trace, "channel is not trace preserving (deviation " +
                                        std::to_string(dev) + ")");
    }
  }

  HermitianOperator choi_;
  BipartiteDims in_;
  BipartiteDims out_;
  std::optional<MeasurePrepare> form_;
};

// ---------------------------------------------------------------------------
// Choi JSON

inline constexpr int kChannelSchemaVersion = 1;

inline std::string channel_to_json(const QuantumChannel& ch) {
  std::ostringstream os;
  auto dims = [](const BipartiteDims& d) {
    return "{\"dA\": " + std::to_string(d.dA) + ", \"dB\": " + std::to_string(d.dB) + "}";
  };
  os << "{\n  \"schema\": " << kChannelSchemaVersion << ",\n  \"kind\": \"choi\",\n"
     << "  \"in\": " << dims(ch.input_dims()) << ",\n  \"out\": " << dims(ch.output_dims())
     << ",\n  \"re\": ";
  detail::write_matrix_rows(os, ch.choi().matrix(), false, "  ");
  os << ",\n  \"im\": ";
  detail::write_matrix_rows(os, ch.choi().matrix(), true, "  ");
  if (const auto& f = ch.measure_prepare_form()) {
    os << ",\n  \"measure_prepare\": {";
    const std::pair<const char*, const HermitianOperator*> parts[] = {
        {"effect", &f->effect}, {"accept", &f->accept}, {"reject", &f->reject}};
    bool first = true;
    for (const auto& [name, op] : parts) {
      for (bool imag : {false, true}) {
        os << (first ? "\n" : ",\n") << "    \"" << name << (imag ? "_im" : "_re") << "\": ";
        detail::write_matrix_rows(os, op->matrix(), imag, "    ");
        first = false;
      }
    }
    os << "\n  }";
  }
  os << "\n}\n";
  return os.str();
}

inline QuantumChannel channel_from_json(const std::string& text) {
  auto doc = detail::parse_document(text);
  if (!doc.is_object()) throw Error(ErrorKind::format, "channel document must be an object");
  if (!doc.contains("schema") || !doc["schema"].is_number_integer() ||
      doc["schema"].get<int>() != kChannelSchemaVersion) {
    throw Error(ErrorKind::format, "field 'schema' missing or unsupported");
  }
  if (!doc.contains("kind") || doc["kind"] != "choi") {
    throw Error(ErrorKind::format, "field 'kind' must be \"choi\"");
  }
  auto read_dims = [&](const char* key) {
    if (!doc.contains(key) || !doc[key].is_object()) {
      throw Error(ErrorKind::format, std::string("field '") + key + "' missing");
    }
    return BipartiteDims{detail::read_count(doc[key], "dA"), detail::read_count(doc[key], "dB")};
  };
  BipartiteDims in = read_dims("in"), out = read_dims("out");
  ComplexMatrix j = detail::read_matrix(doc, "", in.total() * out.total());
  QuantumChannel ch(HermitianOperator(j), in, out);
  if (!doc.contains("measure_prepare")) return ch;
  const auto& mp = doc["measure_prepare"];
  if (!mp.is_object()) throw Error(ErrorKind::format, "'measure_prepare' must be an object");
  HermitianOperator effect(detail::read_matrix(mp, "effect_", in.total()));
  auto accept = validate_state(HermitianOperator(detail::read_matrix(mp, "accept_", out.total())), out);
  auto reject = validate_state(HermitianOperator(detail::read_matrix(mp, "reject_", out.total())), out);
  auto rebuilt = QuantumChannel::measure_prepare(effect, accept, reject, in);
  double dev = (rebuilt.choi().matrix() - ch.choi().matrix()).cwiseAbs().maxCoeff();
  if (dev > 1e-9) {
    throw Error(ErrorKind::format, "measure_prepare block disagrees with the Choi matrix");
  }
  return rebuilt;
}

inline QuantumChannel load_channel(const std::string& path) {
  return channel_from_json(detail::read_file(path));
}

inline void save_channel(const QuantumChannel& ch, const std::string& path) {
  detail::write_file(path, channel_to_json(ch));
}

// ---------------------------------------------------------------------------
// Formation maps

struct FormationMap {
  QuantumChannel channel;
  DensityOperator pi;
  std::size_t copies = 0;
};

/// Ψ(A) = tr(A Φ) ρ_n + tr(A (I − Φ)) π with Φ = (φ⁺)^⊗k, on the grouped
/// input (A1..Ak | B1..Bk).
inline FormationMap build_formation_map(const DensityOperator& target, std::size_t k,
                                        const DensityOperator& pi) {
  if (k == 0) throw Error(ErrorKind::domain, "k must be >= 1");
  if (!(pi.dims() == target.dims())) {
    throw Error(ErrorKind::shape, "mixing state and target have different dims");
  }
  DensityOperator phi = make_max_entangled(k);
  auto ch = QuantumChannel::measure_prepare(phi.op(), target, pi, phi.dims());
  return {std::move(ch), pi, k};
}

/// π taken from the optimal global-robustness decomposition of the target.
inline FormationMap build_formation_map(const DensityOperator& target, std::size_t k,
                                        const SdpOptions& options = {}) {
  auto w = compute_rg(target, options);
  return build_formation_map(target, k, normalize_state(w.pi, target.dims()));
}

/// Smallest k with 2^k ≥ 1 + R_G(target), so separable inputs land on
/// separable outputs of the accepting branch.
inline std::size_t formation_copies(const DensityOperator& target) {
  double lrg = std::log2(1.0 + compute_rg(target).s);
  return std::max<std::size_t>(1, std::size_t(std::ceil(lrg - 1e-9)));
}

// ---------------------------------------------------------------------------
// Non-entangling audits

enum class AuditMode { structural, sampled };

inline const char* to_string(AuditMode m) {
  return m == AuditMode::structural ? "structural" : "sampled";
}

struct AuditOptions {
  std::size_t samples = 100;
  std::size_t ascent_starts = 4;
  std::size_t max_sweeps = 30;
  std::uint64_t seed = 0;
};

struct NonEntanglingAudit {
  double epsilon = 0.0;
  ProductVertex worst_input;
  std::vector<double> values;
  bool exact = false;
  AuditMode mode = AuditMode::structural;
};

namespace detail {

inline ComplexVector max_eigvec(const ComplexMatrix& h) {
  return canonical_min_eigvec(-h).second;
}

/// Alternating maximization of R_G(Λ(a⊗b)). While the output is still PPT
/// the robustness witness vanishes, so the climb follows the partial
/// transpose's lowest eigenvector instead until the output turns entangled.
inline std::pair<double, ProductVertex> robustness_ascent(const QuantumChannel& ch,
                                                          ProductVertex v, double value,
                                                          std::size_t sweeps) {
  const auto& d = ch.input_dims();
  const auto& od = ch.output_dims();
  auto pt_witness = [&](const HermitianOperator& y) {
    auto [lmin, u] = canonical_min_eigvec(partial_transpose(y, od.dA, od.dB).matrix());
    ComplexMatrix proj = u * u.adjoint();
    return std::pair{-lmin, HermitianOperator::trusted(-partial_transpose(proj, od.dA, od.dB))};
  };
  double negativity = pt_witness(ch.apply(v.projector())).first;
  for (std::size_t s = 0; s < sweeps; ++s) {
    HermitianOperator y = ch.apply(v.projector());
    auto w = compute_rg(y, od);
    HermitianOperator witness = w.s > 0.0 ? w.witness : pt_witness(y).second;
    HermitianOperator g = ch.adjoint(witness);
    ProductVertex next = v;
    next.a = max_eigvec(contract_b(g.matrix(), next.b, d));
    next.b = max_eigvec(contract_a(g.matrix(), next.a, d));
    HermitianOperator ny = ch.apply(next.projector());
    double nv = compute_rg(ny, od).s;
    double nneg = pt_witness(ny).first;
    bool better = nv > value + 1e-12 || (value <= 0.0 && nv <= 0.0 && nneg > negativity + 1e-12);
    if (!better) break;
    v = next;
    value = nv;
    negativity = nneg;
  }
  return {value, v};
}

}  // namespace detail

/// Estimates ε = max over separable σ of R_G(Λ(σ)).
///
/// Structural mode applies to two-point measure-and-prepare channels: the
/// image of the separable set is a segment of the line through the two
/// prepared states, and R_G is convex along it, so its endpoints decide.
/// Sampled mode returns a lower bound from random product inputs refined by
/// witness ascent.
inline NonEntanglingAudit audit_non_entangling(const QuantumChannel& ch, AuditMode mode,
                                               const AuditOptions& opt = {}) {
  NonEntanglingAudit out;
  out.mode = mode;
  const auto& in = ch.input_dims();
  if (mode == AuditMode::structural) {
    const auto& form = ch.measure_prepare_form();
    if (!form) {
      throw Error(ErrorKind::mode, "structural audit needs a two-point measure-and-prepare channel");
    }
    SeesawOptions so;
    so.seed = opt.seed;
    HermitianOperator rest = HermitianOperator::identity(in.total()) - form->effect;
    double w_hi = std::clamp(*max_separable_overlap(form->effect, in, OverlapMethod::ppt).upper, 0.0, 1.0);
    double w_lo = std::clamp(1.0 - *max_separable_overlap(rest, in, OverlapMethod::ppt).upper, 0.0, 1.0);
    ProductVertex v_hi = lmo_product_seesaw(-form->effect, in, so).vertex;
    ProductVertex v_lo = lmo_product_seesaw(form->effect, in, so).vertex;
    const std::pair<double, const ProductVertex*> ends[] = {{w_lo, &v_lo}, {w_hi, &v_hi}};
    out.epsilon = -1.0;
    for (const auto& [w, v] : ends) {
      HermitianOperator tau = form->accept * w + form->reject * (1.0 - w);
      double s = compute_rg(tau, ch.output_dims()).s;
      out.values.push_back(s);
      if (s > out.epsilon) {
        out.epsilon = s;
        out.worst_input = *v;
      }
    }
    out.exact = true;
    return out;
  }
  struct Sample {
    double value;
    ProductVertex vertex;
  };
  std::vector<Sample> samples;
  for (std::size_t s = 0; s < std::max<std::size_t>(1, opt.samples); ++s) {
    Rng rng = restart_rng(opt.seed, s);
    ProductVertex v{random_unit_vector(in.dA, rng), random_unit_vector(in.dB, rng)};
    double r = compute_rg(ch.apply(v.projector()), ch.output_dims()).s;
    samples.push_back({r, v});
    out.values.push_back(r);
  }
  std::vector<std::size_t> order(samples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return samples[x].value > samples[y].value;
  });
  for (std::size_t i = 0; i < std::min(opt.ascent_starts, order.size()); ++i) {
    const auto& start = samples[order[i]];
    auto [value, vertex] = detail::robustness_ascent(ch, start.vertex, start.value, opt.max_sweeps);
    samples.push_back({value, vertex});
    out.values.push_back(value);
  }
  out.epsilon = -1.0;
  for (const auto& s : samples) {
    if (s.value > out.epsilon) {
      out.epsilon = s.value;
      out.worst_input = s.vertex;
    }
  }
  out.exact = false;
  return out;
}

// ---------------------------------------------------------------------------
// Monotonicity

struct MonotonicityOptions {
  bool check_er = true;
  ErOptions er;
};

struct MonotonicityReport {
  double epsilon = 0.0;
  double lrg_input = 0.0;
  double lrg_output = 0.0;
  double lrg_margin = 0.0;  ///< LR_G(ρ) + log₂(1+ε) − LR_G(Λ(ρ))
  std::optional<double> er_input_hull;
  std::optional<double> er_output_ppt;
  std::optional<double> er_margin;

  bool holds(double lrg_tol = 1e-6, double er_tol = 1e-4) const {
    return lrg_margin >= -lrg_tol && (!er_margin || *er_margin >= -er_tol);
  }
};

inline MonotonicityReport monotonicity_check(const QuantumChannel& ch, const DensityOperator& rho,
                                             double epsilon, const MonotonicityOptions& opt = {}) {
  if (!(epsilon >= 0.0)) throw Error(ErrorKind::domain, "epsilon must be non-negative");
  DensityOperator out = ch.apply(rho);
  MonotonicityReport rep;
  rep.epsilon = epsilon;
  const double allowance = std::log2(1.0 + epsilon);
  rep.lrg_input = log_robustness(rho);
  rep.lrg_output = log_robustness(out);
  rep.lrg_margin = rep.lrg_input + allowance - rep.lrg_output;
  if (opt.check_er) {
    rep.er_input_hull = compute_er(rho, SeparableSet::hull, opt.er).value;
    rep.er_output_ppt = compute_er(out, SeparableSet::ppt, opt.er).value;
    rep.er_margin = *rep.er_input_hull + allowance - *rep.er_output_ppt;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Singlet fraction under non-entangling maps

struct FsepOptions {
  SeparableSet set = SeparableSet::ppt;
  std::size_t iterations = 300;
  std::size_t average = 50;
  std::size_t restarts = 8;
  std::uint64_t seed = 0;
  SdpOptions sdp;
  /// Extra unnormalized hull points τ = c·σ tried as upper-bound candidates.
  std::vector<HermitianOperator> candidates;
};

struct FsepDualResult {
  double value = 0.0;
  /// log₂(tr τ)/n; empty when the optimum is τ = 0 (b → −∞).
  std::optional<double> b_star;
  HermitianOperator sigma;
  double scale = 0.0;  ///< tr τ = 2^{b n}
  BoundKind bound_kind = BoundKind::lower_ppt;
  double certified_gap = 0.0;

  HermitianOperator tau() const { return sigma * scale; }
};

namespace detail {

inline double fsep_objective(const HermitianOperator& rho_n, const HermitianOperator& tau,
                             double kappa) {
  return positive_part_trace(rho_n - tau) + kappa * tau.trace();
}

// best scale c ∈ [0, 1/κ] for a fixed normalized σ
inline std::pair<double, double> fsep_best_scale(const HermitianOperator& rho_n,
                                                 const HermitianOperator& sigma, double kappa) {
  auto f = [&](double c) { return fsep_objective(rho_n, sigma * c, kappa); };
  double c = golden_section(f, 1.0 / kappa, 1e-10);
  return {c, f(c)};
}

inline void fsep_take(FsepDualResult& best, const HermitianOperator& sigma, double c, double v) {
  if (v < best.value) {
    best.value = v;
    best.sigma = sigma;
    best.scale = c;
  }
}

}  // namespace detail

/// F(ρ^⊗n; 2^{nD}) = min over separable σ and real b of
///   tr(ρ^⊗n − 2^{bn}σ)₊ + 2^{(b−D)n},
/// solved jointly in τ = 2^{bn}σ over the cone of the chosen set.
inline FsepDualResult fsep_dual(const DensityOperator& rho, std::size_t n, double D,
                                const FsepOptions& opt = {}) {
  detail::checked_power_dim(rho.dim(), n, kDenseTestCap);
  if (!std::isfinite(D)) throw Error(ErrorKind::domain, "D must be finite");
  DensityOperator rn = tensor_power(rho, n);
  const BipartiteDims dims = rn.dims();
  const std::size_t N = dims.total();
  const double kappa = std::exp2(-D * double(n));

  SdpProblem p;
  std::size_t pb = p.add_block(N), tb = p.add_block(N), zb = p.add_block(N), qb = p.add_block(N);
  p.objective[pb] = ComplexMatrix::Identity(N, N);
  p.objective[tb] = kappa * ComplexMatrix::Identity(N, N);
  const bool real_only = detail::is_real_matrix(rn.matrix());
  detail::add_partial_transpose_link(p, tb, zb, dims, ComplexMatrix::Zero(N, N), real_only);
  for (std::size_t r = 0; r < N; ++r)
    for (std::size_t c = r; c < N; ++c)
      for (bool imag : {false, true}) {
        if (imag && (r == c || real_only)) continue;
        SdpConstraint con;
        con.terms.push_back(detail::entry_functional(pb, r, c, imag, 1.0));
        con.terms.push_back(detail::entry_functional(tb, r, c, imag, 1.0));
        con.terms.push_back(detail::entry_functional(qb, r, c, imag, -1.0));
        Complex v = rn.matrix()(Eigen::Index(r), Eigen::Index(c));
        con.rhs = imag ? v.imag() : v.real();
        p.constraints.push_back(std::move(con));
      }
  SdpSolver solver(opt.sdp);
  auto sol = solver.solve(p);
  require_near_optimal(sol, "singlet-fraction dual");

  // feasible PPT-cone point from the primal block
  HermitianOperator tau = apply_function(HermitianOperator::trusted(sol.primal[tb]),
                                         [](double v) { return v < 0.0 ? 0.0 : v; });
  double lmin = min_eigenvalue(partial_transpose(tau, dims.dA, dims.dB));
  if (lmin < 0.0) tau += HermitianOperator::identity(N) * (-lmin);

  FsepDualResult out;
  out.value = 1.0;  // τ = 0
  out.sigma = HermitianOperator::identity(N) * (1.0 / double(N));
  out.scale = 0.0;
  double c_ppt = tau.trace();
  HermitianOperator sigma_ppt = c_ppt > 0.0 ? tau * (1.0 / c_ppt) : out.sigma;
  double lower = std::min(sol.dual_objective, sol.primal_objective);

  if (opt.set == SeparableSet::ppt) {
    if (c_ppt > 0.0) detail::fsep_take(out, sigma_ppt, c_ppt, detail::fsep_objective(rn.op(), tau, kappa));
    out.bound_kind = dims.small_enough_for_ppt_exactness() ? BoundKind::exact_smalldim
                                                           : BoundKind::lower_ppt;
    out.certified_gap = std::max(0.0, out.value - lower);
  } else {
    out.bound_kind = BoundKind::upper_hull;
    SeesawOptions so;
    so.restarts = opt.restarts;
    so.seed = opt.seed;
    for (const auto& cand : opt.candidates) {
      double c = cand.trace();
      if (cand.dim() != N || !(c > 0.0)) continue;
      HermitianOperator s = cand * (1.0 / c);
      auto [cb, v] = detail::fsep_best_scale(rn.op(), s, kappa);
      detail::fsep_take(out, s, cb, v);
    }
    if (c_ppt > 1e-9) {
      auto dec = find_separable_decomposition(normalize_state(sigma_ppt, dims), 60, 1e-7, 120, so);
      HermitianOperator sigma_h = HermitianOperator::zero(N);
      double total = 0.0;
      for (std::size_t i = 0; i < dec.vertices.size(); ++i) {
        sigma_h += dec.vertices[i].projector() * dec.weights[i];
        total += dec.weights[i];
      }
      if (total > 0.0) {
        sigma_h *= 1.0 / total;
        auto [c, v] = detail::fsep_best_scale(rn.op(), sigma_h, kappa);
        detail::fsep_take(out, sigma_h, c, v);
      }
    }
    // subgradient conditional gradient over the hull at fixed scale
    if (out.scale > 0.0 && opt.iterations > 0) {
      const double c = out.scale;
      HermitianOperator s = out.sigma;
      HermitianOperator avg = HermitianOperator::zero(N);
      std::size_t counted = 0;
      for (std::size_t t = 0; t < opt.iterations; ++t) {
        auto eig = hermitian_eig(rn.op() - s * c);
        HermitianOperator pos = apply_function(eig, [](double v) { return v > kEigenvalueFloor ? 1.0 : 0.0; });
        SeesawOptions st = so;
        st.seed = opt.seed + 104729 * (t + 1);
        auto lmo = lmo_product_seesaw(-pos, dims, st);
        double gamma = 2.0 / double(t + 3);
        s = s * (1.0 - gamma) + lmo.vertex.projector() * gamma;
        if (t + opt.average >= opt.iterations) {
          avg += s;
          ++counted;
        }
      }
      for (const HermitianOperator* cand : {&s, &avg}) {
        if (cand == &avg) {
          if (counted == 0) continue;
          avg *= 1.0 / double(counted);
        }
        auto [cb, v] = detail::fsep_best_scale(rn.op(), *cand, kappa);
        detail::fsep_take(out, *cand, cb, v);
      }
    }
    out.certified_gap = std::max(0.0, out.value - lower);
  }
  if (out.scale > 1e-12) out.b_star = std::log2(out.scale) / double(n);
  return out;
}

struct FsepSweepRow {
  double D = 0.0;
  std::size_t n = 0;
  double value = 0.0;
};

struct FsepSweep {
  std::vector<FsepSweepRow> rows;
  std::vector<FsepDualResult> results;

  std::string to_csv() const {
    std::string out = "D,n,value\n";
    char buf[96];
    for (const auto& r : rows) {
      std::snprintf(buf, sizeof buf, "%.12e,%zu,%.12e\n", r.D, r.n, r.value);
      out += buf;
    }
    return out;
  }
};

inline std::vector<double> default_d_grid() {
  std::vector<double> g;
  for (int i = 0; i <= 40; ++i) g.push_back(0.05 * i);
  return g;
}

/// Grid points run as independent jobs with per-index seeds; a final pass
/// in grid order re-evaluates each hull point at the next D, so swept hull
/// values are non-increasing in D.
inline FsepSweep fsep_sweep(const DensityOperator& rho, std::size_t n,
                            const std::vector<double>& d_grid, const FsepOptions& opt = {},
                            std::size_t jobs = 1) {
  if (d_grid.empty()) throw Error(ErrorKind::domain, "empty D grid");
  FsepSweep out;
  out.results.resize(d_grid.size());
  auto eval = [&](std::size_t i) {
    FsepOptions o = opt;
    o.seed = opt.seed + 7 * i;
    out.results[i] = fsep_dual(rho, n, d_grid[i], o);
  };
  const std::size_t workers = std::max<std::size_t>(1, std::min(jobs, d_grid.size()));
  if (workers == 1) {
    for (std::size_t i = 0; i < d_grid.size(); ++i) eval(i);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < d_grid.size(); i += workers) eval(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    for (auto& t : pool) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  if (opt.set == SeparableSet::hull) {
    const HermitianOperator rn = tensor_power(rho, n).op();
    for (std::size_t i = 1; i < d_grid.size(); ++i) {
      const auto& prev = out.results[i - 1];
      auto& cur = out.results[i];
      double kappa = std::exp2(-d_grid[i] * double(n));
      double v = detail::fsep_objective(rn, prev.tau(), kappa);
      if (v < cur.value) {
        double gap_shift = cur.value - v;
        cur.value = v;
        cur.sigma = prev.sigma;
        cur.scale = prev.scale;
        cur.b_star = prev.b_star;
        cur.certified_gap = std::max(0.0, cur.certified_gap - gap_shift);
      }
    }
  }
  for (std::size_t i = 0; i < d_grid.size(); ++i) {
    out.rows.push_back({d_grid[i], n, out.results[i].value});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Finite-copy bracket

inline constexpr std::size_t kMaxBracketCopies = 2;

struct BracketOptions {
  double threshold = 0.99;
  std::vector<double> d_grid = default_d_grid();
  double tol = 1e-4;
  ErOptions er;
  FsepOptions fsep{SeparableSet::hull};
  std::size_t jobs = 1;
};

struct TheoremBracket {
  std::size_t copies = 0;
  double ed_lower = 0.0;
  RegularizationTrace er_ppt;
  RegularizationTrace er_hull;
  double ec_upper = 0.0;
  FsepSweep sweep;
  double tol = 0.0;
  bool consistent = false;

  double band_lower() const { return ed_lower; }
  double band_upper() const { return ec_upper; }
  double width() const { return ec_upper - ed_lower; }
};

inline TheoremBracket theorem_bracket(const DensityOperator& rho, std::size_t max_copies,
                                      const BracketOptions& opt = {}) {
  if (max_copies == 0 || max_copies > kMaxBracketCopies) {
    throw Error(ErrorKind::domain, "copies must be 1 or 2");
  }
  check_copies(rho, max_copies);
  detail::checked_power_dim(rho.dim(), max_copies, kDenseTestCap);
  TheoremBracket out;
  out.copies = max_copies;
  out.tol = opt.tol;
  out.er_ppt = regularized_er_sequence(rho, max_copies, SeparableSet::ppt, opt.er);
  out.er_hull = regularized_er_sequence(rho, max_copies, SeparableSet::hull, opt.er);
  DensityOperator rn = tensor_power(rho, max_copies);
  out.ec_upper = log_robustness(rn) / double(max_copies);
  out.sweep = fsep_sweep(rho, max_copies, opt.d_grid, opt.fsep, opt.jobs);
  out.ed_lower = 0.0;
  for (const auto& row : out.sweep.rows)
    if (row.value >= opt.threshold) out.ed_lower = std::max(out.ed_lower, row.D);
  const double er_lo = out.er_ppt.entries.back().per_copy;
  const double er_hi = out.er_hull.entries.back().per_copy;
  out.consistent = out.ed_lower - opt.tol <= er_lo && er_lo <= er_hi + opt.tol &&
                   er_hi <= out.ec_upper + opt.tol;
  return out;
}

}  // namespace eaudit
