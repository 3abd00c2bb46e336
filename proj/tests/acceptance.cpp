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

// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits non-zero if any line fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "eaudit/eaudit.hpp"

using namespace eaudit;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

struct Line {
  int id;
  std::string title;
  bool pass;
  std::string detail;
};

std::vector<Line> g_lines;

void record(int id, const std::string& title, bool pass, const std::string& detail) {
  g_lines.push_back({id, title, pass, detail});
  std::printf("%s  %2d  %s: %s\n", pass ? "PASS" : "FAIL", id, title.c_str(), detail.c_str());
  std::fflush(stdout);
}

// Every SDP return seen during the run, for the solver-certification line.
struct SdpAudit {
  std::mutex mu;
  std::size_t optimal = 0;
  std::size_t other = 0;
  std::size_t violations = 0;
  double worst_gap_ratio = 0.0;
  double worst_residual = 0.0;
};

SdpAudit g_sdp;

// Every Frank–Wolfe report produced by the criteria below.
struct FwAudit {
  std::size_t reports = 0;
  std::size_t violations = 0;
  double worst_excess = -1.0;
};

FwAudit g_fw;

void audit_fw(const MeasureReport& r, double tol) {
  ++g_fw.reports;
  double excess = r.certified_gap - tol;
  g_fw.worst_excess = std::max(g_fw.worst_excess, excess);
  if (!r.converged || excess > 0.0) ++g_fw.violations;
}

MeasureReport er(const DensityOperator& rho, SeparableSet set, const ErOptions& opt = {}) {
  auto r = compute_er(rho, set, opt);
  audit_fw(r, opt.tol);
  return r;
}

// Bell-diagonal cross-section: S(ρ||σ_t) over σ_t = (t, (1−t)/3 ×3), t ≤ 1/2.
double bell_cross_section(double q) {
  auto f = [q](double t) {
    double r = (1 - q) / 3, s = (1 - t) / 3;
    return q * std::log2(q / t) + 3 * r * std::log2(r / s);
  };
  double a = 1e-9, b = 0.5;
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  while (b - a > 1e-13) {
    double x1 = b - g * (b - a), x2 = a + g * (b - a);
    if (f(x1) <= f(x2))
      b = x2;
    else
      a = x1;
  }
  return f(0.5 * (a + b));
}

// ---------------------------------------------------------------------------

void criterion_1() {
  auto t0 = Clock::now();
  auto phi = make_max_entangled(1);
  double v1 = er(phi, SeparableSet::ppt).value;
  auto seq = regularized_er_sequence(phi, 2, SeparableSet::ppt);
  double v2 = seq.entries[1].per_copy;
  double secs = seconds_since(t0);
  bool ok = std::abs(v1 - 1.0) <= 1e-5 && std::abs(v2 - 1.0) <= 1e-4 && secs < 30.0;
  record(1, "unit normalization", ok,
         "E_R(phi+)=" + fmt("%.9f", v1) + " v_2=" + fmt("%.9f", v2) + " in " + fmt("%.2f", secs) + " s");
}

void criterion_2() {
  Rng rng(2002);
  double worst_er = 0.0, worst_rg = 0.0;
  for (int i = 0; i < 50; ++i) {
    auto rho = random_separable_state({2, 2}, 1 + std::size_t(i % 6), rng);
    worst_er = std::max(worst_er, er(rho, SeparableSet::ppt).value);
    worst_er = std::max(worst_er, er(rho, SeparableSet::hull).value);
    worst_rg = std::max(worst_rg, compute_rg(rho).s);
  }
  record(2, "separable zeroing", worst_er <= 1e-6 && worst_rg <= 1e-7,
         "50 mixtures, max E_R=" + fmt("%.3e", worst_er) + " max R_G=" + fmt("%.3e", worst_rg));
}

void criterion_3() {
  auto t0 = Clock::now();
  double dev = std::abs(compute_rg(make_max_entangled(1)).s - 1.0);
  std::string detail = "R_G(phi+) dev " + fmt("%.2e", dev);
  for (double p : {0.5, 0.8, 1.0}) {
    auto rho = make_werner(p);
    auto w = compute_rg(rho);
    double s = (3 * p - 1) / 2;
    // analytic pair: mixing with the complement of psi- reaches the PPT
    // boundary, and the separable psi- overlap cap of 1/2 certifies optimality
    auto pi = (HermitianOperator::identity(4) - bell::projector(3)) * (1.0 / 3.0);
    auto mixed = (rho.op() + pi * s) * (1.0 / (1.0 + s));
    double boundary = min_eigenvalue(partial_transpose(mixed, 2, 2));
    double cap = rho.op().inner(bell::projector(3)) / (1.0 + s);
    dev = std::max({dev, std::abs(w.s - s), std::max(0.0, -boundary), std::abs(cap - 0.5)});
  }
  double secs = seconds_since(t0);
  record(3, "robustness oracles", dev <= 1e-6 && secs < 10.0,
         "max deviation from analytic " + fmt("%.2e", dev) + " in " + fmt("%.2f", secs) + " s");
}

void criterion_4() {
  auto rho = make_werner(0.8);
  double oracle = bell_cross_section(0.85);
  double lo = er(rho, SeparableSet::ppt).value;
  double hi = er(rho, SeparableSet::hull).value;
  bool ok = std::abs(lo - 0.39016) <= 1e-4 && std::abs(hi - 0.39016) <= 1e-4 &&
            std::abs(hi - lo) <= 1e-4;
  record(4, "E_R oracle", ok,
         "ppt=" + fmt("%.8f", lo) + " hull=" + fmt("%.8f", hi) + " cross-section=" + fmt("%.8f", oracle));
}

void criterion_5() {
  bool ok = true;
  std::string detail;
  for (std::size_t k = 1; k <= 2; ++k) {
    auto b = max_separable_overlap(make_max_entangled(k));
    double target = std::exp2(-double(k));
    ok = ok && std::abs(*b.lower - target) <= 1e-4 && std::abs(*b.upper - target) <= 1e-4;
    detail += "k=" + std::to_string(k) + " [" + fmt("%.8f", *b.lower) + ", " + fmt("%.8f", *b.upper) + "] ";
  }
  record(5, "separable overlap", ok, detail + "vs 2^-k");
}

void criterion_6() {
  auto t0 = Clock::now();
  std::vector<double> p{0.9, 0.1}, q{0.5, 0.5};
  double below = stein_quantity_commuting(p, q, 200, 0.4);
  double above = stein_quantity_commuting(p, q, 200, 0.65);
  auto pair = HypothesisPair::from_distributions(p, q);
  std::vector<double> ys;
  for (int i = 0; i <= 20; ++i) ys.push_back(-0.5 + 0.1 * i);
  std::vector<std::size_t> ns{1, 2, 3, 4, 5};
  auto dense = stein_scan(pair, ys, ns, SteinEngine::dense);
  auto dp = stein_scan(pair, ys, ns, SteinEngine::dp);
  double dev = 0.0;
  for (std::size_t i = 0; i < dp.rows.size(); ++i)
    dev = std::max(dev, std::abs(dense.rows[i].value - dp.rows[i].value));
  double secs = seconds_since(t0);
  bool ok = below >= 0.99 && above <= 0.01 && dev <= 1e-9 && secs < 5.0;
  record(6, "Stein threshold trend", ok,
         "n=200: value(y=0.4)=" + fmt("%.9f", below) + " (need >=0.99), value(y=0.65)=" +
             fmt("%.9f", above) + " (need <=0.01); dp/dense dev " + fmt("%.1e", dev) + " in " +
             fmt("%.2f", secs) + " s");
}

void criterion_7() {
  Rng rng(2007);
  std::uniform_real_distribution<double> uy(-1.0, 2.0);
  std::uniform_int_distribution<int> ud(2, 4), un(1, 3);
  auto density = [&](std::size_t d) {
    ComplexMatrix g(d, d);
    std::normal_distribution<double> nd;
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) g(i, j) = Complex(nd(rng), nd(rng));
    ComplexMatrix m = g * g.adjoint();
    return HermitianOperator(m / m.trace().real());
  };
  double dev = 0.0;
  for (int i = 0; i < 50; ++i) {
    std::size_t d = std::size_t(ud(rng)), n = std::size_t(un(rng));
    auto rho = density(d);
    auto sigma = density(d);
    double y = uy(rng);
    double t = std::exp2(y * double(n));
    auto pt = neyman_pearson_point(rho, sigma, n, t);
    dev = std::max(dev, std::abs(stein_quantity_dense(rho, sigma, n, y) - ((1 - pt.beta1) - t * pt.beta2)));
  }
  record(7, "Neyman-Pearson identity", dev <= 1e-9, "50 tuples, max deviation " + fmt("%.2e", dev));
}

void criterion_8() {
  std::vector<QuantumChannel> channels;
  Rng rng(2008);
  // formation maps with the robustness-optimal mixing state
  std::vector<DensityOperator> targets = {make_werner(0.6), make_werner(0.9), make_isotropic(0.8),
                                          random_state({2, 2}, rng), random_state({2, 2}, rng)};
  for (const auto& t : targets) channels.push_back(build_formation_map(t, formation_copies(t)).channel);
  // formation maps with entangled mixing states
  const std::pair<double, double> pairs[] = {{1.0, 1.0 / 3.0}, {1.0, 0.6}, {1.0, 1.0}, {0.9, 0.5},
                                             {0.8, 0.8},       {0.7, 0.9}, {0.5, 0.4}};
  for (const auto& [p, q] : pairs) channels.push_back(build_formation_map(make_werner(p), 1, make_werner(q)).channel);
  // mixtures with a separable-output channel sharing the same effect
  auto phi = make_max_entangled(1);
  auto separable_out = QuantumChannel::measure_prepare(phi.op(), make_werner(0.2), make_werner(0.3), {2, 2});
  const double weights[] = {0.0, 0.2, 0.4, 0.5, 0.6, 0.8, 0.9, 1.0};
  for (int i = 0; i < 8; ++i) {
    auto fm = build_formation_map(make_werner(1.0), 1, make_werner(0.3 + 0.1 * i)).channel;
    channels.push_back(mix(fm, separable_out, weights[i]));
  }
  std::vector<DensityOperator> inputs = {phi, make_werner(0.8), random_state({2, 2}, rng),
                                         random_state({2, 2}, rng), random_state({2, 2}, rng)};
  double worst = std::numeric_limits<double>::infinity();
  double eps_lo = 1e9, eps_hi = -1e9;
  std::size_t checks = 0;
  for (const auto& ch : channels) {
    double eps = audit_non_entangling(ch, AuditMode::structural).epsilon;
    eps_lo = std::min(eps_lo, eps);
    eps_hi = std::max(eps_hi, eps);
    MonotonicityOptions mo;
    mo.check_er = false;
    for (const auto& rho : inputs) {
      worst = std::min(worst, monotonicity_check(ch, rho, eps, mo).lrg_margin);
      ++checks;
    }
  }
  bool ok = worst >= -1e-6 && eps_lo >= 0.0 && eps_hi <= 1.0 + 1e-9 && channels.size() == 20;
  record(8, "monotonicity bound", ok,
         std::to_string(channels.size()) + " channels x 5 inputs (" + std::to_string(checks) +
             " checks), eps in [" + fmt("%.4f", eps_lo) + ", " + fmt("%.4f", eps_hi) +
             "], min margin " + fmt("%.3e", worst));
}

void criterion_9() {
  FsepOptions hull;
  hull.set = SeparableSet::hull;
  Rng rng(2009);
  auto sep = random_separable_state({2, 2}, 3, rng);
  auto phi = make_max_entangled(1);
  double phi_ppt = fsep_dual(phi, 1, 1.0).value, phi_hull = fsep_dual(phi, 1, 1.0, hull).value;
  double sep_ppt = fsep_dual(sep, 1, 1.0).value, sep_hull = fsep_dual(sep, 1, 1.0, hull).value;
  bool ok = std::abs(phi_ppt - 1) <= 1e-3 && std::abs(phi_hull - 1) <= 1e-3 &&
            std::abs(sep_ppt - 0.5) <= 1e-3 && std::abs(sep_hull - 0.5) <= 1e-3;
  double rise = 0.0;
  for (const auto& rho : {phi, make_werner(0.8), sep})
    for (const auto& opt : {FsepOptions{}, hull}) {
      auto sw = fsep_sweep(rho, 1, default_d_grid(), opt);
      for (std::size_t i = 1; i < sw.rows.size(); ++i)
        rise = std::max(rise, sw.rows[i].value - sw.rows[i - 1].value);
    }
  ok = ok && rise <= 1e-9;
  record(9, "dual singlet fraction", ok,
         "phi+ " + fmt("%.6f", phi_ppt) + "/" + fmt("%.6f", phi_hull) + ", separable " +
             fmt("%.6f", sep_ppt) + "/" + fmt("%.6f", sep_hull) + " (ppt/hull); max rise over D grid " +
             fmt("%.1e", rise));
}

void criterion_10() {
  auto t0 = Clock::now();
  auto b = theorem_bracket(make_max_entangled(1), 2);
  double e_r_lo = b.er_ppt.entries.back().per_copy, e_r_hi = b.er_hull.entries.back().per_copy;
  bool phi_ok = std::abs(b.ed_lower - 1) <= 2e-2 && std::abs(e_r_lo - 1) <= 2e-2 &&
                std::abs(e_r_hi - 1) <= 2e-2 && std::abs(b.ec_upper - 1) <= 2e-2;
  auto w = theorem_bracket(make_werner(0.8), 2);
  double gap1 = std::abs(w.er_hull.entries[0].per_copy - w.er_ppt.entries[0].per_copy);
  bool contains = w.band_lower() <= 0.390 && 0.390 <= w.band_upper();
  double secs = seconds_since(t0);
  bool ok = phi_ok && contains && gap1 <= 1e-4 && secs < 600.0;
  record(10, "Theorem I bracket", ok,
         "phi+ (E_D, E_R ppt/hull, E_C)=(" + fmt("%.4f", b.ed_lower) + ", " + fmt("%.4f", e_r_lo) + "/" +
             fmt("%.4f", e_r_hi) + ", " + fmt("%.4f", b.ec_upper) + "); werner(0.8) band [" +
             fmt("%.4f", w.band_lower()) + ", " + fmt("%.4f", w.band_upper()) + "] width " +
             fmt("%.4f", w.width()) + ", n=1 E_R gap " + fmt("%.1e", gap1) + "; " + fmt("%.1f", secs) + " s");
}

void criterion_11() {
  std::lock_guard<std::mutex> lock(g_sdp.mu);
  bool ok = g_sdp.violations == 0 && g_fw.violations == 0 && g_sdp.optimal > 0 && g_fw.reports > 0;
  record(11, "solver certification", ok,
         std::to_string(g_sdp.optimal) + " optimal SDP returns (" + std::to_string(g_sdp.other) +
             " other), " + std::to_string(g_sdp.violations) + " violations, worst gap/(1+|p|) " +
             fmt("%.1e", g_sdp.worst_gap_ratio) + ", worst residual " + fmt("%.1e", g_sdp.worst_residual) +
             "; " + std::to_string(g_fw.reports) + " Frank-Wolfe reports, " +
             std::to_string(g_fw.violations) + " above tol");
}

// ---------------------------------------------------------------------------
// Determinism: a child process writes CSV artifacts; two runs must match.

void write(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

int emit_artifacts(const fs::path& dir) {
  fs::create_directories(dir);
  auto w = make_werner(0.8);
  std::string measures = "quantity,value,bound_kind,gap\n";
  for (auto set : {SeparableSet::ppt, SeparableSet::hull}) {
    auto r = compute_er(w, set);
    measures += std::string("er_") + to_string(set) + "," + csv_double(r.value) + "," +
                to_string(r.bound_kind) + "," + csv_double(r.certified_gap) + "\n";
  }
  measures += "rg," + csv_double(compute_rg(w).s) + ",exact-smalldim,0\n";
  write(dir / "measures.csv", measures);
  write(dir / "regularize.csv", to_csv(regularized_er_sequence(w, 2, SeparableSet::hull)));
  std::vector<double> p{0.9, 0.1}, q{0.5, 0.5}, ys{0.0, 0.2, 0.4, 0.5310, 0.65};
  std::vector<std::size_t> ns{50, 100, 200};
  write(dir / "stein.csv", stein_scan(HypothesisPair::from_distributions(p, q), ys, ns, SteinEngine::dp, 2).to_csv());
  FsepOptions hull;
  hull.set = SeparableSet::hull;
  hull.seed = 11;
  write(dir / "fsep.csv", fsep_sweep(w, 1, default_d_grid(), hull, 2).to_csv());
  AuditOptions ao;
  ao.seed = 5;
  ao.samples = 40;
  write(dir / "audit.csv", to_csv(audit_non_entangling(build_formation_map(w, 1).channel, AuditMode::sampled, ao)));
  return 0;
}

void criterion_12(const std::string& self) {
  auto base = fs::temp_directory_path() / ("eaudit_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(base);
  bool ran = true;
  for (const char* run : {"a", "b"}) {
    std::string cmd = "\"" + self + "\" --emit-artifacts \"" + (base / run).string() + "\"";
    ran = ran && std::system(cmd.c_str()) == 0;
  }
  std::size_t files = 0, identical = 0;
  if (ran) {
    for (const auto& entry : fs::directory_iterator(base / "a")) {
      ++files;
      std::ifstream a(entry.path(), std::ios::binary), b(base / "b" / entry.path().filename(), std::ios::binary);
      std::stringstream sa, sb;
      sa << a.rdbuf();
      sb << b.rdbuf();
      if (b && sa.str() == sb.str()) ++identical;
    }
  }
  fs::remove_all(base);
  record(12, "determinism", ran && files == 5 && identical == files,
         "two runs, " + std::to_string(identical) + "/" + std::to_string(files) +
             " CSV artifacts byte-identical");
}

}  // namespace

int main(int argc, char** argv) {
  if (argc == 3 && std::string(argv[1]) == "--emit-artifacts") return emit_artifacts(argv[2]);
  // --only N runs a single criterion
  int only = argc == 3 && std::string(argv[1]) == "--only" ? std::atoi(argv[2]) : 0;

  sdp_observer() = [](const SdpSolution& sol, const SdpOptions& opt) {
    std::lock_guard<std::mutex> lock(g_sdp.mu);
    if (!sol.optimal()) {
      ++g_sdp.other;
      return;
    }
    ++g_sdp.optimal;
    double ratio = sol.gap / (1.0 + std::abs(sol.primal_objective));
    double res = std::max(sol.primal_residual, sol.dual_residual);
    g_sdp.worst_gap_ratio = std::max(g_sdp.worst_gap_ratio, ratio);
    g_sdp.worst_residual = std::max(g_sdp.worst_residual, res);
    if (ratio > 1e-8 || res > 1e-8 || ratio > opt.gap_tol || res > opt.feas_tol) ++g_sdp.violations;
  };

  auto t0 = Clock::now();
  const std::vector<std::function<void()>> criteria = {criterion_1, criterion_2, criterion_3, criterion_4,
                                                       criterion_5, criterion_6, criterion_7, criterion_8,
                                                       criterion_9, criterion_10, criterion_11};
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (only != 0 && only != int(i) + 1) continue;
    try {
      criteria[i]();
    } catch (const std::exception& e) {
      record(int(i) + 1, "criterion", false, std::string("threw: ") + e.what());
    }
  }
  sdp_observer() = nullptr;
  if (only == 0 || only == 12) criterion_12(argv[0]);

  std::size_t passed = 0;
  for (const auto& l : g_lines) passed += l.pass;
  std::printf("%zu/%zu criteria pass in %.1f s\n", passed, g_lines.size(), seconds_since(t0));
  return passed == g_lines.size() ? 0 : 1;
}
