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

#include <algorithm>
#include <array>
#include <exception>
#include <iostream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "eaudit/entropy.hpp"
#include "eaudit/hypotest.hpp"
#include "eaudit/measures.hpp"
#include "eaudit/report.hpp"
#include "eaudit/reversibility.hpp"
#include "eaudit/state_io.hpp"

namespace eaudit::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitValidation = 2,
  kExitNumerical = 3,
  kExitUsage = 64,
};

struct RunConfig {
  std::string command;
  std::vector<std::string> inputs;
  std::string output;
  std::string format = "csv";
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
};

/// A command's result in both output formats.
struct Document {
  std::string csv;
  Json json;
};

inline std::string usage() {
  return "usage: eaudit <command> [options]\n"
         "\n"
         "commands:\n"
         "  measure er|rg|lrg|entropy|relent <state...>   entanglement measures\n"
         "  zoo werner|isotropic|belldiag|maxent <params> -o <path>\n"
         "  regularize <state> --copies N --set ppt|hull\n"
         "  stein --dense|--dp (--rho F --sigma F | --p LIST --q LIST) --y LIST --n LIST\n"
         "  fsep-dual <state> --n N --D LIST [--set ppt|hull]\n"
         "  audit <choi-file> --mode structural|sampled\n"
         "  bracket <state> --copies N [--sweep-out PATH]\n"
         "\n"
         "common options: --format csv|json  --seed N  --jobs N  -o/--output PATH\n";
}

namespace detail {

inline SeparableSet parse_set(const std::string& s) {
  return s == "hull" ? SeparableSet::hull : SeparableSet::ppt;
}

inline void add_common(CLI::App& app, RunConfig& cfg) {
  app.add_option("--format", cfg.format, "output format")
      ->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--seed", cfg.seed, "random seed");
  app.add_option("--jobs", cfg.jobs, "worker threads for sweeps")->check(CLI::PositiveNumber);
  app.add_option("-o,--output", cfg.output, "output path");
}

inline Document measure_row(const std::string& quantity, const std::string& value,
                            const std::string& kind, double gap, Json json) {
  Document d;
  d.csv = "quantity,value,bound_kind,gap\n" + quantity + "," + value + "," + kind + "," +
          csv_double(gap) + "\n";
  Json head;
  head["command"] = "measure";
  head["quantity"] = quantity;
  for (auto& [k, v] : json.items()) head[k] = v;
  d.json = head;
  return d;
}

inline Document cmd_measure(const std::string& kind, const std::vector<std::string>& paths,
                            const std::string& set, double tol, const RunConfig& cfg) {
  auto need = [&](std::size_t n) {
    if (paths.size() != n) {
      throw Error(ErrorKind::domain, "measure " + kind + " takes " + std::to_string(n) +
                                         " state file(s)");
    }
  };
  if (kind == "relent") {
    need(2);
    auto rho = load_state(paths[0]);
    auto sigma = load_state(paths[1]);
    auto v = quantum_relative_entropy(rho, sigma);
    Json j = to_json(v);
    j["bound_kind"] = "exact";
    return measure_row(kind, v.to_string(), "exact", 0.0, j);
  }
  need(1);
  auto rho = load_state(paths[0]);
  if (kind == "entropy") {
    double v = von_neumann_entropy(rho);
    return measure_row(kind, csv_double(v), "exact", 0.0,
                       Json{{"value", v}, {"bound_kind", "exact"}});
  }
  if (kind == "er") {
    ErOptions opt;
    opt.tol = tol;
    opt.seed = cfg.seed;
    auto r = compute_er(rho, parse_set(set), opt);
    return measure_row(kind, csv_double(r.value), to_string(r.bound_kind), r.certified_gap,
                       to_json(r));
  }
  auto w = compute_rg(rho);
  const char* bk = w.exact ? "exact-smalldim" : "lower-ppt";
  Json j = to_json(w);
  j["bound_kind"] = bk;
  if (kind == "rg") {
    j["value"] = w.s;
    return measure_row(kind, csv_double(w.s), bk, w.certified_gap, j);
  }
  double l = std::log2(1.0 + w.s);
  j["value"] = l;
  return measure_row(kind, csv_double(l), bk, w.certified_gap, j);
}

inline Document cmd_zoo(const std::string& kind, const std::vector<double>& params,
                        const RunConfig& cfg) {
  if (cfg.output.empty()) throw Error(ErrorKind::domain, "zoo requires -o <path>");
  auto count = [&](std::size_t lo, std::size_t hi) {
    if (params.size() < lo || params.size() > hi) {
      throw Error(ErrorKind::domain, "zoo " + kind + ": wrong number of parameters");
    }
  };
  DensityOperator rho;
  if (kind == "werner") {
    count(1, 1);
    rho = make_werner(params[0]);
  } else if (kind == "isotropic") {
    count(1, 2);
    double d = params.size() == 2 ? params[1] : 2.0;
    if (!(d >= 2.0) || d != std::floor(d)) throw Error(ErrorKind::domain, "d must be an integer >= 2");
    rho = make_isotropic(params[0], std::size_t(d));
  } else if (kind == "belldiag") {
    count(4, 4);
    rho = make_bell_diagonal({params[0], params[1], params[2], params[3]});
  } else {
    count(1, 1);
    if (!(params[0] >= 1.0) || params[0] != std::floor(params[0])) {
      throw Error(ErrorKind::domain, "k must be a positive integer");
    }
    rho = make_max_entangled(std::size_t(params[0]));
  }
  save_state(rho, cfg.output);
  Document d;
  d.csv = "path,dA,dB\n" + cfg.output + "," + std::to_string(rho.dims().dA) + "," +
          std::to_string(rho.dims().dB) + "\n";
  d.json = Json{{"command", "zoo"}, {"kind", kind}, {"path", cfg.output},
                {"dA", rho.dims().dA}, {"dB", rho.dims().dB}};
  return d;
}

inline std::vector<double> parse_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(ErrorKind::format, std::string("bad number in ") + what + ": '" + item + "'");
    }
  }
  if (out.empty()) throw Error(ErrorKind::domain, std::string(what) + " is empty");
  return out;
}

inline void emit(const Document& d, const RunConfig& cfg, bool output_is_report,
                 std::ostream& out) {
  std::string text = cfg.format == "json" ? d.json.dump(2) + "\n" : d.csv;
  if (output_is_report && !cfg.output.empty()) {
    eaudit::detail::write_file(cfg.output, text);
  } else {
    out << text;
  }
}

}  // namespace detail

/// Prints the failure and maps it to an exit code: validation problems give
/// 2, solver breakdowns and anything unexpected give 3.
inline int report_failure(std::exception_ptr failure, std::ostream& err) {
  try {
    std::rethrow_exception(failure);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.is_validation() ? kExitValidation : kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
  } catch (...) {
    err << "error: unknown failure\n";
  }
  return kExitNumerical;
}

/// Runs one command; `args` excludes the program name.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  static const std::array<const char*, 7> kCommands = {
      "measure", "zoo", "regularize", "stein", "fsep-dual", "audit", "bracket"};
  if (args.empty() || std::find(kCommands.begin(), kCommands.end(), args[0]) == kCommands.end()) {
    if (!args.empty() && (args[0] == "--help" || args[0] == "-h")) {
      out << usage();
      return kExitOk;
    }
    err << (args.empty() ? "missing command\n" : "unknown command '" + args[0] + "'\n")
        << usage();
    return kExitUsage;
  }
  RunConfig cfg;
  cfg.command = args[0];
  CLI::App app{"eaudit " + cfg.command, "eaudit " + cfg.command};
  detail::add_common(app, cfg);

  std::string kind, set = "ppt", mode = "structural", sweep_out, rho_path, sigma_path;
  std::string p_list, q_list, y_list, n_list, d_list;
  std::vector<double> params;
  std::size_t copies = 2, n = 1, samples = 100, cap = kDenseTestCap;
  double tol = 1e-6, threshold = 0.99;
  bool dense = false, dp = false;
  std::function<Document()> action;
  bool output_is_report = true;

  if (cfg.command == "measure") {
    app.add_option("kind", kind)->required()->check(
        CLI::IsMember({"er", "rg", "lrg", "entropy", "relent"}));
    app.add_option("states", cfg.inputs)->required();
    app.add_option("--set", set)->check(CLI::IsMember({"ppt", "hull"}));
    app.add_option("--tol", tol)->check(CLI::PositiveNumber);
    action = [&] { return detail::cmd_measure(kind, cfg.inputs, set, tol, cfg); };
  } else if (cfg.command == "zoo") {
    app.add_option("kind", kind)->required()->check(
        CLI::IsMember({"werner", "isotropic", "belldiag", "maxent"}));
    app.add_option("params", params)->required();
    output_is_report = false;
    action = [&] { return detail::cmd_zoo(kind, params, cfg); };
  } else if (cfg.command == "regularize") {
    app.add_option("state", rho_path)->required();
    app.add_option("--copies", copies);
    app.add_option("--set", set)->check(CLI::IsMember({"ppt", "hull"}));
    action = [&] {
      ErOptions opt;
      opt.seed = cfg.seed;
      auto t = regularized_er_sequence(load_state(rho_path), copies, detail::parse_set(set), opt);
      return Document{to_csv(t), Json{{"command", "regularize"}, {"set", set}, {"entries", to_json(t)}}};
    };
  } else if (cfg.command == "stein") {
    auto* g = app.add_option_group("engine");
    g->add_flag("--dense", dense);
    g->add_flag("--dp", dp);
    g->require_option(1);
    app.add_option("--rho", rho_path);
    app.add_option("--sigma", sigma_path);
    app.add_option("--p", p_list);
    app.add_option("--q", q_list);
    app.add_option("--y", y_list)->required();
    app.add_option("--n", n_list)->required();
    app.add_option("--cap", cap);
    action = [&] {
      HypothesisPair pair;
      if (!p_list.empty() || !q_list.empty()) {
        auto p = detail::parse_list(p_list, "--p");
        auto q = detail::parse_list(q_list, "--q");
        pair = HypothesisPair::from_distributions(p, q);
      } else {
        if (rho_path.empty() || sigma_path.empty()) {
          throw Error(ErrorKind::domain, "stein needs --rho/--sigma or --p/--q");
        }
        auto rho = load_state(rho_path);
        auto sigma = load_state(sigma_path);
        pair = {rho.op(), sigma.op()};
      }
      auto ys = detail::parse_list(y_list, "--y");
      std::vector<std::size_t> ns;
      for (double v : detail::parse_list(n_list, "--n")) {
        if (!(v >= 1.0) || v != std::floor(v)) throw Error(ErrorKind::domain, "n must be a positive integer");
        ns.push_back(std::size_t(v));
      }
      auto curve = stein_scan(pair, ys, ns, dp ? SteinEngine::dp : SteinEngine::dense, cfg.jobs, cap);
      Json j = to_json(curve);
      j["command"] = "stein";
      return Document{curve.to_csv(), j};
    };
  } else if (cfg.command == "fsep-dual") {
    app.add_option("state", rho_path)->required();
    app.add_option("--n", n);
    app.add_option("--D", d_list)->required();
    app.add_option("--set", set)->check(CLI::IsMember({"ppt", "hull"}));
    action = [&] {
      FsepOptions opt;
      opt.set = detail::parse_set(set);
      opt.seed = cfg.seed;
      auto sweep = fsep_sweep(load_state(rho_path), n, detail::parse_list(d_list, "--D"), opt, cfg.jobs);
      Json j = to_json(sweep);
      j["command"] = "fsep-dual";
      j["set"] = set;
      return Document{sweep.to_csv(), j};
    };
  } else if (cfg.command == "audit") {
    app.add_option("choi", rho_path)->required();
    app.add_option("--mode", mode)->check(CLI::IsMember({"structural", "sampled"}));
    app.add_option("--samples", samples)->check(CLI::PositiveNumber);
    action = [&] {
      AuditOptions opt;
      opt.samples = samples;
      opt.seed = cfg.seed;
      auto a = audit_non_entangling(load_channel(rho_path),
                                    mode == "sampled" ? AuditMode::sampled : AuditMode::structural, opt);
      Json j = to_json(a);
      j["command"] = "audit";
      return Document{to_csv(a), j};
    };
  } else {
    app.add_option("state", rho_path)->required();
    app.add_option("--copies", copies);
    app.add_option("--threshold", threshold);
    app.add_option("--sweep-out", sweep_out);
    action = [&] {
      BracketOptions opt;
      opt.threshold = threshold;
      opt.jobs = cfg.jobs;
      opt.er.seed = cfg.seed;
      opt.fsep.seed = cfg.seed;
      auto b = theorem_bracket(load_state(rho_path), copies, opt);
      if (!sweep_out.empty()) eaudit::detail::write_file(sweep_out, b.sweep.to_csv());
      Json j = to_json(b);
      j["command"] = "bracket";
      return Document{to_csv(b), j};
    };
  }

  try {
    std::vector<std::string> rest(args.begin() + 1, args.end());
    std::reverse(rest.begin(), rest.end());
    app.parse(rest);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  try {
    detail::emit(action(), cfg, output_is_report, out);
  } catch (...) {
    return report_failure(std::current_exception(), err);
  }
  return kExitOk;
}

inline int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace eaudit::cli
