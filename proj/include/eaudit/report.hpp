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

// JSON and CSV renderings of the result types.

#pragma once

#include <cmath>
#include <cstdio>
#include <string>

#include <json.hpp>

#include "eaudit/entropy.hpp"
#include "eaudit/hypotest.hpp"
#include "eaudit/measures.hpp"
#include "eaudit/reversibility.hpp"

namespace eaudit {

using Json = nlohmann::ordered_json;

inline std::string csv_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12e", v);
  return buf;
}

inline Json json_number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline Json json_number(const std::optional<double>& v) {
  return v ? json_number(*v) : Json(nullptr);
}

inline Json to_json(const ExtendedBits& v) {
  Json j;
  j["value"] = v.infinite ? Json(nullptr) : Json(v.value);
  j["infinite"] = v.infinite;
  return j;
}

inline Json to_json(const ComplexVector& v) {
  Json re = Json::array(), im = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    re.push_back(v(i).real());
    im.push_back(v(i).imag());
  }
  return Json{{"re", re}, {"im", im}};
}

inline Json to_json(const ProductVertex& v) {
  return Json{{"a", to_json(v.a)}, {"b", to_json(v.b)}};
}

inline Json to_json(const MeasureReport& r) {
  Json j;
  j["value"] = r.value;
  j["bound_kind"] = to_string(r.bound_kind);
  j["certified_gap"] = json_number(r.certified_gap);
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  Json trace = Json::array();
  for (const auto& t : r.trace) {
    trace.push_back(Json{{"objective", t.objective},
                         {"linearization_bound", json_number(t.linearization_bound)}});
  }
  j["trace"] = trace;
  return j;
}

inline Json to_json(const RobustnessWitness& w) {
  Json j;
  j["robustness"] = w.s;
  j["log_robustness"] = std::log2(1.0 + w.s);
  j["exact"] = w.exact;
  j["pi_placeholder"] = w.pi_placeholder;
  j["certified_gap"] = w.certified_gap;
  return j;
}

inline Json to_json(const RegularizationTrace& t) {
  Json a = Json::array();
  for (const auto& e : t.entries) {
    a.push_back(Json{{"copies", e.copies},
                     {"per_copy", e.per_copy},
                     {"bound_kind", to_string(e.bound_kind)},
                     {"certified_gap", json_number(e.certified_gap)}});
  }
  return a;
}

inline std::string to_csv(const RegularizationTrace& t) {
  std::string out = "n,per_copy,bound_kind,gap\n";
  for (const auto& e : t.entries) {
    out += std::to_string(e.copies) + "," + csv_double(e.per_copy) + "," +
           to_string(e.bound_kind) + "," + csv_double(e.certified_gap) + "\n";
  }
  return out;
}

inline Json to_json(const SteinCurve& c) {
  Json a = Json::array();
  for (const auto& r : c.rows) {
    a.push_back(Json{{"n", r.n}, {"y", r.y}, {"value", r.value}, {"engine", to_string(r.engine)}});
  }
  return Json{{"rows", a}};
}

inline Json to_json(const FsepDualResult& r) {
  Json j;
  j["value"] = r.value;
  j["b_star"] = json_number(r.b_star);
  j["scale"] = r.scale;
  j["bound_kind"] = to_string(r.bound_kind);
  j["certified_gap"] = r.certified_gap;
  return j;
}

inline Json to_json(const FsepSweep& s) {
  Json a = Json::array();
  for (std::size_t i = 0; i < s.rows.size(); ++i) {
    Json row = to_json(s.results[i]);
    row["D"] = s.rows[i].D;
    row["n"] = s.rows[i].n;
    a.push_back(row);
  }
  return Json{{"rows", a}};
}

inline Json to_json(const NonEntanglingAudit& a) {
  Json j;
  j["mode"] = to_string(a.mode);
  j["epsilon"] = a.epsilon;
  j["exact"] = a.exact;
  j["worst_input"] = to_json(a.worst_input);
  j["values"] = a.values;
  return j;
}

inline std::string to_csv(const NonEntanglingAudit& a) {
  return "mode,epsilon,exact,samples\n" + std::string(to_string(a.mode)) + "," +
         csv_double(a.epsilon) + "," + (a.exact ? "true" : "false") + "," +
         std::to_string(a.values.size()) + "\n";
}

inline Json to_json(const MonotonicityReport& r) {
  Json j;
  j["epsilon"] = r.epsilon;
  j["lrg_input"] = r.lrg_input;
  j["lrg_output"] = r.lrg_output;
  j["lrg_margin"] = r.lrg_margin;
  j["er_input_hull"] = json_number(r.er_input_hull);
  j["er_output_ppt"] = json_number(r.er_output_ppt);
  j["er_margin"] = json_number(r.er_margin);
  j["holds"] = r.holds();
  return j;
}

inline Json to_json(const TheoremBracket& b) {
  Json j;
  j["copies"] = b.copies;
  j["ed_lower"] = b.ed_lower;
  j["er_ppt"] = to_json(b.er_ppt);
  j["er_hull"] = to_json(b.er_hull);
  j["ec_upper"] = b.ec_upper;
  j["band"] = Json::array({b.band_lower(), b.band_upper()});
  j["width"] = b.width();
  j["tolerance"] = b.tol;
  j["consistent"] = b.consistent;
  j["sweep"] = to_json(b.sweep);
  return j;
}

inline std::string to_csv(const TheoremBracket& b) {
  std::string out = "quantity,copies,value\n";
  out += "ed_lower," + std::to_string(b.copies) + "," + csv_double(b.ed_lower) + "\n";
  for (const auto& e : b.er_ppt.entries)
    out += "er_ppt," + std::to_string(e.copies) + "," + csv_double(e.per_copy) + "\n";
  for (const auto& e : b.er_hull.entries)
    out += "er_hull," + std::to_string(e.copies) + "," + csv_double(e.per_copy) + "\n";
  out += "ec_upper," + std::to_string(b.copies) + "," + csv_double(b.ec_upper) + "\n";
  return out;
}

}  // namespace eaudit
