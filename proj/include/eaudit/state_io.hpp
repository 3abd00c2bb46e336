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

// State files:
//   {"schema":1, "dA":int, "dB":int, "re":[[...]], "im":[[...]]}
// Row-major, one matrix row per line, %.17g decimals, LF endings.

#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "eaudit/error.hpp"
#include "eaudit/states.hpp"

namespace eaudit {

inline constexpr int kStateSchemaVersion = 1;

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

inline void write_matrix_rows(std::ostringstream& os, const ComplexMatrix& m,
                              bool imag, const std::string& indent) {
  os << "[\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    os << indent << "  [";
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) os << ", ";
      os << format_double(imag ? m(i, j).imag() : m(i, j).real());
    }
    os << "]" << (i + 1 < m.rows() ? ",\n" : "\n");
  }
  os << indent << "]";
}

inline ComplexMatrix read_matrix(const nlohmann::json& doc,
                                 const std::string& prefix, std::size_t dim) {
  const std::string re_key = prefix + "re";
  const std::string im_key = prefix + "im";
  for (const auto* key : {&re_key, &im_key}) {
    if (!doc.contains(*key) || !doc[*key].is_array()) {
      throw Error(ErrorKind::format, "field '" + *key + "' missing or not an array");
    }
  }
  const auto& re = doc[re_key];
  const auto& im = doc[im_key];
  for (const auto* part : {&re, &im}) {
    std::size_t total = 0;
    for (const auto& row : *part) {
      if (!row.is_array()) throw Error(ErrorKind::format, "matrix rows must be arrays");
      total += row.size();
    }
    if (part->size() != dim || total != dim * dim) {
      throw Error(ErrorKind::shape,
                  "expected " + std::to_string(dim) + "x" + std::to_string(dim) +
                      " entries, found " + std::to_string(part->size()) +
                      " rows / " + std::to_string(total) + " entries");
    }
  }
  ComplexMatrix m(dim, dim);
  for (std::size_t i = 0; i < dim; ++i) {
    if (re[i].size() != dim || im[i].size() != dim) {
      throw Error(ErrorKind::shape, "row " + std::to_string(i) + " has wrong length");
    }
    for (std::size_t j = 0; j < dim; ++j) {
      if (!re[i][j].is_number() || !im[i][j].is_number()) {
        throw Error(ErrorKind::format, "entry (" + std::to_string(i) + "," +
                                           std::to_string(j) + ") is not a number");
      }
      m(i, j) = Complex(re[i][j].get<double>(), im[i][j].get<double>());
    }
  }
  return m;
}

inline std::size_t read_count(const nlohmann::json& doc, const std::string& key) {
  if (!doc.contains(key) || !doc[key].is_number_integer() || doc[key].get<long long>() < 1) {
    throw Error(ErrorKind::format, "field '" + key + "' missing or not a positive integer");
  }
  return doc[key].get<std::size_t>();
}

inline nlohmann::json parse_document(const std::string& text) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::format, std::string("malformed JSON at byte ") +
                                       std::to_string(e.byte) + ": " + e.what());
  }
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::format, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::format, "cannot write '" + path + "'");
  out << text;
}

}  // namespace detail

inline std::string state_to_json(const DensityOperator& rho) {
  std::ostringstream os;
  os << "{\n  \"schema\": " << kStateSchemaVersion << ",\n  \"dA\": "
     << rho.dims().dA << ",\n  \"dB\": " << rho.dims().dB << ",\n  \"re\": ";
  detail::write_matrix_rows(os, rho.matrix(), false, "  ");
  os << ",\n  \"im\": ";
  detail::write_matrix_rows(os, rho.matrix(), true, "  ");
  os << "\n}\n";
  return os.str();
}

inline DensityOperator state_from_json_value(const nlohmann::json& doc) {
  if (!doc.is_object()) throw Error(ErrorKind::format, "state document must be an object");
  if (!doc.contains("schema") || !doc["schema"].is_number_integer() ||
      doc["schema"].get<int>() != kStateSchemaVersion) {
    throw Error(ErrorKind::format, "field 'schema' missing or unsupported");
  }
  BipartiteDims dims{detail::read_count(doc, "dA"), detail::read_count(doc, "dB")};
  ComplexMatrix m = detail::read_matrix(doc, "", dims.total());
  return validate_state(HermitianOperator(m), dims);
}

inline DensityOperator state_from_json(const std::string& text) {
  return state_from_json_value(detail::parse_document(text));
}

inline DensityOperator load_state(const std::string& path) {
  return state_from_json(detail::read_file(path));
}

inline void save_state(const DensityOperator& rho, const std::string& path) {
  detail::write_file(path, state_to_json(rho));
}

}  // namespace eaudit
