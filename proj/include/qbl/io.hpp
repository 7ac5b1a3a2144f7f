#pragma once

// Datum and witness files (JSON).
//
//   {
//     "sources": [3],
//     "targets": [{"dim": 2, "p": "4/3"}],
//     "arrows": [
//       {"source": 1, "target": 1, "matrix": [["1", "0", "0"], ["0", "1", "0"]]}
//     ]
//   }
//
// Rationals are strings ("a/b" or exact decimals); p may be "inf". Indices are 1-based.
// Witness files hold one basis matrix per source, columns = basis vectors:
//
//   {"subspaces": [[["1"], ["0"], ["0"]]]}

#include "qbl/core.hpp"

#include <json.hpp>

#include <cstddef>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace qbl {

struct ParseError : std::runtime_error {
  ParseError(const std::string& location, const std::string& what)
      : std::runtime_error(location + ": " + what), location_(location) {}
  const std::string& location() const noexcept { return location_; }

 private:
  std::string location_;
};

namespace detail {

using json = nlohmann::json;

inline json parse_json(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    std::size_t line = 1;
    for (std::size_t k = 0; k < text.size() && k + 1 < e.byte; ++k) line += text[k] == '\n';
    throw ParseError("line " + std::to_string(line), "malformed JSON: " + std::string(e.what()));
  }
}

inline std::size_t read_count(const json& v, const std::string& where) {
  if (!v.is_number_integer() || v.get<long long>() < 0)
    throw ParseError(where, "expected a non-negative integer");
  return v.get<std::size_t>();
}

inline Rational read_rational(const json& v, const std::string& where) {
  if (v.is_number_integer()) return Rational(v.get<long>());
  if (!v.is_string()) throw ParseError(where, "non-numeric entry (rationals are written as strings)");
  try {
    return parse_rational(v.get<std::string>());
  } catch (const std::invalid_argument& e) {
    throw ParseError(where, std::string("non-numeric entry: ") + e.what());
  }
}

inline const json& field(const json& obj, const char* name, const std::string& where) {
  if (!obj.is_object()) throw ParseError(where, "expected an object");
  auto it = obj.find(name);
  if (it == obj.end()) throw ParseError(where, std::string("missing field '") + name + "'");
  return *it;
}

inline RationalMatrix read_matrix(const json& v, const std::string& where) {
  if (!v.is_array()) throw ParseError(where, "matrix must be an array of rows");
  const std::size_t rows = v.size();
  std::size_t cols = 0;
  for (std::size_t i = 0; i < rows; ++i) {
    if (!v[i].is_array()) throw ParseError(where + "[" + std::to_string(i) + "]", "row must be an array");
    if (i == 0) cols = v[i].size();
    if (v[i].size() != cols)
      throw ParseError(where + "[" + std::to_string(i) + "]", "shape mismatch: ragged row of length " +
                                                                  std::to_string(v[i].size()) + ", expected " +
                                                                  std::to_string(cols));
  }
  RationalMatrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      m(i, j) = read_rational(v[i][j], where + "[" + std::to_string(i) + "][" + std::to_string(j) + "]");
  return m;
}

inline void write_matrix(std::ostream& out, const RationalMatrix& m) {
  out << '[';
  for (std::size_t i = 0; i < m.rows(); ++i) {
    if (i) out << ", ";
    out << '[';
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) out << ", ";
      out << '"' << to_string(m(i, j)) << '"';
    }
    out << ']';
  }
  out << ']';
}

}  // namespace detail

/// Parses a datum file. Structural problems that are representable (zero dimensions, exponents
/// outside [1, ∞], non-surjective maps, isolated vertices) are left to validate_datum.
inline QuiverDatum parse_datum(std::string_view text) {
  using detail::field;
  const auto doc = detail::parse_json(text);
  if (!doc.is_object()) throw ParseError("document", "expected a JSON object");
  QuiverDatum d;

  const auto& sources = field(doc, "sources", "document");
  if (!sources.is_array()) throw ParseError("sources", "expected an array of dimensions");
  for (std::size_t i = 0; i < sources.size(); ++i)
    d.source_dims.push_back(detail::read_count(sources[i], "sources[" + std::to_string(i) + "]"));

  const auto& targets = field(doc, "targets", "document");
  if (!targets.is_array()) throw ParseError("targets", "expected an array of {dim, p}");
  for (std::size_t j = 0; j < targets.size(); ++j) {
    const std::string where = "targets[" + std::to_string(j) + "]";
    d.target_dims.push_back(detail::read_count(field(targets[j], "dim", where), where + ".dim"));
    const auto& p = field(targets[j], "p", where);
    if (p.is_string() && p.get<std::string>() == "inf") {
      d.inv_exponents.emplace_back(0);
      continue;
    }
    const Rational pv = detail::read_rational(p, where + ".p");
    if (pv == 0) throw ParseError(where + ".p", "p must be nonzero");
    d.inv_exponents.push_back(Rational(1 / pv));
  }

  const auto& arrows = field(doc, "arrows", "document");
  if (!arrows.is_array()) throw ParseError("arrows", "expected an array of arrows");
  for (std::size_t a = 0; a < arrows.size(); ++a) {
    const std::string where = "arrows[" + std::to_string(a) + "]";
    const std::size_t s = detail::read_count(field(arrows[a], "source", where), where + ".source");
    const std::size_t t = detail::read_count(field(arrows[a], "target", where), where + ".target");
    if (s < 1 || s > d.source_dims.size()) throw ParseError(where + ".source", "source index out of range");
    if (t < 1 || t > d.target_dims.size()) throw ParseError(where + ".target", "target index out of range");
    RationalMatrix m = detail::read_matrix(field(arrows[a], "matrix", where), where + ".matrix");
    const bool empty_ok = m.rows() == 0 && d.target_dims[t - 1] == 0;
    if (!empty_ok && (m.rows() != d.target_dims[t - 1] || (m.rows() > 0 && m.cols() != d.source_dims[s - 1])))
      throw ParseError(where + ".matrix", "shape mismatch: matrix is " + std::to_string(m.rows()) + "x" +
                                              std::to_string(m.cols()) + ", expected " +
                                              std::to_string(d.target_dims[t - 1]) + "x" +
                                              std::to_string(d.source_dims[s - 1]));
    if (m.rows() == 0) m = RationalMatrix(0, d.source_dims[s - 1]);
    d.arrows.push_back(Arrow{s - 1, t - 1, std::move(m), a});
  }
  return d;
}

inline std::string serialize_datum(const QuiverDatum& d) {
  std::ostringstream out;
  out << "{\n  \"sources\": [";
  for (std::size_t i = 0; i < d.source_dims.size(); ++i) out << (i ? ", " : "") << d.source_dims[i];
  out << "],\n  \"targets\": [";
  for (std::size_t j = 0; j < d.target_dims.size(); ++j) {
    out << (j ? ", " : "") << "{\"dim\": " << d.target_dims[j] << ", \"p\": \"";
    const Rational& w = d.inv_exponents.at(j);
    if (w == 0)
      out << "inf";
    else
      out << to_string(Rational(1 / w));
    out << "\"}";
  }
  out << "],\n  \"arrows\": [";
  for (std::size_t a = 0; a < d.arrows.size(); ++a) {
    const Arrow& arrow = d.arrows[a];
    out << (a ? "," : "") << "\n    {\"source\": " << arrow.source + 1 << ", \"target\": " << arrow.target + 1
        << ", \"matrix\": ";
    detail::write_matrix(out, arrow.matrix);
    out << '}';
  }
  out << (d.arrows.empty() ? "]\n}\n" : "\n  ]\n}\n");
  return out.str();
}

inline SubspaceFamily parse_witness(std::string_view text) {
  const auto doc = detail::parse_json(text);
  const auto& subs = detail::field(doc, "subspaces", "document");
  if (!subs.is_array() || subs.empty()) throw ParseError("subspaces", "expected a non-empty array of matrices");
  SubspaceFamily f;
  for (std::size_t i = 0; i < subs.size(); ++i) {
    const std::string where = "subspaces[" + std::to_string(i) + "]";
    const RationalMatrix basis = detail::read_matrix(subs[i], where);
    if (basis.rows() == 0) throw ParseError(where, "ambient dimension must be positive");
    const Subspace v = Subspace::span(basis);
    if (v.dim() != basis.cols()) throw ParseError(where, "basis columns are linearly dependent");
    f.subspaces.push_back(v);
  }
  return f;
}

inline std::string serialize_witness(const SubspaceFamily& f) {
  std::ostringstream out;
  out << "{\"subspaces\": [";
  for (std::size_t i = 0; i < f.subspaces.size(); ++i) {
    out << (i ? ", " : "");
    const auto& b = f.subspaces[i].basis();
    if (b.cols() == 0) {
      out << '[';
      for (std::size_t r = 0; r < b.rows(); ++r) out << (r ? ", " : "") << "[]";
      out << ']';
    } else {
      detail::write_matrix(out, b);
    }
  }
  out << "]}\n";
  return out.str();
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace qbl
