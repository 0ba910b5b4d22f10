#pragma once

// JSON ingestion of operators and scalar rules.
//
// Operator document:
//   { "dim": 2, "family": "example2" | "example2:x=3" | ..., "params": {...},
//     "prefix": [ {"A": M, "B": M}, ... ], "tail": {"A": M, "B": M} }
// A matrix M is either nested rows [[z, z], [z, z]] or a flat row-major list
// [z, z, z, z]; each entry z is a real number or a [re, im] pair.

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bjdecay/core.hpp"
#include "bjdecay/operator.hpp"

namespace bjdecay::io {

using json = nlohmann::json;

inline bool is_complex_literal(const json& j) {
  return j.is_number() || (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number());
}

inline Complex parse_complex(const json& j, const std::string& where) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
    return {j[0].get<double>(), j[1].get<double>()};
  throw SchemaError(where + ": expected a number or [re, im], got " + j.dump());
}

inline CMatrix parse_matrix(const json& j, int d, const std::string& where) {
  if (!j.is_array()) throw SchemaError(where + ": matrix must be an array");
  CMatrix m(d, d);
  const auto row_ok = [d](const json& r) {
    if (!r.is_array() || int(r.size()) != d) return false;
    for (const auto& e : r)
      if (!is_complex_literal(e)) return false;
    return true;
  };
  bool nested = int(j.size()) == d;
  for (std::size_t r = 0; nested && r < j.size(); ++r) nested = row_ok(j[r]);
  if (nested) {
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c)
        m(r, c) = parse_complex(j[r][c], where + "[" + std::to_string(r) + "][" + std::to_string(c) + "]");
    return m;
  }
  if (int(j.size()) != d * d)
    throw SchemaError(where + ": expected " + std::to_string(d) + " rows or " + std::to_string(d * d) +
                      " flat entries, got " + std::to_string(j.size()));
  for (int k = 0; k < d * d; ++k) m(k / d, k % d) = parse_complex(j[k], where + "[" + std::to_string(k) + "]");
  return m;
}

inline json dump_complex(Complex z) { return json::array({z.real(), z.imag()}); }

inline json dump_matrix(const CMatrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(dump_complex(m(r, c)));
    rows.push_back(row);
  }
  return rows;
}

/// number | {"const": v} | {"linear": [slope, intercept]} | {"power": [coef, exp]} | {"geometric": [coef, base]}
inline ScalarRule parse_rule(const json& j, const std::string& where) {
  if (j.is_number()) return ScalarRule::constant(j.get<double>());
  if (!j.is_object() || j.size() != 1) throw SchemaError(where + ": rule must be a number or a one-key object");
  const auto& [key, val] = *j.items().begin();
  const auto pair = [&](const char* name) {
    if (!val.is_array() || val.size() != 2 || !val[0].is_number() || !val[1].is_number())
      throw SchemaError(where + "." + name + ": expected [p, q]");
    return std::pair{val[0].get<double>(), val[1].get<double>()};
  };
  if (key == "const") {
    if (!val.is_number()) throw SchemaError(where + ".const: expected a number");
    return ScalarRule::constant(val.get<double>());
  }
  if (key == "linear") {
    auto [p, q] = pair("linear");
    return ScalarRule::linear(p, q);
  }
  if (key == "power") {
    auto [p, q] = pair("power");
    return ScalarRule::power(p, q);
  }
  if (key == "geometric") {
    auto [p, q] = pair("geometric");
    return ScalarRule::geometric(p, q);
  }
  throw SchemaError(where + ": unknown rule kind '" + key + "'");
}

/// "example3:alpha=0.75,c1=0" -> ("example3", {alpha: 0.75, c1: 0})
inline std::pair<std::string, std::map<std::string, double>> split_family(const std::string& s) {
  std::map<std::string, double> kv;
  const auto colon = s.find(':');
  const std::string name = s.substr(0, colon);
  if (colon == std::string::npos) return {name, kv};
  std::stringstream ss(s.substr(colon + 1));
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw SchemaError("family parameter '" + item + "' is not key=value");
    const std::string key = item.substr(0, eq);
    try {
      std::size_t used = 0;
      const std::string v = item.substr(eq + 1);
      kv[key] = std::stod(v, &used);
      if (used != v.size()) throw std::invalid_argument(v);
    } catch (const std::exception&) {
      throw SchemaError("family parameter '" + key + "' is not a number");
    }
  }
  return {name, kv};
}

namespace detail {

inline double number_param(const json& params, const std::map<std::string, double>& inline_kv, const char* key,
                           double fallback) {
  if (auto it = inline_kv.find(key); it != inline_kv.end()) return it->second;
  if (params.contains(key)) {
    if (!params[key].is_number()) throw SchemaError(std::string("params.") + key + ": expected a number");
    return params[key].get<double>();
  }
  return fallback;
}

}  // namespace detail

inline SequenceSpec parse_operator(const json& j) {
  if (j.is_string()) return parse_operator(json{{"family", j}});
  if (!j.is_object()) throw SchemaError("operator: expected an object or a family string");
  for (const auto& [k, v] : j.items())
    if (k != "dim" && k != "family" && k != "params" && k != "prefix" && k != "tail")
      throw SchemaError("operator: unknown field '" + k + "'");
  if (!j.contains("family") || !j["family"].is_string()) throw SchemaError("operator.family: required string");
  const auto [name, kv] = split_family(j["family"].get<std::string>());
  const json params = j.value("params", json::object());
  if (!params.is_object()) throw SchemaError("operator.params: expected an object");

  SequenceSpec spec;
  spec.dim = 2;
  if (j.contains("dim")) {
    if (!j["dim"].is_number_integer()) throw SchemaError("operator.dim: expected an integer");
    spec.dim = j["dim"].get<int>();
  }
  const int d = spec.dim;
  if (d < 1) throw SchemaError("operator.dim: must be >= 1");
  const auto num = [&](const char* key, double fb) { return detail::number_param(params, kv, key, fb); };
  static const std::map<std::string, std::vector<std::string>> allowed = {
      {"explicit", {}},           {"constant", {"A", "B"}},          {"example1", {"lambda", "epsilon"}},
      {"example2", {"x"}},        {"example3", {"x", "alpha", "c1", "c2"}}, {"diagonal", {"a", "b"}}};
  if (const auto fam = allowed.find(name); fam != allowed.end()) {
    const auto check = [&](const std::string& k) {
      if (std::find(fam->second.begin(), fam->second.end(), k) == fam->second.end())
        throw SchemaError("operator.params: unknown field '" + k + "' for family " + name);
    };
    for (const auto& [k, v] : params.items()) check(k);
    for (const auto& [k, v] : kv) check(k);
  }

  if (name == "explicit") {
    spec.family = ExplicitFamily{};
  } else if (name == "constant") {
    if (!params.contains("A") || !params.contains("B")) throw SchemaError("constant family needs params.A and params.B");
    spec.family = ConstantFamily{parse_matrix(params["A"], d, "params.A"), parse_matrix(params["B"], d, "params.B")};
  } else if (name == "example1") {
    Example1Family f;
    if (params.contains("lambda")) f.lambda = parse_rule(params["lambda"], "params.lambda");
    if (params.contains("epsilon")) f.epsilon = parse_rule(params["epsilon"], "params.epsilon");
    spec.family = f;
  } else if (name == "example2") {
    spec.family = Example2Family{num("x", 3.0)};
  } else if (name == "example3") {
    spec.family = Example3Family{num("x", 0.0), num("alpha", 0.75), num("c1", 0.0), num("c2", 1.0)};
  } else if (name == "diagonal") {
    DiagonalFamily f;
    for (const char* key : {"a", "b"}) {
      if (!params.contains(key) || !params[key].is_array())
        throw SchemaError(std::string("diagonal family needs params.") + key + " as a list of rules");
      auto& dst = std::string(key) == "a" ? f.a : f.b;
      for (std::size_t i = 0; i < params[key].size(); ++i)
        dst.push_back(parse_rule(params[key][i], std::string("params.") + key + "[" + std::to_string(i) + "]"));
    }
    spec.family = f;
  } else {
    throw SchemaError("operator.family: unknown family '" + name + "'");
  }

  if (j.contains("prefix")) {
    if (!j["prefix"].is_array()) throw SchemaError("operator.prefix: expected an array");
    for (std::size_t i = 0; i < j["prefix"].size(); ++i) {
      const json& e = j["prefix"][i];
      const std::string where = "prefix[" + std::to_string(i) + "]";
      if (!e.is_object()) throw SchemaError(where + ": expected an object");
      for (const auto& [k, v] : e.items())
        if (k != "A" && k != "B") throw SchemaError(where + ": unknown field '" + k + "'");
      EntryOverride o;
      if (e.contains("A")) o.a = parse_matrix(e["A"], d, where + ".A");
      if (e.contains("B")) o.b = parse_matrix(e["B"], d, where + ".B");
      spec.prefix.push_back(std::move(o));
    }
  }
  if (j.contains("tail")) {
    const json& t = j["tail"];
    if (!t.is_object() || !t.contains("A") || !t.contains("B")) throw SchemaError("operator.tail: needs A and B");
    spec.tail = BlockPair{parse_matrix(t["A"], d, "tail.A"), parse_matrix(t["B"], d, "tail.B")};
  }
  return spec;
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError(path + ": " + e.what());
  }
}

/// Operator from a JSON file path (ending in .json) or an inline family string.
inline SequenceSpec load_operator(const std::string& arg) {
  if (arg.size() > 5 && arg.substr(arg.size() - 5) == ".json") return parse_operator(read_json_file(arg));
  return parse_operator(json(arg));
}

inline EntrySequence make_sequence(const json& j) { return build_sequence(parse_operator(j)); }

}  // namespace bjdecay::io
