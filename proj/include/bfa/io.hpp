#pragma once

#include <json.hpp>

#include <fstream>
#include <string>
#include <vector>

#include "bfa/calibrate.hpp"
#include "bfa/complexity.hpp"
#include "bfa/counts.hpp"
#include "bfa/errors.hpp"
#include "bfa/mitigate.hpp"
#include "bfa/models.hpp"

namespace bfa {

using json = nlohmann::json;

// File formats. All probabilities round-trip exactly (shortest
// representation that parses back to the identical double).
//
//   model   {"n", "format": "dense"|"syndrome"|"tpn"|"grouped", payload}
//             dense:    "columns"  nested arrays, column-major
//             syndrome: "p_tilde"  flat array indexed by syndrome integer
//             tpn:      "rates"    per-qubit [p10, p01], plus "symmetric"
//             grouped:  "groups"   [{"qubits": [...], "p_tilde": [...]}]
//   counts  {"n", "shots", "counts": {"<bitstring>": count}}; omitted
//           outcomes are zero
//   calibration {"protocol": "plain"|"bfa", "tables": [{"input":
//           "<bitstring>", "n", "shots", "counts"}]}

namespace detail {

inline const json& require_field(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end())
    throw IoError(std::string("missing field \"") + key + "\"");
  return *it;
}

inline std::vector<double> to_doubles(const json& j, const char* what) {
  if (!j.is_array()) throw IoError(std::string(what) + " must be an array");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& x : j) {
    if (!x.is_number()) throw IoError(std::string(what) + " must contain numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Models
// ---------------------------------------------------------------------------

inline json model_to_json(const Model& m) {
  json j;
  j["n"] = model_qubits(m);
  j["format"] = model_format(m);
  if (const auto* dense = std::get_if<ResponseMatrix>(&m)) {
    json cols = json::array();
    for (std::size_t c = 0; c < dense->dim(); ++c) {
      const auto col = dense->column(c);
      cols.push_back(json(std::vector<double>(col.begin(), col.end())));
    }
    j["columns"] = std::move(cols);
  } else if (const auto* syn = std::get_if<SyndromeDistribution>(&m)) {
    j["p_tilde"] = syn->p_tilde();
  } else if (const auto* tpn = std::get_if<TpnModel>(&m)) {
    json rates = json::array();
    for (const auto& r : tpn->rates()) rates.push_back({r.p10, r.p01});
    j["rates"] = std::move(rates);
    j["symmetric"] = tpn->is_symmetric();
  } else {
    const auto& grouped = std::get<GroupedModel>(m);
    json groups = json::array();
    for (const auto& g : grouped.groups())
      groups.push_back({{"qubits", g.qubits}, {"p_tilde", g.dist.p_tilde()}});
    j["groups"] = std::move(groups);
  }
  return j;
}

inline Model model_from_json(const json& j) {
  const int n = detail::require_field(j, "n").get<int>();
  const std::string format = detail::require_field(j, "format").get<std::string>();
  if (format == "dense") {
    const json& cols = detail::require_field(j, "columns");
    if (!cols.is_array()) throw IoError("\"columns\" must be an array of columns");
    std::vector<double> data;
    for (const auto& col : cols) {
      const auto values = detail::to_doubles(col, "dense column");
      data.insert(data.end(), values.begin(), values.end());
    }
    return ResponseMatrix(n, std::move(data));
  }
  if (format == "syndrome")
    return SyndromeDistribution(
        n, detail::to_doubles(detail::require_field(j, "p_tilde"), "p_tilde"));
  if (format == "tpn") {
    const json& rates = detail::require_field(j, "rates");
    if (!rates.is_array()) throw IoError("\"rates\" must be an array");
    std::vector<QubitErrorRates> parsed;
    for (const auto& r : rates) {
      const auto pair = detail::to_doubles(r, "tpn rate pair");
      if (pair.size() != 2) throw IoError("tpn rate entries must be [p10, p01]");
      parsed.push_back({pair[0], pair[1]});
    }
    const bool symmetric = j.value("symmetric", false);
    return TpnModel(std::move(parsed), symmetric);
  }
  if (format == "grouped") {
    const json& groups = detail::require_field(j, "groups");
    if (!groups.is_array()) throw IoError("\"groups\" must be an array");
    std::vector<GroupedModel::Group> parsed;
    for (const auto& g : groups) {
      const json& qubits_json = detail::require_field(g, "qubits");
      std::vector<int> qubits;
      for (const auto& q : qubits_json) qubits.push_back(q.get<int>());
      auto p = detail::to_doubles(detail::require_field(g, "p_tilde"), "group p_tilde");
      parsed.push_back(
          {qubits, SyndromeDistribution(static_cast<int>(qubits.size()), std::move(p))});
    }
    return GroupedModel(n, std::move(parsed));
  }
  throw IoError("unknown model format \"" + format + "\"");
}

// ---------------------------------------------------------------------------
// Counts and calibration sets
// ---------------------------------------------------------------------------

inline json counts_to_json(const CountsTable& t) {
  json counts = json::object();
  for (const auto& [outcome, k] : t.counts)
    counts[BitString(outcome, t.n).str()] = k;
  return json{{"n", t.n}, {"shots", t.shots}, {"counts", std::move(counts)}};
}

inline CountsTable counts_from_json(const json& j) {
  CountsTable t(detail::require_field(j, "n").get<int>());
  const json& counts = detail::require_field(j, "counts");
  if (!counts.is_object()) throw IoError("\"counts\" must be an object");
  for (const auto& [key, value] : counts.items()) {
    const BitString outcome = BitString::parse(key);
    if (outcome.width != t.n)
      throw IoError("outcome \"" + key + "\" has width " +
                    std::to_string(outcome.width) + ", expected " +
                    std::to_string(t.n));
    if (!value.is_number_unsigned())
      throw IoError("count for \"" + key + "\" must be a nonnegative integer");
    t.add(outcome.value, value.get<std::uint64_t>());
  }
  const auto declared = detail::require_field(j, "shots").get<std::uint64_t>();
  if (declared != t.shots)
    throw IoError("declared shot total " + std::to_string(declared) +
                  " does not match the summed counts " + std::to_string(t.shots));
  return t;
}

inline json calibration_to_json(const CalibrationSet& c) {
  json tables = json::array();
  for (const auto& [input, table] : c.tables) {
    json entry = counts_to_json(table);
    entry["input"] = BitString(input, c.n).str();
    tables.push_back(std::move(entry));
  }
  return json{{"protocol", c.bfa ? "bfa" : "plain"}, {"tables", std::move(tables)}};
}

inline CalibrationSet calibration_from_json(const json& j) {
  CalibrationSet set;
  const std::string protocol =
      detail::require_field(j, "protocol").get<std::string>();
  if (protocol == "bfa")
    set.bfa = true;
  else if (protocol == "plain")
    set.bfa = false;
  else
    throw IoError("unknown calibration protocol \"" + protocol + "\"");

  const json& tables = detail::require_field(j, "tables");
  if (!tables.is_array() || tables.empty())
    throw IoError("\"tables\" must be a non-empty array");
  for (const auto& entry : tables) {
    CountsTable table = counts_from_json(entry);
    const BitString input =
        BitString::parse(detail::require_field(entry, "input").get<std::string>());
    if (input.width != table.n)
      throw IoError("input state width does not match its counts table");
    if (set.n == 0) set.n = table.n;
    if (table.n != set.n)
      throw IoError("calibration tables disagree on qubit count");
    if (!set.tables.emplace(input.value, std::move(table)).second)
      throw IoError("duplicate calibration input state " + input.str());
  }
  if (set.bfa && (set.tables.size() != 1 || !set.tables.contains(0u)))
    throw IoError("bfa calibration must contain exactly the all-zeros input");
  return set;
}

// ---------------------------------------------------------------------------
// Results
// ---------------------------------------------------------------------------

inline json mitigation_to_json(const MitigationResult& r) {
  json j{{"method", method_name(r.method)},
         {"residual", r.residual},
         {"quasi", r.quasi},
         {"physical", r.physical}};
  if (r.method != MitigationMethod::Inverse) {
    j["iterations"] = r.iterations;
    j["converged"] = r.converged;
  }
  return j;
}

inline json complexity_to_json(const ComplexityReport& rep) {
  json j{{"n", rep.n},
         {"p_e", rep.p_e},
         {"epsilon", rep.epsilon},
         {"gamma", rep.gamma},
         {"k", rep.k},
         {"normal_approx_k", rep.normal_approx_k},
         {"entropy_rate", rep.entropy_rate},
         {"m_required", rep.m_required},
         {"expectation_bound", rep.expectation_bound}};
  if (rep.outcomes.exact) j["N"] = rep.outcomes.count;
  if (rep.outcomes.lower_bound) j["N_lower_bound"] = *rep.outcomes.lower_bound;
  if (rep.outcomes.upper_bound) j["N_upper_bound"] = *rep.outcomes.upper_bound;
  return j;
}

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

inline json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw IoError("cannot parse " + path + ": " + e.what());
  }
  return j;
}

inline void save_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path);
}

inline Model read_model(const std::string& path) {
  return model_from_json(load_json(path));
}

inline void write_model(const std::string& path, const Model& m) {
  save_json(path, model_to_json(m));
}

inline CountsTable read_counts(const std::string& path) {
  return counts_from_json(load_json(path));
}

inline void write_counts(const std::string& path, const CountsTable& t) {
  save_json(path, counts_to_json(t));
}

inline CalibrationSet read_calibration(const std::string& path) {
  return calibration_from_json(load_json(path));
}

inline void write_calibration(const std::string& path, const CalibrationSet& c) {
  save_json(path, calibration_to_json(c));
}

}  // namespace bfa
