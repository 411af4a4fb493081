#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "bfa/counts.hpp"
#include "bfa/errors.hpp"
#include "bfa/models.hpp"
#include "bfa/rng.hpp"
#include "bfa/simulate.hpp"

namespace bfa {

enum class CalibrationProtocol { Full, Tpn, Bfa };

inline std::string protocol_name(CalibrationProtocol p) {
  switch (p) {
    case CalibrationProtocol::Full: return "full";
    case CalibrationProtocol::Tpn: return "tpn";
    case CalibrationProtocol::Bfa: return "bfa";
  }
  return "?";
}

// Calibration data: one counts table per prepared input state. Under the
// bfa protocol only the all-zeros input exists (and suffices).
struct CalibrationSet {
  int n = 0;
  bool bfa = false;  // protocol tag: false = plain, true = bfa
  std::map<std::uint32_t, CountsTable> tables;

  const CountsTable& table(std::uint32_t input) const {
    auto it = tables.find(input);
    if (it == tables.end())
      throw ContractError("calibration set is missing input state " +
                          BitString(input, n).str());
    return it->second;
  }

  std::uint64_t total_shots() const {
    std::uint64_t total = 0;
    for (const auto& [input, table] : tables) total += table.shots;
    return total;
  }
};

// Simulate a calibration run against a known channel. The budget is split
// evenly over the protocol's input states, remainder going to the
// lowest-index states, so the total spent always equals the budget.
inline CalibrationSet run_calibration(const ResponseMatrix& m,
                                      CalibrationProtocol protocol,
                                      std::uint64_t budget, ShotStream& shots) {
  const int n = m.qubits();
  const std::size_t dim = m.dim();

  std::vector<std::uint32_t> inputs;
  switch (protocol) {
    case CalibrationProtocol::Full:
      inputs.resize(dim);
      for (std::size_t k = 0; k < dim; ++k) inputs[k] = static_cast<std::uint32_t>(k);
      break;
    case CalibrationProtocol::Tpn:
      inputs = {0u, static_cast<std::uint32_t>(dim - 1)};
      break;
    case CalibrationProtocol::Bfa:
      inputs = {0u};
      break;
  }
  if (budget < inputs.size())
    throw ContractError("budget " + std::to_string(budget) +
                        " smaller than the " + std::to_string(inputs.size()) +
                        " required input states");

  const std::uint64_t per = budget / inputs.size();
  const std::uint64_t rem = budget % inputs.size();

  CalibrationSet set;
  set.n = n;
  set.bfa = (protocol == CalibrationProtocol::Bfa);
  for (std::size_t idx = 0; idx < inputs.size(); ++idx) {
    const std::uint32_t input = inputs[idx];
    const std::uint64_t quota = per + (idx < rem ? 1 : 0);
    CountsTable table(n);
    const BitString truth(input, n);
    for (std::uint64_t shot = 0; shot < quota; ++shot) {
      const BitString outcome = set.bfa ? bfa_shot(truth, m, shots)
                                        : corrupt_readout(truth, m, shots);
      table.add(outcome.value);
    }
    set.tables.emplace(input, std::move(table));
  }
  return set;
}

// ---------------------------------------------------------------------------
// Estimators. All of them consume CountsTables only, so device data files
// ingest through the same path as simulated runs. Raw frequencies; no
// smoothing, zero counts stay zero.
// ---------------------------------------------------------------------------

inline ResponseMatrix estimate_full(const CalibrationSet& c) {
  if (c.bfa) throw ContractError("full estimator needs a plain calibration set");
  if (c.n > kMaxDenseQubits)
    throw ContractError("full estimate would exceed the dense limit");
  const std::size_t dim = std::size_t{1} << c.n;
  std::vector<double> cols(dim * dim, 0.0);
  for (std::uint32_t input = 0; input < dim; ++input) {
    const CountsTable& table = c.table(input);
    if (table.shots == 0)
      throw ContractError("calibration table for input " +
                          BitString(input, c.n).str() + " is empty");
    const double total = static_cast<double>(table.shots);
    for (const auto& [outcome, k] : table.counts)
      cols[std::size_t{input} * dim + outcome] = static_cast<double>(k) / total;
  }
  return ResponseMatrix(c.n, std::move(cols));
}

// Under bfa, the outcome of the all-zeros input IS the error syndrome, so
// its frequencies directly estimate the syndrome distribution.
inline SyndromeDistribution estimate_bfa(const CalibrationSet& c) {
  if (!c.bfa) throw ContractError("bfa estimator needs a bfa calibration set");
  return SyndromeDistribution(c.n, c.table(0).frequencies());
}

inline TpnModel estimate_tpn(const CalibrationSet& c) {
  if (c.bfa) throw ContractError("tpn estimator needs a plain calibration set");
  const std::uint32_t ones = static_cast<std::uint32_t>((std::size_t{1} << c.n) - 1);
  const CountsTable& zeros_table = c.table(0);
  const CountsTable& ones_table = c.table(ones);
  std::vector<QubitErrorRates> rates(static_cast<std::size_t>(c.n));
  for (int q = 0; q < c.n; ++q) {
    std::uint64_t flipped_up = 0;
    for (const auto& [outcome, k] : zeros_table.counts)
      if ((outcome >> q) & 1u) flipped_up += k;
    std::uint64_t flipped_down = 0;
    for (const auto& [outcome, k] : ones_table.counts)
      if (!((outcome >> q) & 1u)) flipped_down += k;
    rates[static_cast<std::size_t>(q)] = {
        static_cast<double>(flipped_up) / static_cast<double>(zeros_table.shots),
        static_cast<double>(flipped_down) / static_cast<double>(ones_table.shots)};
  }
  return TpnModel(std::move(rates));
}

inline TpnModel estimate_bfa_tpn(const CalibrationSet& c) {
  if (!c.bfa) throw ContractError("bfa+tpn estimator needs a bfa calibration set");
  const CountsTable& table = c.table(0);
  std::vector<double> p(static_cast<std::size_t>(c.n));
  for (int q = 0; q < c.n; ++q) {
    std::uint64_t flipped = 0;
    for (const auto& [outcome, k] : table.counts)
      if ((outcome >> q) & 1u) flipped += k;
    p[static_cast<std::size_t>(q)] =
        static_cast<double>(flipped) / static_cast<double>(table.shots);
  }
  return TpnModel::symmetric(p);
}

inline GroupedModel estimate_grouped(const CalibrationSet& c,
                                     const std::vector<std::vector<int>>& partition) {
  if (!c.bfa) throw ContractError("grouped estimator needs a bfa calibration set");
  const CountsTable& table = c.table(0);
  std::vector<GroupedModel::Group> groups;
  groups.reserve(partition.size());
  for (const auto& qubits : partition) {
    const CountsTable marg = table.marginal(qubits);
    groups.push_back({qubits, SyndromeDistribution(
                                  static_cast<int>(qubits.size()), marg.frequencies())});
  }
  return GroupedModel(c.n, std::move(groups));
}

}  // namespace bfa
