#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "bfa/bitstring.hpp"
#include "bfa/errors.hpp"

namespace bfa {

// Shot counts keyed by outcome. Outcomes absent from the map are zero. The
// ordered map keeps iteration (and therefore serialisation) deterministic.
struct CountsTable {
  int n = 0;
  std::uint64_t shots = 0;
  std::map<std::uint32_t, std::uint64_t> counts;

  CountsTable() = default;
  explicit CountsTable(int n_) : n(n_) {
    if (n < 1 || n > BitString::kMaxWidth)
      throw ContractError("counts table width " + std::to_string(n) +
                          " outside [1, " + std::to_string(BitString::kMaxWidth) + "]");
  }

  void add(std::uint32_t outcome, std::uint64_t k = 1) {
    counts[outcome] += k;
    shots += k;
  }

  void merge(const CountsTable& other) {
    if (other.n != n) throw ContractError("counts table width mismatch in merge");
    for (const auto& [outcome, k] : other.counts) counts[outcome] += k;
    shots += other.shots;
  }

  // Dense empirical frequency vector of length 2^n.
  std::vector<double> frequencies() const {
    if (n > 20)
      throw ContractError("refusing to materialise 2^" + std::to_string(n) +
                          " frequencies");
    if (shots == 0) throw ContractError("counts table is empty");
    std::vector<double> freq(std::size_t{1} << n, 0.0);
    // one rounding per entry: k/shots, not k * (1/shots)
    const double total = static_cast<double>(shots);
    for (const auto& [outcome, k] : counts)
      freq[outcome] = static_cast<double>(k) / total;
    return freq;
  }

  // Counts marginalised onto a qubit subset; the j-th listed qubit becomes
  // local bit j of the marginal outcome.
  CountsTable marginal(const std::vector<int>& qubits) const {
    CountsTable out(static_cast<int>(qubits.size()));
    for (int q : qubits)
      if (q < 0 || q >= n)
        throw ContractError("marginal qubit index " + std::to_string(q) +
                            " outside [0, " + std::to_string(n - 1) + "]");
    for (const auto& [outcome, k] : counts) {
      std::uint32_t local = 0;
      for (std::size_t j = 0; j < qubits.size(); ++j)
        local |= ((outcome >> qubits[j]) & 1u) << j;
      out.add(local, k);
    }
    return out;
  }
};

}  // namespace bfa
