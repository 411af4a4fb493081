#pragma once

#include <vector>

#include "bfa/calibrate.hpp"
#include "bfa/counts.hpp"
#include "bfa/models.hpp"

namespace bfa {

// A worked 4-qubit readout example used by tests, the bundled data files and
// the benchmark presets: qubits 0 and 3 fail independently while qubits 1
// and 2 always fail together (one fully correlated pair).

inline ResponseMatrix example4q_factor_q3() {
  return ResponseMatrix(1, {0.98, 0.02, 0.08, 0.92});
}

// Correlated block for qubits 2 and 1 (local bit 0 = qubit 1): errors land
// only on the 00 <-> 11 flip, never on a single qubit of the pair.
inline ResponseMatrix example4q_factor_q21() {
  return ResponseMatrix(2, {0.96, 0.00, 0.00, 0.04,   // column 00
                            0.00, 0.94, 0.06, 0.00,   // column 01
                            0.00, 0.10, 0.90, 0.00,   // column 10
                            0.16, 0.00, 0.00, 0.84}); // column 11
}

inline ResponseMatrix example4q_factor_q0() {
  return ResponseMatrix(1, {0.97, 0.03, 0.11, 0.89});
}

inline ResponseMatrix example4q_response() {
  return build_tensor({example4q_factor_q3(), example4q_factor_q21(),
                       example4q_factor_q0()});
}

// A 10,000-shot calibration of the example channel under bit-flip
// averaging: prepare all zeros, flip uniformly at random, read out, undo
// the flip. Outcome 0110 marks the correlated pair firing.
inline CalibrationSet example4q_bfa_calibration() {
  CountsTable table(4);
  table.add(0b0000, 8091);
  table.add(0b0001, 595);
  table.add(0b0110, 748);
  table.add(0b0111, 61);
  table.add(0b1000, 433);
  table.add(0b1001, 22);
  table.add(0b1110, 46);
  table.add(0b1111, 4);
  CalibrationSet set;
  set.n = 4;
  set.bfa = true;
  set.tables.emplace(0u, std::move(table));
  return set;
}

// 10,000 shots of a noiseless 4-qubit GHZ preparation read out through the
// example channel under bit-flip averaging.
inline CountsTable example4q_ghz_counts() {
  CountsTable table(4);
  table.add(0b0000, 4048);
  table.add(0b0001, 330);
  table.add(0b0110, 407);
  table.add(0b0111, 243);
  table.add(0b1000, 235);
  table.add(0b1001, 414);
  table.add(0b1110, 316);
  table.add(0b1111, 4007);
  return table;
}

// The support the GHZ readout stays inside under this error profile: the
// XOR-closure of the syndromes the channel can actually produce, acting on
// the two GHZ components.
inline std::vector<std::uint32_t> example4q_ghz_support() {
  return {0b0000, 0b0001, 0b0110, 0b0111, 0b1000, 0b1001, 0b1110, 0b1111};
}

}  // namespace bfa
