#pragma once

#include <cmath>
#include <span>

#include "bfa/errors.hpp"
#include "bfa/models.hpp"

namespace bfa {

// Mean column-wise classical (Bhattacharyya) fidelity between two response
// matrices: 2^-n sum_ij sqrt(a_ij b_ij). 1 iff the matrices coincide.
inline double matrix_fidelity(const ResponseMatrix& a, const ResponseMatrix& b) {
  if (a.qubits() != b.qubits())
    throw ContractError("matrix fidelity dimension mismatch: " +
                        std::to_string(a.qubits()) + " vs " +
                        std::to_string(b.qubits()) + " qubits");
  const auto da = a.data();
  const auto db = b.data();
  double acc = 0.0;
  for (std::size_t i = 0; i < da.size(); ++i) acc += std::sqrt(da[i] * db[i]);
  return acc / static_cast<double>(a.dim());
}

inline double matrix_fidelity(const Model& a, const Model& b) {
  return matrix_fidelity(densify(a), densify(b));
}

// Total variation distance in the unhalved convention sum |p - q| used by
// the sampling bounds in complexity.hpp. The conventional halved quantity
// is available under its own name to avoid silent mix-ups.
inline double tv_distance(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size())
    throw ContractError("total variation length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) acc += std::abs(p[i] - q[i]);
  return acc;
}

inline double tv_distance_halved(std::span<const double> p,
                                 std::span<const double> q) {
  return 0.5 * tv_distance(p, q);
}

}  // namespace bfa
