#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <string>
#include <thread>
#include <vector>

#include "bfa/bitstring.hpp"
#include "bfa/counts.hpp"
#include "bfa/errors.hpp"
#include "bfa/models.hpp"
#include "bfa/rng.hpp"

namespace bfa {

namespace detail {

// Inverse-CDF draw over a probability vector: first index whose running sum
// exceeds u. Falls back to the last positive entry if rounding leaves u
// above the total, so zero-probability outcomes are never produced.
inline std::uint32_t sample_index(std::span<const double> dist, double u) {
  double acc = 0.0;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    acc += dist[i];
    if (u < acc) return static_cast<std::uint32_t>(i);
  }
  for (std::size_t i = dist.size(); i-- > 0;)
    if (dist[i] > 0.0) return static_cast<std::uint32_t>(i);
  throw ContractError("cannot sample from an all-zero distribution");
}

inline void check_distribution(std::span<const double> dist) {
  if (dist.empty() || !std::has_single_bit(dist.size()))
    throw ContractError("distribution length " + std::to_string(dist.size()) +
                        " is not a power of two");
  double sum = 0.0;
  for (double x : dist) {
    if (std::isnan(x) || x < 0.0)
      throw ContractError("distribution has a negative or NaN entry");
    sum += x;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw ContractError("distribution sums to " + std::to_string(sum));
}

}  // namespace detail

// One pass through the classical readout channel: the observed outcome is
// drawn from the column of M selected by the true outcome.
inline BitString corrupt_readout(BitString truth, const ResponseMatrix& m,
                                 ShotStream& shots) {
  if (truth.width != m.qubits())
    throw ContractError("outcome width does not match the response matrix");
  const std::uint32_t drawn =
      detail::sample_index(m.column(truth.value), shots.unit());
  return BitString(drawn, truth.width);
}

// One shot under bit-flip averaging: flip the input by a uniformly random
// string s, read out through the channel, then undo s on the classical
// result. Draw order is fixed (s first, then the channel draw).
inline BitString bfa_shot(BitString truth, const ResponseMatrix& m,
                          ShotStream& shots) {
  if (truth.width != m.qubits())
    throw ContractError("outcome width does not match the response matrix");
  const std::uint32_t s = shots.bits(truth.width);
  const BitString flipped(truth.value ^ s, truth.width);
  const BitString raw = corrupt_readout(flipped, m, shots);
  return BitString(raw.value ^ s, truth.width);
}

// ---------------------------------------------------------------------------
// Reference states
// ---------------------------------------------------------------------------

enum class MeasBasis : std::uint8_t { Z, X };

struct MeasurementSetting {
  std::vector<MeasBasis> basis;  // index = qubit

  int qubits() const { return static_cast<int>(basis.size()); }

  // X on even-indexed qubits and Z on odd (or the reverse). Two such
  // settings cover all chain stabilizer generators Z_(i-1) X_i Z_(i+1):
  // the generator at qubit i is compatible with the setting whose X
  // qubits have i's parity.
  static MeasurementSetting alternating(int n, bool x_on_even) {
    MeasurementSetting s;
    s.basis.resize(static_cast<std::size_t>(n));
    for (int q = 0; q < n; ++q)
      s.basis[static_cast<std::size_t>(q)] =
          ((q % 2 == 0) == x_on_even) ? MeasBasis::X : MeasBasis::Z;
    return s;
  }

  static MeasurementSetting all_z(int n) {
    MeasurementSetting s;
    s.basis.assign(static_cast<std::size_t>(n), MeasBasis::Z);
    return s;
  }
};

inline constexpr int kMaxStatevectorQubits = 16;

// Exact outcome distribution for the linear graph state measured qubit-wise
// in the given Z/X bases. Statevector construction: |+>^n, controlled-Z on
// chain neighbours, then a Hadamard on every X-measured qubit. All
// amplitudes stay real throughout.
inline std::vector<double> graph_state_distribution(int n,
                                                    const MeasurementSetting& setting) {
  if (n < 2 || n > kMaxStatevectorQubits)
    throw ContractError("graph state size " + std::to_string(n) + " outside [2, " +
                        std::to_string(kMaxStatevectorQubits) + "]");
  if (setting.qubits() != n)
    throw ContractError("measurement setting width does not match qubit count");

  const std::size_t dim = std::size_t{1} << n;
  std::vector<double> amp(dim);
  const double base = 1.0 / std::sqrt(static_cast<double>(dim));
  for (std::uint32_t z = 0; z < dim; ++z)
    amp[z] = (adjacent_pair_count_u32(z, n) & 1) ? -base : base;

  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  for (int q = 0; q < n; ++q) {
    if (setting.basis[static_cast<std::size_t>(q)] != MeasBasis::X) continue;
    const std::size_t stride = std::size_t{1} << q;
    for (std::size_t base_idx = 0; base_idx < dim; base_idx += stride << 1)
      for (std::size_t i = base_idx; i < base_idx + stride; ++i) {
        const double a = amp[i];
        const double b = amp[i + stride];
        amp[i] = (a + b) * inv_sqrt2;
        amp[i + stride] = (a - b) * inv_sqrt2;
      }
  }

  std::vector<double> probs(dim);
  for (std::size_t i = 0; i < dim; ++i) probs[i] = amp[i] * amp[i];
  return probs;
}

inline std::vector<double> ghz_distribution(int n) {
  if (n < 1 || n > kMaxVectorQubits)
    throw ContractError("ghz size outside [1, " + std::to_string(kMaxVectorQubits) + "]");
  std::vector<double> p(std::size_t{1} << n, 0.0);
  p.front() = 0.5;
  p.back() = 0.5;
  return p;
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

inline CountsTable sample_counts(std::span<const double> dist, std::uint64_t shots,
                                 ShotStream& stream) {
  detail::check_distribution(dist);
  if (shots < 1) throw ContractError("shot count must be at least 1");
  CountsTable table(std::bit_width(dist.size()) - 1);
  for (std::uint64_t i = 0; i < shots; ++i)
    table.add(detail::sample_index(dist, stream.unit()));
  return table;
}

// Sharded sampling with a fixed block plan: block b draws its own stream
// derived from (seed, tag, b), so the merged table depends only on the plan,
// never on how many threads executed it.
inline CountsTable sample_counts_sharded(std::span<const double> dist,
                                         std::uint64_t shots, std::uint64_t seed,
                                         std::string_view tag,
                                         std::uint64_t block_size = 1u << 16,
                                         int workers = 1) {
  detail::check_distribution(dist);
  if (shots < 1) throw ContractError("shot count must be at least 1");
  if (block_size < 1) throw ContractError("block size must be at least 1");
  const std::uint64_t blocks = (shots + block_size - 1) / block_size;
  const int width = std::bit_width(dist.size()) - 1;

  std::vector<CountsTable> partial(blocks, CountsTable(width));
  auto run_block = [&](std::uint64_t b) {
    const std::uint64_t begin = b * block_size;
    const std::uint64_t count = std::min(block_size, shots - begin);
    ShotStream stream(Rng::derive_seed(seed, b),
                      std::string(tag) + "/block=" + std::to_string(b));
    for (std::uint64_t i = 0; i < count; ++i)
      partial[b].add(detail::sample_index(dist, stream.unit()));
  };

  if (workers <= 1 || blocks <= 1) {
    for (std::uint64_t b = 0; b < blocks; ++b) run_block(b);
  } else {
    std::vector<std::thread> pool;
    const int use = static_cast<int>(std::min<std::uint64_t>(workers, blocks));
    for (int w = 0; w < use; ++w)
      pool.emplace_back([&, w] {
        for (std::uint64_t b = static_cast<std::uint64_t>(w); b < blocks;
             b += static_cast<std::uint64_t>(use))
          run_block(b);
      });
    for (auto& t : pool) t.join();
  }

  CountsTable merged(width);
  for (const auto& part : partial) merged.merge(part);
  return merged;
}

}  // namespace bfa
