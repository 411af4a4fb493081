#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "bfa/bitstring.hpp"
#include "bfa/errors.hpp"

namespace bfa {

// Column sums (and probability-vector sums) must match 1 to within this
// tolerance on construction; anything worse is rejected as corrupt input.
inline constexpr double kProbabilitySumTol = 1e-9;

// Sums already within machine precision of 1 are left untouched instead of
// renormalised; dividing by 1 +/- 1ulp would break bit-exact algebraic
// round trips (symmetrise after densify recovers its input exactly).
inline constexpr double kMachineSumSlack = 1e-13;

// Dense 2^n x 2^n storage is capped here; beyond this the memory cost is
// unreasonable for a desk-scale tool.
inline constexpr int kMaxDenseQubits = 14;

// Sparse/vector models store 2^n entries and may go wider than the dense cap.
inline constexpr int kMaxVectorQubits = BitString::kMaxWidth;

namespace detail {

// Deterministic pairwise sum. For power-of-two ranges of identical values
// every partial sum is exact, which keeps symmetrisation round trips
// bit-exact and structural zeros at exactly zero.
inline double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 2) {
    if (v.empty()) return 0.0;
    return v.size() == 1 ? v[0] : v[0] + v[1];
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

inline int checked_qubit_count(int n, int max_width, const char* what) {
  if (n < 1 || n > max_width)
    throw ContractError(std::string(what) + ": qubit count " + std::to_string(n) +
                        " outside [1, " + std::to_string(max_width) + "]");
  return n;
}

inline void check_probability_payload(std::span<const double> values,
                                      const char* what) {
  for (double x : values) {
    if (std::isnan(x) || x < 0.0)
      throw ValidationError(std::string(what) + ": negative or NaN entry " +
                            std::to_string(x));
    if (x > 1.0 + kProbabilitySumTol)
      throw ValidationError(std::string(what) + ": entry " + std::to_string(x) +
                            " exceeds 1");
  }
}

}  // namespace detail

// Dense column-stochastic response matrix. entry(sigma, sigma') is the
// probability of reading out sigma when the error-free outcome is sigma'.
// Stored column-major: both the shot sampler and the calibration estimators
// consume whole columns.
class ResponseMatrix {
 public:
  ResponseMatrix(int n, std::vector<double> column_major)
      : n_(detail::checked_qubit_count(n, kMaxDenseQubits, "response matrix")),
        dim_(std::size_t{1} << n),
        cols_(std::move(column_major)) {
    if (cols_.size() != dim_ * dim_)
      throw ContractError("response matrix payload has " +
                          std::to_string(cols_.size()) + " entries, expected " +
                          std::to_string(dim_ * dim_));
    detail::check_probability_payload(cols_, "response matrix");
    for (std::size_t col = 0; col < dim_; ++col) {
      const double sum = detail::pairwise_sum(column(col));
      const double dev = std::abs(sum - 1.0);
      if (dev > kProbabilitySumTol)
        throw ValidationError("response matrix column " + std::to_string(col) +
                              " sums to " + std::to_string(sum));
      if (dev > kMachineSumSlack)
        for (std::size_t row = 0; row < dim_; ++row) cols_[col * dim_ + row] /= sum;
    }
  }

  static ResponseMatrix identity(int n) {
    const std::size_t dim = std::size_t{1}
                            << detail::checked_qubit_count(n, kMaxDenseQubits, "identity");
    std::vector<double> cols(dim * dim, 0.0);
    for (std::size_t i = 0; i < dim; ++i) cols[i * dim + i] = 1.0;
    return ResponseMatrix(n, std::move(cols));
  }

  // 2x2 factor for one qubit; p10 = p(read 1 | true 0), p01 = p(read 0 | true 1).
  static ResponseMatrix single_qubit(double p10, double p01) {
    return ResponseMatrix(1, {1.0 - p10, p10, p01, 1.0 - p01});
  }

  int qubits() const { return n_; }
  std::size_t dim() const { return dim_; }

  double entry(std::size_t row, std::size_t col) const {
    return cols_[col * dim_ + row];
  }

  std::span<const double> column(std::size_t col) const {
    return std::span<const double>(cols_).subspan(col * dim_, dim_);
  }

  std::span<const double> data() const { return cols_; }

  // M p
  std::vector<double> apply(std::span<const double> p) const {
    if (p.size() != dim_) throw ContractError("vector length mismatch in apply");
    std::vector<double> out(dim_, 0.0);
    for (std::size_t col = 0; col < dim_; ++col) {
      const double w = p[col];
      if (w == 0.0) continue;
      const auto c = column(col);
      for (std::size_t row = 0; row < dim_; ++row) out[row] += w * c[row];
    }
    return out;
  }

  // M^T p
  std::vector<double> apply_transpose(std::span<const double> p) const {
    if (p.size() != dim_) throw ContractError("vector length mismatch in apply");
    std::vector<double> out(dim_, 0.0);
    for (std::size_t col = 0; col < dim_; ++col) {
      const auto c = column(col);
      double acc = 0.0;
      for (std::size_t row = 0; row < dim_; ++row) acc += c[row] * p[row];
      out[col] = acc;
    }
    return out;
  }

  double max_row_sum() const {
    std::vector<double> sums(dim_, 0.0);
    for (std::size_t col = 0; col < dim_; ++col) {
      const auto c = column(col);
      for (std::size_t row = 0; row < dim_; ++row) sums[row] += std::abs(c[row]);
    }
    double m = 0.0;
    for (double s : sums) m = std::max(m, s);
    return m;
  }

 private:
  int n_;
  std::size_t dim_;
  std::vector<double> cols_;
};

// Probability vector over error syndromes. Fully determines the symmetrised
// response matrix through entry(sigma, sigma') = p_tilde[sigma ^ sigma'].
class SyndromeDistribution {
 public:
  SyndromeDistribution(int n, std::vector<double> p_tilde)
      : n_(detail::checked_qubit_count(n, kMaxVectorQubits, "syndrome distribution")),
        p_(std::move(p_tilde)) {
    if (p_.size() != (std::size_t{1} << n_))
      throw ContractError("syndrome distribution has " + std::to_string(p_.size()) +
                          " entries, expected " + std::to_string(std::size_t{1} << n_));
    detail::check_probability_payload(p_, "syndrome distribution");
    const double sum = detail::pairwise_sum(p_);
    const double dev = std::abs(sum - 1.0);
    if (dev > kProbabilitySumTol)
      throw ValidationError("syndrome distribution sums to " + std::to_string(sum));
    if (dev > kMachineSumSlack)
      for (double& x : p_) x /= sum;
  }

  static SyndromeDistribution delta(int n) {
    std::vector<double> p(std::size_t{1} << detail::checked_qubit_count(
                              n, kMaxVectorQubits, "syndrome distribution"),
                          0.0);
    p[0] = 1.0;
    return SyndromeDistribution(n, std::move(p));
  }

  int qubits() const { return n_; }
  std::size_t dim() const { return p_.size(); }
  double operator[](std::size_t s) const { return p_[s]; }
  const std::vector<double>& p_tilde() const { return p_; }

 private:
  int n_;
  std::vector<double> p_;
};

struct QubitErrorRates {
  double p10 = 0.0;  // p(read 1 | true 0)
  double p01 = 0.0;  // p(read 0 | true 1)
};

// Tensor-product noise: independent per-qubit readout errors. When
// `symmetric` is set the two rates coincide and the model is the bit-flip
// averaged variant with one parameter per qubit.
class TpnModel {
 public:
  explicit TpnModel(std::vector<QubitErrorRates> rates, bool symmetric = false)
      : rates_(std::move(rates)), symmetric_(symmetric) {
    detail::checked_qubit_count(static_cast<int>(rates_.size()), kMaxVectorQubits,
                                "tpn model");
    for (std::size_t i = 0; i < rates_.size(); ++i) {
      const auto& r = rates_[i];
      if (!(r.p10 >= 0.0 && r.p10 <= 1.0 && r.p01 >= 0.0 && r.p01 <= 1.0))
        throw ValidationError("tpn rate for qubit " + std::to_string(i) +
                              " outside [0, 1]");
      if (symmetric_ && r.p10 != r.p01)
        throw ContractError("tpn model flagged symmetric but qubit " +
                            std::to_string(i) + " has p10 != p01");
    }
  }

  static TpnModel symmetric(const std::vector<double>& p_tilde_per_qubit) {
    std::vector<QubitErrorRates> rates(p_tilde_per_qubit.size());
    for (std::size_t i = 0; i < rates.size(); ++i)
      rates[i] = {p_tilde_per_qubit[i], p_tilde_per_qubit[i]};
    return TpnModel(std::move(rates), true);
  }

  int qubits() const { return static_cast<int>(rates_.size()); }
  bool is_symmetric() const { return symmetric_; }
  const std::vector<QubitErrorRates>& rates() const { return rates_; }
  const QubitErrorRates& rate(int qubit) const {
    return rates_[static_cast<std::size_t>(qubit)];
  }

 private:
  std::vector<QubitErrorRates> rates_;
  bool symmetric_;
};

// Disjoint qubit groups, each carrying its own syndrome distribution over
// the group's bits. Groups may be arbitrary qubit subsets, not only
// contiguous ranges. Within a group, the j-th listed qubit maps to local
// bit j of the group's distribution index.
class GroupedModel {
 public:
  struct Group {
    std::vector<int> qubits;
    SyndromeDistribution dist;
  };

  GroupedModel(int n, std::vector<Group> groups)
      : n_(detail::checked_qubit_count(n, kMaxVectorQubits, "grouped model")),
        groups_(std::move(groups)) {
    std::vector<bool> seen(static_cast<std::size_t>(n_), false);
    for (const auto& g : groups_) {
      if (g.qubits.empty())
        throw ContractError("grouped model contains an empty group");
      if (g.dist.qubits() != static_cast<int>(g.qubits.size()))
        throw ContractError("group distribution width does not match its qubit list");
      for (int q : g.qubits) {
        if (q < 0 || q >= n_)
          throw ContractError("group qubit index " + std::to_string(q) +
                              " outside [0, " + std::to_string(n_ - 1) + "]");
        if (seen[static_cast<std::size_t>(q)])
          throw ContractError("qubit " + std::to_string(q) +
                              " appears in more than one group");
        seen[static_cast<std::size_t>(q)] = true;
      }
    }
    for (int q = 0; q < n_; ++q)
      if (!seen[static_cast<std::size_t>(q)])
        throw ContractError("qubit " + std::to_string(q) + " missing from partition");
  }

  int qubits() const { return n_; }
  const std::vector<Group>& groups() const { return groups_; }

 private:
  int n_;
  std::vector<Group> groups_;
};

using Model =
    std::variant<ResponseMatrix, SyndromeDistribution, TpnModel, GroupedModel>;

// ---------------------------------------------------------------------------
// Construction and transforms
// ---------------------------------------------------------------------------

// Kronecker product in left-to-right order: the first factor owns the most
// significant (highest-index) qubits, the last factor owns qubit 0.
inline ResponseMatrix build_tensor(std::span<const ResponseMatrix> factors) {
  if (factors.empty()) throw ContractError("tensor product of zero factors");
  int total = 0;
  for (const auto& f : factors) total += f.qubits();
  if (total > kMaxDenseQubits)
    throw ContractError("tensor width " + std::to_string(total) +
                        " overflows the dense limit of " +
                        std::to_string(kMaxDenseQubits) + " qubits");

  std::vector<double> acc(factors[0].data().begin(), factors[0].data().end());
  std::size_t dim = factors[0].dim();
  for (std::size_t fi = 1; fi < factors.size(); ++fi) {
    const ResponseMatrix& f = factors[fi];
    const std::size_t fdim = f.dim();
    const std::size_t ndim = dim * fdim;
    std::vector<double> next(ndim * ndim);
    for (std::size_t ca = 0; ca < dim; ++ca)
      for (std::size_t cb = 0; cb < fdim; ++cb) {
        const std::size_t col = ca * fdim + cb;
        for (std::size_t ra = 0; ra < dim; ++ra) {
          const double left = acc[ca * dim + ra];
          for (std::size_t rb = 0; rb < fdim; ++rb)
            next[col * ndim + ra * fdim + rb] = left * f.entry(rb, cb);
        }
      }
    acc = std::move(next);
    dim = ndim;
  }
  return ResponseMatrix(total, std::move(acc));
}

inline ResponseMatrix build_tensor(std::initializer_list<ResponseMatrix> factors) {
  return build_tensor(std::span<const ResponseMatrix>(factors.begin(), factors.size()));
}

// Average the conditional probabilities over all simultaneous input/output
// bit flips: p_tilde[sigma] = 2^-n * sum_s entry(sigma ^ s, s). This is the
// response matrix the readout process presents once per-shot random
// bit-flips (undone classically afterwards) are averaged over.
inline SyndromeDistribution symmetrise(const ResponseMatrix& m) {
  const std::size_t dim = m.dim();
  std::vector<double> p(dim), gather(dim);
  for (std::uint32_t sigma = 0; sigma < dim; ++sigma) {
    for (std::uint32_t s = 0; s < dim; ++s) gather[s] = m.entry(sigma ^ s, s);
    p[sigma] = detail::pairwise_sum(gather) / static_cast<double>(dim);
  }
  return SyndromeDistribution(m.qubits(), std::move(p));
}

inline TpnModel symmetrise_tpn(const TpnModel& t) {
  std::vector<double> p(static_cast<std::size_t>(t.qubits()));
  for (int q = 0; q < t.qubits(); ++q)
    p[static_cast<std::size_t>(q)] = (t.rate(q).p10 + t.rate(q).p01) / 2.0;
  return TpnModel::symmetric(p);
}

// Multiply the probability of each error syndrome S by gamma^(number of
// adjacent 1-pairs in S), then renormalise every column. gamma > 1 fakes
// cross-talk style correlations between chain-adjacent qubits.
inline ResponseMatrix boost_correlations(const ResponseMatrix& m, double gamma) {
  if (!(gamma > 0.0))
    throw ContractError("boost factor must be positive, got " + std::to_string(gamma));
  const std::size_t dim = m.dim();
  const int n = m.qubits();
  std::vector<double> mult(dim);
  for (std::uint32_t s = 0; s < dim; ++s)
    mult[s] = std::pow(gamma, adjacent_pair_count_u32(s, n));

  std::vector<double> cols(dim * dim);
  for (std::size_t col = 0; col < dim; ++col) {
    double sum = 0.0;
    for (std::size_t row = 0; row < dim; ++row) {
      const double v = m.entry(row, col) * mult[row ^ col];
      cols[col * dim + row] = v;
      sum += v;
    }
    for (std::size_t row = 0; row < dim; ++row) cols[col * dim + row] /= sum;
  }
  return ResponseMatrix(n, std::move(cols));
}

// ---------------------------------------------------------------------------
// Densification
// ---------------------------------------------------------------------------

inline ResponseMatrix densify(const SyndromeDistribution& d) {
  const int n = d.qubits();
  if (n > kMaxDenseQubits)
    throw ContractError("densify: " + std::to_string(n) + " qubits exceeds the dense limit");
  const std::size_t dim = d.dim();
  std::vector<double> cols(dim * dim);
  for (std::size_t col = 0; col < dim; ++col)
    for (std::size_t row = 0; row < dim; ++row)
      cols[col * dim + row] = d[row ^ col];
  return ResponseMatrix(n, std::move(cols));
}

inline ResponseMatrix densify(const TpnModel& t) {
  if (t.qubits() > kMaxDenseQubits)
    throw ContractError("densify: " + std::to_string(t.qubits()) +
                        " qubits exceeds the dense limit");
  std::vector<ResponseMatrix> factors;
  factors.reserve(static_cast<std::size_t>(t.qubits()));
  for (int q = t.qubits() - 1; q >= 0; --q)
    factors.push_back(ResponseMatrix::single_qubit(t.rate(q).p10, t.rate(q).p01));
  return build_tensor(factors);
}

// Expand a grouped model to the full syndrome distribution: groups fail
// independently, so p_tilde(s) is the product of each group's probability
// for its slice of s.
inline SyndromeDistribution to_syndrome(const GroupedModel& g) {
  const int n = g.qubits();
  const std::size_t dim = std::size_t{1} << n;
  std::vector<double> p(dim);
  for (std::uint32_t s = 0; s < dim; ++s) {
    double prob = 1.0;
    for (const auto& grp : g.groups()) {
      std::uint32_t local = 0;
      for (std::size_t j = 0; j < grp.qubits.size(); ++j)
        local |= ((s >> grp.qubits[j]) & 1u) << j;
      prob *= grp.dist[local];
    }
    p[s] = prob;
  }
  return SyndromeDistribution(n, std::move(p));
}

inline SyndromeDistribution to_syndrome(const TpnModel& t) {
  if (!t.is_symmetric())
    throw ContractError("only a symmetric tpn model has a syndrome representation");
  const int n = t.qubits();
  std::vector<double> p{1.0};
  for (int q = 0; q < n; ++q) {
    const double pe = t.rate(q).p10;
    std::vector<double> next(p.size() * 2);
    for (std::size_t s = 0; s < p.size(); ++s) {
      next[s] = p[s] * (1.0 - pe);                 // qubit q unflipped
      next[s + (std::size_t{1} << q)] = p[s] * pe; // qubit q flipped
    }
    // p only has support on the low q bits, so the fold above covers all
    // 2^(q+1) syndromes.
    p = std::move(next);
  }
  return SyndromeDistribution(n, std::move(p));
}

inline ResponseMatrix densify(const GroupedModel& g) {
  return densify(to_syndrome(g));
}

inline ResponseMatrix densify(const Model& m) {
  return std::visit(
      [](const auto& inner) -> ResponseMatrix {
        using T = std::decay_t<decltype(inner)>;
        if constexpr (std::is_same_v<T, ResponseMatrix>)
          return inner;
        else
          return densify(inner);
      },
      m);
}

inline int model_qubits(const Model& m) {
  return std::visit([](const auto& inner) { return inner.qubits(); }, m);
}

inline std::string model_format(const Model& m) {
  struct V {
    std::string operator()(const ResponseMatrix&) const { return "dense"; }
    std::string operator()(const SyndromeDistribution&) const { return "syndrome"; }
    std::string operator()(const TpnModel&) const { return "tpn"; }
    std::string operator()(const GroupedModel&) const { return "grouped"; }
  };
  return std::visit(V{}, m);
}

// ---------------------------------------------------------------------------
// Diagnostics
// ---------------------------------------------------------------------------

struct ColumnDeviation {
  std::size_t column = 0;
  double deviation = 0.0;
};

struct NegativeEntry {
  std::size_t row = 0;
  std::size_t column = 0;
  double value = 0.0;
};

struct Diagnostics {
  double max_column_sum_deviation = 0.0;
  std::vector<ColumnDeviation> column_deviations;  // deviation beyond tolerance
  std::vector<NegativeEntry> negative_entries;
  std::optional<double> symmetry_residual;

  bool ok() const {
    return column_deviations.empty() && negative_entries.empty() &&
           (!symmetry_residual || *symmetry_residual <= kProbabilitySumTol);
  }
};

// Lint a raw column-major payload without constructing a ResponseMatrix
// (construction rejects what this merely reports).
inline Diagnostics validate_columns(int n, std::span<const double> column_major,
                                    double tol = kProbabilitySumTol) {
  const std::size_t dim = std::size_t{1} << n;
  if (column_major.size() != dim * dim)
    throw ContractError("payload size does not match qubit count");
  Diagnostics diag;
  for (std::size_t col = 0; col < dim; ++col) {
    double sum = 0.0;
    for (std::size_t row = 0; row < dim; ++row) {
      const double v = column_major[col * dim + row];
      if (v < 0.0) diag.negative_entries.push_back({row, col, v});
      sum += v;
    }
    const double dev = std::abs(sum - 1.0);
    diag.max_column_sum_deviation = std::max(diag.max_column_sum_deviation, dev);
    if (dev > tol) diag.column_deviations.push_back({col, dev});
  }
  return diag;
}

// max over syndromes s of max |M - X^(s) M X^(s)|, zero iff the matrix is
// invariant under simultaneous input/output flips. O(8^n); diagnostic only.
inline double symmetry_residual(int n, std::span<const double> column_major) {
  const std::size_t dim = std::size_t{1} << n;
  if (column_major.size() != dim * dim)
    throw ContractError("payload size does not match qubit count");
  double worst = 0.0;
  for (std::uint32_t s = 1; s < dim; ++s)
    for (std::uint32_t col = 0; col < dim; ++col)
      for (std::uint32_t row = 0; row < dim; ++row) {
        const double a = column_major[col * dim + row];
        const double b = column_major[(col ^ s) * dim + (row ^ s)];
        worst = std::max(worst, std::abs(a - b));
      }
  return worst;
}

inline Diagnostics validate_model(const Model& m) {
  const ResponseMatrix dense = densify(m);
  Diagnostics diag = validate_columns(dense.qubits(), dense.data());
  const bool claims_symmetry =
      std::holds_alternative<SyndromeDistribution>(m) ||
      std::holds_alternative<GroupedModel>(m) ||
      (std::holds_alternative<TpnModel>(m) && std::get<TpnModel>(m).is_symmetric());
  if (claims_symmetry && dense.qubits() <= 8)
    diag.symmetry_residual = symmetry_residual(dense.qubits(), dense.data());
  return diag;
}

}  // namespace bfa
