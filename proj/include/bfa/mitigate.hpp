#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "bfa/errors.hpp"
#include "bfa/models.hpp"
#include "bfa/simulate.hpp"
#include "bfa/wht.hpp"

namespace bfa {

inline constexpr double kConditionLimit = 1e8;

enum class MitigationMethod { Inverse, Lsq, LsqReduced };

inline std::string method_name(MitigationMethod m) {
  switch (m) {
    case MitigationMethod::Inverse: return "inverse";
    case MitigationMethod::Lsq: return "lsq";
    case MitigationMethod::LsqReduced: return "lsq-reduced";
  }
  return "?";
}

struct MitigationResult {
  std::vector<double> quasi;     // raw recovered vector, may contain negatives
  std::vector<double> physical;  // Euclidean projection onto the simplex
  MitigationMethod method = MitigationMethod::Inverse;
  double residual = 0.0;  // ||p_obs - M p_physical||_2
  std::uint64_t iterations = 0;
  bool converged = true;
  double last_change = 0.0;
};

struct LsqOptions {
  double tol = 1e-8;
  std::uint64_t max_iter = 0;  // 0: defaults to 50 * 2^n
  std::vector<double>* residual_trace = nullptr;  // optional per-iterate record
};

// Euclidean projection onto the probability simplex (sort-based threshold).
inline std::vector<double> simplex_project(std::span<const double> v) {
  std::vector<double> u(v.begin(), v.end());
  std::sort(u.begin(), u.end(), std::greater<>());
  double cum = 0.0;
  double tau = u[0] - 1.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    cum += u[j];
    const double t = (cum - 1.0) / static_cast<double>(j + 1);
    if (u[j] - t > 0.0) tau = t;
  }
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::max(v[i] - tau, 0.0);
  return out;
}

namespace detail {

inline void apply_two_by_two(std::vector<double>& v, int qubit, double a, double b,
                             double c, double d) {
  // out0 = a in0 + b in1, out1 = c in0 + d in1 on the qubit's index bit
  const std::size_t stride = std::size_t{1} << qubit;
  for (std::size_t base = 0; base < v.size(); base += stride << 1)
    for (std::size_t i = base; i < base + stride; ++i) {
      const double v0 = v[i];
      const double v1 = v[i + stride];
      v[i] = a * v0 + b * v1;
      v[i + stride] = c * v0 + d * v1;
    }
}

inline double norm2(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

// Uniform matvec access to the four model families, plus the operator-norm
// surrogate ||M||_1 ||M||_inf >= ||M||_2^2 that fixes the gradient step.
class ModelOp {
 public:
  explicit ModelOp(const Model& m) {
    if (const auto* dense = std::get_if<ResponseMatrix>(&m)) {
      dense_ = dense;
      dim_ = dense->dim();
      n_ = dense->qubits();
    } else if (const auto* syn = std::get_if<SyndromeDistribution>(&m)) {
      coeffs_ = syn->p_tilde();
      dim_ = syn->dim();
      n_ = syn->qubits();
    } else if (const auto* grouped = std::get_if<GroupedModel>(&m)) {
      coeffs_ = to_syndrome(*grouped).p_tilde();
      dim_ = coeffs_.size();
      n_ = grouped->qubits();
    } else {
      tpn_ = &std::get<TpnModel>(m);
      n_ = tpn_->qubits();
      dim_ = std::size_t{1} << n_;
    }
  }

  std::size_t dim() const { return dim_; }
  int qubits() const { return n_; }

  std::vector<double> apply(std::span<const double> v) const {
    if (dense_) return dense_->apply(v);
    if (tpn_) {
      std::vector<double> out(v.begin(), v.end());
      for (int q = 0; q < n_; ++q) {
        const auto& r = tpn_->rate(q);
        apply_two_by_two(out, q, 1.0 - r.p10, r.p01, r.p10, 1.0 - r.p01);
      }
      return out;
    }
    return xor_convolve(coeffs_, v);
  }

  std::vector<double> apply_transpose(std::span<const double> v) const {
    if (dense_) return dense_->apply_transpose(v);
    if (tpn_) {
      std::vector<double> out(v.begin(), v.end());
      for (int q = 0; q < n_; ++q) {
        const auto& r = tpn_->rate(q);
        apply_two_by_two(out, q, 1.0 - r.p10, r.p10, r.p01, 1.0 - r.p01);
      }
      return out;
    }
    return xor_convolve(coeffs_, v);  // symmetric
  }

  double norm_bound_sq() const {
    if (dense_) return dense_->max_row_sum();  // column sums are 1
    if (tpn_) {
      double rowsum = 1.0;
      for (int q = 0; q < n_; ++q)
        rowsum *= 1.0 + std::abs(tpn_->rate(q).p01 - tpn_->rate(q).p10);
      return rowsum;
    }
    double mass = 0.0;
    for (double c : coeffs_) mass += std::abs(c);
    return mass * mass;
  }

 private:
  const ResponseMatrix* dense_ = nullptr;
  const TpnModel* tpn_ = nullptr;
  std::vector<double> coeffs_;
  std::size_t dim_ = 0;
  int n_ = 0;
};

}  // namespace detail

inline std::vector<double> model_apply(const Model& m, std::span<const double> p) {
  return detail::ModelOp(m).apply(p);
}

// ---------------------------------------------------------------------------
// Inverse mitigation
// ---------------------------------------------------------------------------

// Recover quasi = M^-1 p_obs along the cheapest exact route the model
// allows: XOR convolution with the analytic inverse coefficients for
// syndrome-form models, per-qubit 2x2 inverses for tensor-product noise,
// an LU solve (with a condition estimate) for general dense matrices.
inline MitigationResult mitigate_inverse(std::span<const double> p_obs,
                                         const Model& model,
                                         double eigenvalue_floor = kEigenvalueFloor) {
  const std::size_t dim = std::size_t{1} << model_qubits(model);
  if (p_obs.size() != dim)
    throw ContractError("observed vector length does not match the model");

  std::vector<double> quasi;
  if (const auto* dense = std::get_if<ResponseMatrix>(&model)) {
    Eigen::Map<const Eigen::MatrixXd> a(dense->data().data(),
                                        static_cast<Eigen::Index>(dim),
                                        static_cast<Eigen::Index>(dim));
    Eigen::Map<const Eigen::VectorXd> b(p_obs.data(), static_cast<Eigen::Index>(dim));
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
    const double rcond = lu.rcond();
    if (!(rcond > 0.0) || 1.0 / rcond > kConditionLimit)
      throw IllConditionedError(rcond > 0.0 ? 1.0 / rcond
                                            : std::numeric_limits<double>::infinity());
    Eigen::VectorXd x = lu.solve(b);
    quasi.assign(x.data(), x.data() + x.size());
  } else if (const auto* tpn = std::get_if<TpnModel>(&model)) {
    quasi.assign(p_obs.begin(), p_obs.end());
    for (int q = 0; q < tpn->qubits(); ++q) {
      const auto& r = tpn->rate(q);
      const double det = 1.0 - r.p10 - r.p01;
      if (std::abs(det) < eigenvalue_floor)
        throw NearSingularError(static_cast<std::size_t>(q), std::abs(det));
      detail::apply_two_by_two(quasi, q, (1.0 - r.p01) / det, -r.p01 / det,
                               -r.p10 / det, (1.0 - r.p10) / det);
    }
  } else {
    const SyndromeDistribution syn =
        std::holds_alternative<SyndromeDistribution>(model)
            ? std::get<SyndromeDistribution>(model)
            : to_syndrome(std::get<GroupedModel>(model));
    const InverseCoefficients q = analytic_inverse(syn, eigenvalue_floor);
    quasi = xor_convolve(q.q_tilde, p_obs);
  }

  MitigationResult result;
  result.method = MitigationMethod::Inverse;
  result.physical = simplex_project(quasi);
  result.quasi = std::move(quasi);
  std::vector<double> forward = model_apply(model, result.physical);
  for (std::size_t i = 0; i < dim; ++i) forward[i] -= p_obs[i];
  result.residual = detail::norm2(forward);
  return result;
}

// ---------------------------------------------------------------------------
// Constrained least squares
// ---------------------------------------------------------------------------

namespace detail {

// Projected gradient descent for min ||b - A p||^2 over the simplex, with
// fixed step 1/bound where bound >= ||A||_2^2. Monotone in the objective.
template <typename ApplyFn, typename ApplyTFn>
MitigationResult projected_gradient(std::span<const double> b, ApplyFn&& apply,
                                    ApplyTFn&& apply_t, double norm_bound_sq,
                                    std::vector<double> start, LsqOptions opt) {
  const std::size_t dim = b.size();
  const double step = 1.0 / norm_bound_sq;

  MitigationResult result;
  result.method = MitigationMethod::Lsq;
  std::vector<double> p = std::move(start);
  result.converged = false;

  std::uint64_t performed = 0;
  for (std::uint64_t it = 1; it <= opt.max_iter; ++it) {
    std::vector<double> r = apply(p);
    for (std::size_t i = 0; i < dim; ++i) r[i] -= b[i];
    if (opt.residual_trace && it == 1) opt.residual_trace->push_back(norm2(r));
    std::vector<double> g = apply_t(r);
    std::vector<double> moved(dim);
    for (std::size_t i = 0; i < dim; ++i) moved[i] = p[i] - step * g[i];
    std::vector<double> next = simplex_project(moved);

    double change = 0.0;
    for (std::size_t i = 0; i < dim; ++i)
      change = std::max(change, std::abs(next[i] - p[i]));
    p = std::move(next);
    performed = it;
    result.last_change = change;
    if (opt.residual_trace) {
      std::vector<double> rr = apply(p);
      for (std::size_t i = 0; i < dim; ++i) rr[i] -= b[i];
      opt.residual_trace->push_back(norm2(rr));
    }
    if (change < opt.tol) {
      result.converged = true;
      break;
    }
  }

  result.iterations = performed;
  std::vector<double> r = apply(p);
  for (std::size_t i = 0; i < dim; ++i) r[i] -= b[i];
  result.residual = norm2(r);
  result.quasi = p;
  result.physical = std::move(p);
  return result;
}

}  // namespace detail

inline MitigationResult mitigate_lsq(std::span<const double> p_obs,
                                     const Model& model, LsqOptions opt = {}) {
  if (!(opt.tol > 0.0)) throw ContractError("lsq tolerance must be positive");
  detail::ModelOp op(model);
  if (p_obs.size() != op.dim())
    throw ContractError("observed vector length does not match the model");
  if (opt.max_iter == 0)
    opt.max_iter = std::uint64_t{50} << op.qubits();

  // Warm start from the projected inverse when the model inverts cleanly;
  // monotone descent then keeps the final residual at or below that of the
  // projected inverse solution.
  std::vector<double> start;
  try {
    start = mitigate_inverse(p_obs, model).physical;
  } catch (const Error&) {
    start = simplex_project(p_obs);
  }

  return detail::projected_gradient(
      p_obs, [&](std::span<const double> v) { return op.apply(v); },
      [&](std::span<const double> v) { return op.apply_transpose(v); },
      op.norm_bound_sq(), std::move(start), opt);
}

// Least squares restricted to a support set closed under XOR with every
// syndrome of nonzero probability; outcomes outside the support are pinned
// to zero. Closure makes the restricted problem exact, not approximate: the
// channel cannot move mass across the support boundary.
inline MitigationResult mitigate_lsq_reduced(std::span<const double> p_obs,
                                             const SyndromeDistribution& d,
                                             std::vector<std::uint32_t> support,
                                             LsqOptions opt = {}) {
  if (!(opt.tol > 0.0)) throw ContractError("lsq tolerance must be positive");
  const std::size_t dim = d.dim();
  if (p_obs.size() != dim)
    throw ContractError("observed vector length does not match the model");
  std::sort(support.begin(), support.end());
  support.erase(std::unique(support.begin(), support.end()), support.end());
  if (support.empty()) throw ContractError("support set is empty");
  if (support.back() >= dim)
    throw ContractError("support outcome " + std::to_string(support.back()) +
                        " outside the outcome space");

  std::vector<char> in_support(dim, 0);
  for (std::uint32_t o : support) in_support[o] = 1;
  for (std::uint32_t s = 1; s < dim; ++s) {
    if (d[s] <= 0.0) continue;
    for (std::uint32_t o : support)
      if (!in_support[o ^ s]) throw SupportNotClosedError(s, o);
  }

  const std::size_t k = support.size();
  std::vector<double> a(k * k);  // column-major reduced channel
  for (std::size_t j = 0; j < k; ++j)
    for (std::size_t i = 0; i < k; ++i) a[j * k + i] = d[support[i] ^ support[j]];

  std::vector<double> b_r(k);
  double off_sq = 0.0;
  for (std::uint32_t o = 0; o < dim; ++o)
    if (!in_support[o]) off_sq += p_obs[o] * p_obs[o];
  for (std::size_t i = 0; i < k; ++i) b_r[i] = p_obs[support[i]];

  if (opt.max_iter == 0)
    opt.max_iter = std::uint64_t{50} << d.qubits();

  std::vector<double> start_r(k);
  try {
    const InverseCoefficients q = analytic_inverse(d);
    const std::vector<double> quasi = xor_convolve(q.q_tilde, p_obs);
    for (std::size_t i = 0; i < k; ++i) start_r[i] = quasi[support[i]];
  } catch (const Error&) {
    start_r = b_r;
  }
  start_r = simplex_project(start_r);

  double norm1 = 0.0, norminf = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    double cs = 0.0;
    for (std::size_t i = 0; i < k; ++i) cs += std::abs(a[j * k + i]);
    norm1 = std::max(norm1, cs);
  }
  for (std::size_t i = 0; i < k; ++i) {
    double rs = 0.0;
    for (std::size_t j = 0; j < k; ++j) rs += std::abs(a[j * k + i]);
    norminf = std::max(norminf, rs);
  }

  auto apply_reduced = [&](std::span<const double> v) {
    std::vector<double> out(k, 0.0);
    for (std::size_t j = 0; j < k; ++j) {
      const double w = v[j];
      if (w == 0.0) continue;
      for (std::size_t i = 0; i < k; ++i) out[i] += a[j * k + i] * w;
    }
    return out;
  };
  auto apply_reduced_t = [&](std::span<const double> v) {
    std::vector<double> out(k, 0.0);
    for (std::size_t j = 0; j < k; ++j) {
      double acc = 0.0;
      for (std::size_t i = 0; i < k; ++i) acc += a[j * k + i] * v[i];
      out[j] = acc;
    }
    return out;
  };

  MitigationResult reduced = detail::projected_gradient(
      b_r, apply_reduced, apply_reduced_t, norm1 * norminf, std::move(start_r), opt);

  MitigationResult result;
  result.method = MitigationMethod::LsqReduced;
  result.iterations = reduced.iterations;
  result.converged = reduced.converged;
  result.last_change = reduced.last_change;
  result.quasi.assign(dim, 0.0);
  for (std::size_t i = 0; i < k; ++i) result.quasi[support[i]] = reduced.physical[i];
  result.physical = result.quasi;
  std::vector<double> fr = apply_reduced(reduced.physical);
  double res_sq = off_sq;
  for (std::size_t i = 0; i < k; ++i) {
    const double diff = fr[i] - b_r[i];
    res_sq += diff * diff;
  }
  result.residual = std::sqrt(res_sq);
  return result;
}

// ---------------------------------------------------------------------------
// Stabilizer observables
// ---------------------------------------------------------------------------

// <Z_(i-1) X_i Z_(i+1)> from outcomes of a setting that measures qubit i in
// the X basis (edge generators drop the missing neighbour). Accepts any
// real-valued vector summing to 1, so quasi-probabilities work unclipped.
inline double stabilizer_expectation(std::span<const double> probs,
                                     const MeasurementSetting& setting, int qubit) {
  const int n = setting.qubits();
  if (qubit < 0 || qubit >= n)
    throw ContractError("generator qubit index outside the register");
  if (probs.size() != (std::size_t{1} << n))
    throw ContractError("distribution length does not match the setting");
  if (setting.basis[static_cast<std::size_t>(qubit)] != MeasBasis::X)
    throw ContractError("setting mismatch: qubit " + std::to_string(qubit) +
                        " is not measured in the X basis");
  std::uint32_t mask = 1u << qubit;
  for (int d : {-1, 1}) {
    const int j = qubit + d;
    if (j < 0 || j >= n) continue;
    if (setting.basis[static_cast<std::size_t>(j)] != MeasBasis::Z)
      throw ContractError("setting mismatch: neighbour qubit " + std::to_string(j) +
                          " is not measured in the Z basis");
    mask |= 1u << j;
  }
  double acc = 0.0;
  for (std::size_t sigma = 0; sigma < probs.size(); ++sigma)
    acc += parity_u32(static_cast<std::uint32_t>(sigma) & mask) ? -probs[sigma]
                                                                : probs[sigma];
  return acc;
}

inline double stabilizer_expectation(const CountsTable& counts,
                                     const MeasurementSetting& setting, int qubit) {
  return stabilizer_expectation(counts.frequencies(), setting, qubit);
}

// Mean of the n generator expectations; the even-X setting serves the
// even-indexed generators, the odd-X setting the rest. At n = 1 only the
// even-X distribution is needed.
inline double graph_fidelity_estimate(std::span<const double> x_even_dist,
                                      std::span<const double> x_odd_dist, int n) {
  if (n < 1) throw ContractError("graph fidelity needs at least one qubit");
  const MeasurementSetting even = MeasurementSetting::alternating(n, true);
  const MeasurementSetting odd = MeasurementSetting::alternating(n, false);
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const bool even_generator = (i % 2 == 0);
    const auto& dist = even_generator ? x_even_dist : x_odd_dist;
    if (dist.empty())
      throw ContractError(std::string("missing distribution for the ") +
                          (even_generator ? "even" : "odd") + "-X setting");
    acc += stabilizer_expectation(dist, even_generator ? even : odd, i);
  }
  return acc / static_cast<double>(n);
}

}  // namespace bfa
