#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>

#include "bfa/errors.hpp"

namespace bfa {

inline double binary_entropy(double p) {
  if (p < 0.0 || p > 1.0)
    throw ContractError("binary entropy argument outside [0, 1]");
  if (p == 0.0 || p == 1.0) return 0.0;
  return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

namespace detail {

inline void check_rate(double p_e) {
  if (!(p_e > 0.0 && p_e < 1.0))
    throw ContractError("error probability must lie in (0, 1)");
}

inline void check_unit_open(double x, const char* what) {
  if (!(x > 0.0 && x < 1.0))
    throw ContractError(std::string(what) + " must lie in (0, 1)");
}

}  // namespace detail

// Smallest k with P(Q > k) <= epsilon for Q ~ Binomial(n, p_e): the maximum
// simultaneous-error weight that must be retained to cover all but an
// epsilon of the error mass. Exact CDF summation via the pmf recurrence.
inline int truncation_weight(int n, double p_e, double epsilon) {
  if (n < 1) throw ContractError("qubit count must be at least 1");
  detail::check_rate(p_e);
  detail::check_unit_open(epsilon, "epsilon");
  double pmf = std::pow(1.0 - p_e, n);
  double cdf = pmf;
  int k = 0;
  const double ratio = p_e / (1.0 - p_e);
  while (cdf < 1.0 - epsilon && k < n) {
    pmf *= static_cast<double>(n - k) / static_cast<double>(k + 1) * ratio;
    ++k;
    cdf += pmf;
  }
  return k;
}

// N = sum_{i<=k} C(n, i) with binary-entropy sandwich bounds
//   2^{nH(k/n)} / sqrt(8 k (1 - k/n))  <=  N  <=  2^{nH(k/n)}
// valid for 0 < k/n <= 1/2. The exact count uses integer arithmetic up to
// n = 64; wider inputs report the bounds only.
struct RetainedOutcomes {
  bool exact = false;
  std::uint64_t count = 0;  // meaningful only when exact
  std::optional<double> lower_bound;
  std::optional<double> upper_bound;
};

inline RetainedOutcomes retained_outcomes(int n, int k) {
  if (n < 1) throw ContractError("qubit count must be at least 1");
  if (k < 0 || k > n)
    throw ContractError("weight k = " + std::to_string(k) + " outside [0, " +
                        std::to_string(n) + "]");
  RetainedOutcomes out;
  if (n <= 64) {
    unsigned __int128 total = 0;
    unsigned __int128 binom = 1;
    bool fits = true;
    for (int i = 0; i <= k; ++i) {
      total += binom;
      if (total > static_cast<unsigned __int128>(UINT64_MAX)) {
        fits = false;
        break;
      }
      binom = binom * static_cast<unsigned>(n - i) / static_cast<unsigned>(i + 1);
    }
    if (fits) {
      out.exact = true;
      out.count = static_cast<std::uint64_t>(total);
    }
  }
  if (k >= 1 && 2 * k <= n) {
    const double ratio = static_cast<double>(k) / static_cast<double>(n);
    const double upper = std::exp2(static_cast<double>(n) * binary_entropy(ratio));
    out.upper_bound = upper;
    out.lower_bound = upper / std::sqrt(8.0 * static_cast<double>(k) * (1.0 - ratio));
  }
  return out;
}

// Normal approximation to the truncation weight with a 0.5 continuity
// correction: k ~ n p_e + sqrt(n p_e (1-p_e)) * PhiBarInv(epsilon) + 0.5.
inline double normal_upper_quantile(double epsilon);

inline double normal_approx_weight(int n, double p_e, double epsilon) {
  if (n < 1) throw ContractError("qubit count must be at least 1");
  detail::check_rate(p_e);
  detail::check_unit_open(epsilon, "epsilon");
  const double variance = static_cast<double>(n) * p_e * (1.0 - p_e);
  return static_cast<double>(n) * p_e +
         std::sqrt(variance) * normal_upper_quantile(epsilon) + 0.5;
}

// Shots needed to estimate an N-outcome distribution to total variation
// accuracy epsilon with failure probability below gamma:
// m > (sqrt(N) + sqrt(2 ln(1/gamma)))^2 / epsilon^2. Natural log.
inline std::uint64_t berend_shot_requirement(double n_outcomes, double epsilon,
                                             double gamma) {
  if (!(n_outcomes >= 1.0)) throw ContractError("outcome count must be at least 1");
  detail::check_unit_open(epsilon, "epsilon");
  detail::check_unit_open(gamma, "gamma");
  const double root = std::sqrt(n_outcomes) + std::sqrt(2.0 * std::log(1.0 / gamma));
  return static_cast<std::uint64_t>(std::ceil(root * root / (epsilon * epsilon)));
}

// E[ tv(p, p_hat) ] <= sqrt(N / m) after m samples.
inline double berend_expectation_bound(double n_outcomes, double m) {
  if (!(n_outcomes >= 1.0) || !(m >= 1.0))
    throw ContractError("outcome and sample counts must be at least 1");
  return std::sqrt(n_outcomes / m);
}

// P[ tv(p, p_hat) > epsilon ] <= exp(-(m/2)(epsilon - sqrt(N/m))^2),
// valid for epsilon >= sqrt(N/m).
inline double berend_concentration_bound(double n_outcomes, double m,
                                         double epsilon) {
  const double expectation = berend_expectation_bound(n_outcomes, m);
  if (epsilon < expectation)
    throw ContractError("concentration bound requires epsilon >= sqrt(N/m)");
  const double t = epsilon - expectation;
  return std::exp(-0.5 * m * t * t);
}

struct ComplexityReport {
  int n = 0;
  double p_e = 0.0;
  double epsilon = 0.0;
  double gamma = 0.0;
  int k = 0;                   // truncation weight
  RetainedOutcomes outcomes;   // N and its entropy bounds
  double normal_approx_k = 0.0;
  double entropy_rate = 0.0;   // n * H(p_e), reported, never gated on
  std::uint64_t m_required = 0;
  double expectation_bound = 0.0;  // sqrt(N / m_required)
};

inline ComplexityReport complexity_report(int n, double p_e, double epsilon,
                                          double gamma) {
  ComplexityReport rep;
  rep.n = n;
  rep.p_e = p_e;
  rep.epsilon = epsilon;
  rep.gamma = gamma;
  rep.k = truncation_weight(n, p_e, epsilon);
  rep.outcomes = retained_outcomes(n, rep.k);
  rep.normal_approx_k = normal_approx_weight(n, p_e, epsilon);
  rep.entropy_rate = static_cast<double>(n) * binary_entropy(p_e);
  const double n_outcomes = rep.outcomes.exact
                                ? static_cast<double>(rep.outcomes.count)
                                : rep.outcomes.upper_bound.value_or(
                                      std::exp2(static_cast<double>(n)));
  rep.m_required = berend_shot_requirement(n_outcomes, epsilon, gamma);
  rep.expectation_bound =
      berend_expectation_bound(n_outcomes, static_cast<double>(rep.m_required));
  return rep;
}

// Wichura's PPND16 rational approximation to the standard normal quantile;
// normal_upper_quantile(eps) = PhiInv(1 - eps).
inline double normal_quantile(double p) {
  detail::check_unit_open(p, "quantile argument");
  const double q = p - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q *
           (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                 6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
               1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
             1.3314166789178437745e2) * r + 3.3871328727963666080e0) /
           (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                 3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
               5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
             4.2313330701600911252e1) * r + 1.0);
  }
  double r = (q < 0.0) ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double value;
  if (r <= 5.0) {
    r -= 1.6;
    value = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                  2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
                3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
              4.63033784615654529590e0) * r + 1.42343711074968357734e0) /
            (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                  1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
              2.05319162663775882187e0) * r + 1.0);
  } else {
    r -= 5.0;
    value = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                  1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
              5.46378491116411436990e0) * r + 6.65790464350110377720e0) /
            (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                  1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
                1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
              5.99832206555887937690e-1) * r + 1.0);
  }
  return (q < 0.0) ? -value : value;
}

inline double normal_upper_quantile(double epsilon) {
  return normal_quantile(1.0 - epsilon);
}

}  // namespace bfa
