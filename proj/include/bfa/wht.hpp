#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "bfa/errors.hpp"
#include "bfa/models.hpp"

namespace bfa {

// Minimum eigenvalue magnitude accepted by the analytic inverse. A readout
// channel whose symmetrised spectrum touches zero (some marginal error rate
// at 1/2) carries no invertible information; erroring out beats silently
// pseudo-inverting a broken calibration.
inline constexpr double kEigenvalueFloor = 1e-8;

namespace detail {

inline void check_power_of_two(std::size_t len, const char* what) {
  if (len == 0 || !std::has_single_bit(len))
    throw ContractError(std::string(what) + ": length " + std::to_string(len) +
                        " is not a power of two");
}

// In-place butterfly without normalisation: v <- W v with W_ij = (-1)^(i.j).
inline void walsh_unnormalised(std::span<double> v) {
  check_power_of_two(v.size(), "walsh transform");
  for (std::size_t h = 1; h < v.size(); h <<= 1)
    for (std::size_t block = 0; block < v.size(); block += h << 1)
      for (std::size_t i = block; i < block + h; ++i) {
        const double a = v[i];
        const double b = v[i + h];
        v[i] = a + b;
        v[i + h] = a - b;
      }
}

}  // namespace detail

// Normalised fast Walsh-Hadamard transform, H = (1/sqrt 2)[[1,1],[1,-1]]
// applied per qubit. Involutive: fwht(fwht(v)) == v.
inline void fwht(std::span<double> v) {
  detail::walsh_unnormalised(v);
  const double scale = 1.0 / std::sqrt(static_cast<double>(v.size()));
  for (double& x : v) x *= scale;
}

inline std::vector<double> fwht_copy(std::vector<double> v) {
  fwht(std::span<double>(v));
  return v;
}

// Eigenvalues of the symmetrised response matrix induced by d. The
// eigenvectors are the Walsh characters, so lambda = sqrt(2^n) H^(x)n p_tilde,
// i.e. lambda_i = sum_s p_tilde[s] (-1)^(i.s). lambda_0 is the total mass, 1.
struct SpectrumVector {
  int n = 0;
  std::vector<double> lambda;
};

inline SpectrumVector eigenvalues(const SyndromeDistribution& d) {
  std::vector<double> lambda = d.p_tilde();
  detail::walsh_unnormalised(lambda);
  return SpectrumVector{d.qubits(), std::move(lambda)};
}

// Coefficients of the inverse in the same X-operator basis as the model
// itself: M^-1 = sum_s q_tilde[s] X^(s) with
// q_tilde = (1/sqrt(2^n)) H^(x)n lambda^-1. Entries may be negative.
struct InverseCoefficients {
  int n = 0;
  std::vector<double> q_tilde;
};

inline InverseCoefficients analytic_inverse(const SyndromeDistribution& d,
                                            double eigenvalue_floor = kEigenvalueFloor,
                                            bool clamp = false) {
  SpectrumVector spec = eigenvalues(d);
  std::vector<double>& q = spec.lambda;
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (std::abs(q[i]) < eigenvalue_floor) {
      if (!clamp) throw NearSingularError(i, std::abs(q[i]));
      q[i] = std::copysign(eigenvalue_floor, q[i] == 0.0 ? 1.0 : q[i]);
    }
    q[i] = 1.0 / q[i];
  }
  detail::walsh_unnormalised(q);
  const double inv_dim = 1.0 / static_cast<double>(q.size());
  for (double& x : q) x *= inv_dim;
  return InverseCoefficients{d.qubits(), std::move(q)};
}

// out[sigma] = sum_s coeffs[s] p[sigma ^ s]; the action of
// sum_s coeffs[s] X^(s) on p. Small inputs use the direct sum, larger ones
// three Walsh transforms (the transform diagonalises XOR convolution).
inline constexpr std::size_t kDirectConvolutionLimit = 64;

inline std::vector<double> xor_convolve_direct(std::span<const double> coeffs,
                                               std::span<const double> p) {
  std::vector<double> out(p.size(), 0.0);
  for (std::size_t s = 0; s < coeffs.size(); ++s) {
    const double c = coeffs[s];
    if (c == 0.0) continue;
    for (std::size_t sigma = 0; sigma < p.size(); ++sigma)
      out[sigma] += c * p[sigma ^ s];
  }
  return out;
}

inline std::vector<double> xor_convolve_fwht(std::span<const double> coeffs,
                                             std::span<const double> p) {
  std::vector<double> a(coeffs.begin(), coeffs.end());
  std::vector<double> b(p.begin(), p.end());
  detail::walsh_unnormalised(a);
  detail::walsh_unnormalised(b);
  for (std::size_t i = 0; i < a.size(); ++i) a[i] *= b[i];
  detail::walsh_unnormalised(a);
  const double inv_dim = 1.0 / static_cast<double>(a.size());
  for (double& x : a) x *= inv_dim;
  return a;
}

inline std::vector<double> xor_convolve(std::span<const double> coeffs,
                                        std::span<const double> p) {
  if (coeffs.size() != p.size())
    throw ContractError("xor convolution length mismatch: " +
                        std::to_string(coeffs.size()) + " vs " +
                        std::to_string(p.size()));
  detail::check_power_of_two(p.size(), "xor convolution");
  return p.size() <= kDirectConvolutionLimit ? xor_convolve_direct(coeffs, p)
                                             : xor_convolve_fwht(coeffs, p);
}

// Deviation of q (*) p_tilde from the delta at zero; a sanity handle for
// checking inverse coefficients against the model they came from.
inline double inverse_residual(const SyndromeDistribution& d,
                               const InverseCoefficients& q) {
  std::vector<double> conv = xor_convolve(q.q_tilde, d.p_tilde());
  conv[0] -= 1.0;
  double worst = 0.0;
  for (double x : conv) worst = std::max(worst, std::abs(x));
  return worst;
}

}  // namespace bfa
