#include <catch2/catch_amalgamated.hpp>

#include "bfa/mitigate.hpp"

#include "bfa/example_models.hpp"
#include "bfa/wht.hpp"

#include "test_support.hpp"

using bfa::Model;
using bfa::ResponseMatrix;
using bfa::SyndromeDistribution;
using bfa::TpnModel;

TEST_CASE("simplex projection agrees with the bisection oracle") {
  bfa::Rng rng(401);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<double> v(8);
    for (double& x : v) x = rng.next_unit() * 4.0 - 2.0;
    const auto fast = bfa::simplex_project(v);
    const auto slow = oracle::bisect_simplex_project(v);
    REQUIRE(oracle::max_abs_diff(fast, slow) < 1e-10);
    double sum = 0.0;
    for (double x : fast) {
      CHECK(x >= 0.0);
      sum += x;
    }
    CHECK(sum == Catch::Approx(1.0).margin(1e-9));
  }
}

TEST_CASE("simplex projection is the nearest simplex point") {
  bfa::Rng rng(402);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> v(6);
    for (double& x : v) x = rng.next_unit() * 3.0 - 1.5;
    const auto proj = bfa::simplex_project(v);
    double best = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i)
      best += (proj[i] - v[i]) * (proj[i] - v[i]);
    for (int probe = 0; probe < 100; ++probe) {
      const auto candidate = oracle::random_distribution(v.size(), rng);
      double dist = 0.0;
      for (std::size_t i = 0; i < v.size(); ++i)
        dist += (candidate[i] - v[i]) * (candidate[i] - v[i]);
      REQUIRE(dist >= best - 1e-9);
    }
  }
}

TEST_CASE("inverse mitigation with the identity model returns the input") {
  bfa::Rng rng(403);
  const auto p = oracle::random_distribution(8, rng);
  const auto res = bfa::mitigate_inverse(p, Model(ResponseMatrix::identity(3)));
  CHECK(oracle::max_abs_diff(res.quasi, p) < 1e-12);
  CHECK(res.residual < 1e-12);
}

TEST_CASE("inverse mitigation recovers the GHZ state from the expected noisy vector") {
  const auto truth = bfa::symmetrise(bfa::example4q_response());
  const auto noisy = bfa::xor_convolve(truth.p_tilde(), bfa::ghz_distribution(4));
  const auto res = bfa::mitigate_inverse(noisy, Model(truth));
  CHECK(res.physical[0b0000] == Catch::Approx(0.5).margin(1e-9));
  CHECK(res.physical[0b1111] == Catch::Approx(0.5).margin(1e-9));
  for (std::uint32_t sigma = 1; sigma < 15; ++sigma)
    CHECK(res.physical[sigma] == Catch::Approx(0.0).margin(1e-9));
}

TEST_CASE("inverse mitigation round trips random vectors through the channel") {
  bfa::Rng rng(404);
  for (int n = 1; n <= 8; ++n) {
    const auto d = oracle::random_syndrome(n, rng);
    const auto v = oracle::random_distribution(d.dim(), rng);
    const auto observed = bfa::xor_convolve(d.p_tilde(), v);
    const auto res = bfa::mitigate_inverse(observed, Model(d));
    REQUIRE(oracle::max_abs_diff(res.quasi, v) < 1e-8);
  }
}

TEST_CASE("dense and syndrome inverse routes agree") {
  bfa::Rng rng(405);
  const auto d = oracle::random_syndrome(4, rng);
  const auto p = oracle::random_distribution(16, rng);
  const auto via_syndrome = bfa::mitigate_inverse(p, Model(d));
  const auto via_dense = bfa::mitigate_inverse(p, Model(bfa::densify(d)));
  CHECK(oracle::max_abs_diff(via_syndrome.quasi, via_dense.quasi) < 1e-9);
}

TEST_CASE("tpn inverse matches the dense inverse of its expansion") {
  bfa::Rng rng(406);
  const TpnModel t({{0.02, 0.09}, {0.04, 0.06}, {0.01, 0.12}});
  const auto p = oracle::random_distribution(8, rng);
  const auto via_tpn = bfa::mitigate_inverse(p, Model(t));
  const auto via_dense = bfa::mitigate_inverse(p, Model(bfa::densify(t)));
  CHECK(oracle::max_abs_diff(via_tpn.quasi, via_dense.quasi) < 1e-10);
}

TEST_CASE("grouped inverse matches its syndrome expansion") {
  const auto d3 = bfa::symmetrise(bfa::example4q_factor_q3());
  const auto d21 = bfa::symmetrise(bfa::example4q_factor_q21());
  const auto d0 = bfa::symmetrise(bfa::example4q_factor_q0());
  const bfa::GroupedModel grouped(4, {{{3}, d3}, {{1, 2}, d21}, {{0}, d0}});
  bfa::Rng rng(407);
  const auto p = oracle::random_distribution(16, rng);
  const auto via_grouped = bfa::mitigate_inverse(p, Model(grouped));
  const auto via_syndrome = bfa::mitigate_inverse(p, Model(bfa::to_syndrome(grouped)));
  CHECK(oracle::max_abs_diff(via_grouped.quasi, via_syndrome.quasi) < 1e-12);
}

TEST_CASE("inverse mitigation reports structured failures") {
  const SyndromeDistribution coin(1, {0.5, 0.5});
  std::vector<double> p{0.6, 0.4};
  CHECK_THROWS_AS(bfa::mitigate_inverse(p, Model(coin)), bfa::NearSingularError);

  const TpnModel dead({{0.5, 0.5}});
  CHECK_THROWS_AS(bfa::mitigate_inverse(p, Model(dead)), bfa::NearSingularError);

  // all columns identical: rank one, hopelessly ill-conditioned
  const ResponseMatrix flat(1, {0.5, 0.5, 0.5, 0.5});
  CHECK_THROWS_AS(bfa::mitigate_inverse(p, Model(flat)), bfa::IllConditionedError);
}

TEST_CASE("quasi solutions push forward to the observed vector") {
  bfa::Rng rng(408);
  const auto d = oracle::random_syndrome(5, rng);
  const auto observed = oracle::random_distribution(d.dim(), rng);
  const auto res = bfa::mitigate_inverse(observed, Model(d));
  const auto forward = bfa::xor_convolve(d.p_tilde(), res.quasi);
  CHECK(oracle::max_abs_diff(forward, observed) < 1e-8);
}

TEST_CASE("lsq with the identity model returns the observation") {
  bfa::Rng rng(409);
  const auto p = oracle::random_distribution(8, rng);
  const auto res = bfa::mitigate_lsq(p, Model(ResponseMatrix::identity(3)));
  CHECK(res.converged);
  CHECK(oracle::max_abs_diff(res.physical, p) < 1e-7);
  CHECK(res.residual < 1e-7);
}

TEST_CASE("lsq agrees with the inverse when the quasi solution is physical") {
  bfa::Rng rng(410);
  const auto d = oracle::random_syndrome(3, rng);
  const auto v = oracle::random_distribution(8, rng);
  const auto observed = bfa::xor_convolve(d.p_tilde(), v);
  const auto inv = bfa::mitigate_inverse(observed, Model(d));
  bool interior = true;
  for (double x : inv.quasi)
    if (x < 0.0) interior = false;
  REQUIRE(interior);  // exact forward data keeps the inverse inside the simplex
  const auto lsq = bfa::mitigate_lsq(observed, Model(d));
  CHECK(oracle::max_abs_diff(lsq.physical, inv.physical) < 1e-4);
}

TEST_CASE("lsq matches the exact KKT oracle on small instances") {
  bfa::Rng rng(411);
  for (int rep = 0; rep < 10; ++rep) {
    const auto m = oracle::random_response_matrix(2, rng);
    // observations that need not be reachable: random noisy vector
    auto observed = oracle::random_distribution(4, rng);
    const Eigen::MatrixXd a = oracle::to_eigen(m);
    const Eigen::VectorXd b =
        Eigen::Map<const Eigen::VectorXd>(observed.data(), 4);
    const auto expected = oracle::kkt_simplex_lsq(a, b);
    const double expected_residual =
        (b - a * Eigen::Map<const Eigen::VectorXd>(expected.data(), 4)).norm();
    bfa::LsqOptions opt;
    opt.tol = 1e-12;
    opt.max_iter = 200000;
    const auto res = bfa::mitigate_lsq(observed, Model(m), opt);
    REQUIRE(res.residual == Catch::Approx(expected_residual).margin(1e-6));
  }
}

TEST_CASE("lsq residual never exceeds the projected-inverse residual") {
  bfa::Rng rng(412);
  const auto d = oracle::random_syndrome(4, rng);
  const auto observed = oracle::random_distribution(16, rng);
  const auto inv = bfa::mitigate_inverse(observed, Model(d));
  const auto lsq = bfa::mitigate_lsq(observed, Model(d));
  CHECK(lsq.residual <= inv.residual + 1e-8);
}

TEST_CASE("lsq residual decreases monotonically") {
  bfa::Rng rng(413);
  const auto m = oracle::random_response_matrix(3, rng);
  const auto observed = oracle::random_distribution(8, rng);
  std::vector<double> trace;
  bfa::LsqOptions opt;
  opt.residual_trace = &trace;
  bfa::mitigate_lsq(observed, Model(m), opt);
  REQUIRE(trace.size() >= 2);
  for (std::size_t i = 1; i < trace.size(); ++i)
    REQUIRE(trace[i] <= trace[i - 1] + 1e-12);
}

TEST_CASE("lsq flags non-convergence but still returns a result") {
  bfa::Rng rng(414);
  const auto m = oracle::random_response_matrix(3, rng);
  auto observed = oracle::random_distribution(8, rng);
  bfa::LsqOptions opt;
  opt.tol = 1e-16;
  opt.max_iter = 1;
  const auto res = bfa::mitigate_lsq(observed, Model(m), opt);
  CHECK_FALSE(res.converged);
  CHECK(res.iterations == 1);
  CHECK(res.last_change >= 0.0);
  CHECK(res.physical.size() == 8);
}

TEST_CASE("reduced lsq solves the GHZ example on its 8-outcome support") {
  const auto truth = bfa::symmetrise(bfa::example4q_response());
  const auto noisy = bfa::xor_convolve(truth.p_tilde(), bfa::ghz_distribution(4));
  const auto support = bfa::example4q_ghz_support();
  const auto res = bfa::mitigate_lsq_reduced(noisy, truth, support);
  CHECK(res.converged);
  CHECK(res.physical[0b0000] == Catch::Approx(0.5).margin(1e-6));
  CHECK(res.physical[0b1111] == Catch::Approx(0.5).margin(1e-6));
  for (std::uint32_t sigma = 1; sigma < 15; ++sigma)
    CHECK(std::abs(res.physical[sigma]) < 1e-6);
  // outcomes off the support are pinned to zero
  CHECK(res.physical[0b0010] == 0.0);
  CHECK(res.quasi[0b0100] == 0.0);
}

TEST_CASE("reduced lsq with full support matches plain lsq") {
  bfa::Rng rng(415);
  const auto d = oracle::random_syndrome(3, rng);
  const auto observed = oracle::random_distribution(8, rng);
  std::vector<std::uint32_t> everything(8);
  for (std::uint32_t i = 0; i < 8; ++i) everything[i] = i;
  const auto reduced = bfa::mitigate_lsq_reduced(observed, d, everything);
  const auto plain = bfa::mitigate_lsq(observed, Model(d));
  CHECK(oracle::max_abs_diff(reduced.physical, plain.physical) < 1e-9);
  CHECK(reduced.residual == Catch::Approx(plain.residual).margin(1e-9));
}

TEST_CASE("reduced lsq rejects supports that are not closed") {
  const auto truth = bfa::symmetrise(bfa::example4q_response());
  std::vector<double> observed(16, 0.0);
  observed[0] = 1.0;
  try {
    bfa::mitigate_lsq_reduced(observed, truth, {0b0000});
    FAIL("expected SupportNotClosedError");
  } catch (const bfa::SupportNotClosedError& e) {
    CHECK(e.syndrome() == 0b0001);
    CHECK(e.outcome() == 0b0000);
  }
}

TEST_CASE("stabilizer expectations on reference distributions") {
  const int n = 4;
  const auto even = bfa::graph_state_distribution(
      n, bfa::MeasurementSetting::alternating(n, true));
  CHECK(bfa::stabilizer_expectation(even, bfa::MeasurementSetting::alternating(n, true),
                                    0) == Catch::Approx(1.0).margin(1e-12));
  const std::vector<double> uniform(16, 1.0 / 16.0);
  CHECK(bfa::stabilizer_expectation(uniform,
                                    bfa::MeasurementSetting::alternating(n, true), 2) ==
        Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("stabilizer expectation equals the brute-force sum on noisy data") {
  bfa::Rng rng(416);
  const int n = 3;
  const auto setting = bfa::MeasurementSetting::alternating(n, true);
  const auto ideal = bfa::graph_state_distribution(n, setting);
  const auto d = oracle::random_syndrome(n, rng);
  const auto noisy = bfa::xor_convolve(d.p_tilde(), ideal);
  const double value = bfa::stabilizer_expectation(noisy, setting, 0);
  double expected = 0.0;
  for (std::uint32_t sigma = 0; sigma < 8; ++sigma) {
    const int bits = ((sigma >> 0) & 1) + ((sigma >> 1) & 1);  // X_0 Z_1
    expected += (bits % 2 == 0 ? 1.0 : -1.0) * noisy[sigma];
  }
  CHECK(value == Catch::Approx(expected).margin(1e-12));
}

TEST_CASE("stabilizer expectation rejects mismatched settings") {
  const std::vector<double> uniform(16, 1.0 / 16.0);
  const auto setting = bfa::MeasurementSetting::alternating(4, true);
  CHECK_THROWS_AS(bfa::stabilizer_expectation(uniform, setting, 1),
                  bfa::ContractError);  // qubit 1 is Z-measured here
  const auto all_x = [] {
    bfa::MeasurementSetting s;
    s.basis.assign(4, bfa::MeasBasis::X);
    return s;
  }();
  CHECK_THROWS_AS(bfa::stabilizer_expectation(uniform, all_x, 1),
                  bfa::ContractError);  // neighbours must be Z-measured
}

TEST_CASE("graph fidelity estimate on noiseless inputs is exactly one") {
  for (int n = 2; n <= 6; ++n) {
    const auto even = bfa::graph_state_distribution(
        n, bfa::MeasurementSetting::alternating(n, true));
    const auto odd = bfa::graph_state_distribution(
        n, bfa::MeasurementSetting::alternating(n, false));
    CHECK(bfa::graph_fidelity_estimate(even, odd, n) ==
          Catch::Approx(1.0).margin(1e-12));
  }
}

TEST_CASE("graph fidelity at n = 1 reduces to the X expectation") {
  // |+> measured in X: deterministic outcome 0
  const std::vector<double> plus_in_x{1.0, 0.0};
  CHECK(bfa::graph_fidelity_estimate(plus_in_x, {}, 1) ==
        Catch::Approx(1.0).margin(1e-12));
  const std::vector<double> uniform{0.5, 0.5};
  CHECK(bfa::graph_fidelity_estimate(uniform, {}, 1) ==
        Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("graph fidelity requires the settings it needs") {
  const std::vector<double> even(16, 1.0 / 16.0);
  CHECK_THROWS_AS(bfa::graph_fidelity_estimate(even, {}, 4), bfa::ContractError);
}

TEST_CASE("noisy graph fidelity improves under exact mitigation") {
  bfa::Rng rng(417);
  const int n = 4;
  const auto d = oracle::random_syndrome(n, rng);
  const auto even = bfa::graph_state_distribution(
      n, bfa::MeasurementSetting::alternating(n, true));
  const auto odd = bfa::graph_state_distribution(
      n, bfa::MeasurementSetting::alternating(n, false));
  const auto noisy_even = bfa::xor_convolve(d.p_tilde(), even);
  const auto noisy_odd = bfa::xor_convolve(d.p_tilde(), odd);
  const double raw = bfa::graph_fidelity_estimate(noisy_even, noisy_odd, n);
  const auto fixed_even = bfa::mitigate_inverse(noisy_even, Model(d)).quasi;
  const auto fixed_odd = bfa::mitigate_inverse(noisy_odd, Model(d)).quasi;
  const double mitigated = bfa::graph_fidelity_estimate(fixed_even, fixed_odd, n);
  CHECK(raw < 1.0);
  CHECK(mitigated == Catch::Approx(1.0).margin(1e-8));
}
