#include <catch2/catch_amalgamated.hpp>

#include "bfa/simulate.hpp"

#include "bfa/example_models.hpp"
#include "bfa/metrics.hpp"
#include "bfa/mitigate.hpp"
#include "bfa/wht.hpp"

#include "test_support.hpp"

using bfa::BitString;
using bfa::CountsTable;
using bfa::MeasurementSetting;
using bfa::ResponseMatrix;
using bfa::ShotStream;

TEST_CASE("identity channel never corrupts") {
  const auto id = ResponseMatrix::identity(3);
  ShotStream shots(1, "corrupt/identity");
  for (std::uint32_t v = 0; v < 8; ++v)
    for (int rep = 0; rep < 50; ++rep)
      CHECK(bfa::corrupt_readout(BitString(v, 3), id, shots).value == v);
}

TEST_CASE("single qubit corruption rate matches the column") {
  const auto m = ResponseMatrix(1, {0.95, 0.05, 0.05, 0.95});
  ShotStream shots(2, "corrupt/single");
  const std::uint64_t reps = 100000;
  std::uint64_t flipped = 0;
  for (std::uint64_t i = 0; i < reps; ++i)
    if (bfa::corrupt_readout(BitString(1, 1), m, shots).value == 0) ++flipped;
  CHECK(oracle::within_binomial(static_cast<double>(flipped),
                                static_cast<double>(reps), 0.05));
}

TEST_CASE("channel output frequencies match the selected column") {
  const auto m = bfa::example4q_response();
  ShotStream shots(3, "corrupt/example");
  const std::uint64_t reps = 1000000;
  std::vector<std::uint64_t> hist(16, 0);
  for (std::uint64_t i = 0; i < reps; ++i)
    ++hist[bfa::corrupt_readout(BitString(0, 4), m, shots).value];
  const auto col = m.column(0);
  for (std::size_t sigma = 0; sigma < 16; ++sigma)
    CHECK(oracle::within_binomial(static_cast<double>(hist[sigma]),
                                  static_cast<double>(reps), col[sigma]));
}

TEST_CASE("bfa shots are transparent without readout errors") {
  const auto id = ResponseMatrix::identity(4);
  ShotStream shots(4, "bfa/identity");
  for (std::uint32_t v : {0u, 5u, 15u})
    for (int rep = 0; rep < 100; ++rep)
      CHECK(bfa::bfa_shot(BitString(v, 4), id, shots).value == v);
}

TEST_CASE("bfa channel matches the symmetrised closed form") {
  const auto m = bfa::example4q_response();
  const auto expected =
      bfa::xor_convolve(bfa::symmetrise(m).p_tilde(), bfa::ghz_distribution(4));
  // sample GHZ inputs through the bfa channel
  ShotStream shots(5, "bfa/ghz");
  const std::uint64_t reps = 1000000;
  const auto ghz = bfa::ghz_distribution(4);
  std::vector<std::uint64_t> hist(16, 0);
  for (std::uint64_t i = 0; i < reps; ++i) {
    const std::uint32_t z = bfa::detail::sample_index(ghz, shots.unit());
    ++hist[bfa::bfa_shot(BitString(z, 4), m, shots).value];
  }
  for (std::size_t sigma = 0; sigma < 16; ++sigma)
    CHECK(oracle::within_binomial(static_cast<double>(hist[sigma]),
                                  static_cast<double>(reps), expected[sigma]));
}

TEST_CASE("expected noisy GHZ distribution under the example channel") {
  const auto noisy =
      bfa::xor_convolve(bfa::symmetrise(bfa::example4q_response()).p_tilde(),
                        bfa::ghz_distribution(4));
  CHECK(noisy[0b0000] == Catch::Approx(0.40215).margin(5e-6));
  CHECK(noisy[0b0001] == Catch::Approx(0.03235).margin(5e-6));
  CHECK(noisy[0b0110] == Catch::Approx(0.04135).margin(5e-6));
  CHECK(noisy[0b0111] == Catch::Approx(0.02415).margin(5e-6));
  CHECK(noisy[0b1000] == Catch::Approx(0.02415).margin(5e-6));
  CHECK(noisy[0b1001] == Catch::Approx(0.04135).margin(5e-6));
  CHECK(noisy[0b1110] == Catch::Approx(0.03235).margin(5e-6));
  CHECK(noisy[0b1111] == Catch::Approx(0.40215).margin(5e-6));
}

TEST_CASE("ghz distribution shape") {
  const auto p4 = bfa::ghz_distribution(4);
  CHECK(p4[0] == 0.5);
  CHECK(p4[15] == 0.5);
  double sum = 0.0;
  for (double x : p4) sum += x;
  CHECK(sum == 1.0);
  const auto p1 = bfa::ghz_distribution(1);
  CHECK(p1[0] == 0.5);
  CHECK(p1[1] == 0.5);
}

TEST_CASE("graph state distributions are normalised and match the oracle") {
  for (int n = 2; n <= 5; ++n) {
    for (bool x_on_even : {true, false}) {
      const auto setting = MeasurementSetting::alternating(n, x_on_even);
      const auto dist = bfa::graph_state_distribution(n, setting);
      double sum = 0.0;
      for (double x : dist) sum += x;
      CHECK(sum == Catch::Approx(1.0).margin(1e-12));
      const auto expected = oracle::graph_state_oracle(n, setting);
      REQUIRE(oracle::max_abs_diff(dist, expected) < 1e-12);
    }
  }
}

TEST_CASE("graph state generators all have unit expectation") {
  for (int n = 2; n <= 6; ++n) {
    const auto even = bfa::graph_state_distribution(
        n, MeasurementSetting::alternating(n, true));
    const auto odd = bfa::graph_state_distribution(
        n, MeasurementSetting::alternating(n, false));
    for (int i = 0; i < n; ++i) {
      const bool is_even = (i % 2 == 0);
      const double g = bfa::stabilizer_expectation(
          is_even ? even : odd, MeasurementSetting::alternating(n, is_even), i);
      REQUIRE(g == Catch::Approx(1.0).margin(1e-12));
    }
  }
}

TEST_CASE("graph state support respects the stabilizer parities") {
  // any outcome with nonzero probability satisfies the parity constraint of
  // every generator contained in the setting
  for (int n = 3; n <= 6; ++n) {
    const auto setting = MeasurementSetting::alternating(n, true);
    const auto dist = bfa::graph_state_distribution(n, setting);
    for (std::uint32_t sigma = 0; sigma < dist.size(); ++sigma) {
      if (dist[sigma] < 1e-12) continue;
      for (int i = 0; i < n; i += 2) {
        std::uint32_t mask = 1u << i;
        if (i - 1 >= 0) mask |= 1u << (i - 1);
        if (i + 1 < n) mask |= 1u << (i + 1);
        REQUIRE(bfa::parity_u32(sigma & mask) == 0);
      }
    }
  }
}

TEST_CASE("graph state size limits") {
  CHECK_THROWS_AS(
      bfa::graph_state_distribution(1, MeasurementSetting::alternating(1, true)),
      bfa::ContractError);
  CHECK_THROWS_AS(
      bfa::graph_state_distribution(17, MeasurementSetting::alternating(17, true)),
      bfa::ContractError);
}

TEST_CASE("sampling a point distribution puts every shot there") {
  std::vector<double> dist(8, 0.0);
  dist[5] = 1.0;
  ShotStream shots(6, "sample/point");
  const CountsTable t = bfa::sample_counts(dist, 1000, shots);
  CHECK(t.shots == 1000);
  CHECK(t.counts.at(5) == 1000);
  CHECK(t.counts.size() == 1);
}

TEST_CASE("sampling the expected noisy GHZ distribution") {
  const auto noisy =
      bfa::xor_convolve(bfa::symmetrise(bfa::example4q_response()).p_tilde(),
                        bfa::ghz_distribution(4));
  ShotStream shots(7, "sample/ghz");
  const CountsTable t = bfa::sample_counts(noisy, 10000, shots);
  CHECK(t.shots == 10000);
  for (std::uint32_t sigma = 0; sigma < 16; ++sigma) {
    const auto it = t.counts.find(sigma);
    const double count = it == t.counts.end() ? 0.0 : static_cast<double>(it->second);
    CHECK(oracle::within_binomial(count, 10000.0, noisy[sigma]));
  }
}

TEST_CASE("shot streams are named, counted and reproducible") {
  ShotStream a(42, "stream/a");
  ShotStream b(42, "stream/a");
  ShotStream c(42, "stream/b");
  CHECK(a.u64() == b.u64());
  CHECK(a.unit() == b.unit());
  CHECK(a.bits(5) == b.bits(5));
  CHECK(a.draws() == 3);
  CHECK(a.descriptor() == "stream/a");
  CHECK(a.seed() == 42);
  // a different descriptor is a different stream
  ShotStream a2(42, "stream/a");
  CHECK(c.u64() != a2.u64());
}

TEST_CASE("fixed seeds reproduce identical counts") {
  bfa::Rng rng(301);
  const auto dist = oracle::random_distribution(16, rng);
  ShotStream a(42, "sample/repro");
  ShotStream b(42, "sample/repro");
  const CountsTable ta = bfa::sample_counts(dist, 5000, a);
  const CountsTable tb = bfa::sample_counts(dist, 5000, b);
  CHECK(ta.counts == tb.counts);
  ShotStream c(43, "sample/repro");
  CHECK(bfa::sample_counts(dist, 5000, c).counts != ta.counts);
}

TEST_CASE("sharded sampling is independent of the worker count") {
  bfa::Rng rng(302);
  const auto dist = oracle::random_distribution(8, rng);
  const auto reference =
      bfa::sample_counts_sharded(dist, 20000, 7, "shard-test", 1024, 1);
  for (int workers : {2, 3, 8}) {
    const auto other =
        bfa::sample_counts_sharded(dist, 20000, 7, "shard-test", 1024, workers);
    CHECK(other.counts == reference.counts);
    CHECK(other.shots == 20000);
  }
}

TEST_CASE("sampling validates its inputs") {
  std::vector<double> not_a_dist{0.2, 0.2};
  ShotStream shots(8, "sample/invalid");
  CHECK_THROWS_AS(bfa::sample_counts(not_a_dist, 10, shots), bfa::ContractError);
  std::vector<double> negative{1.2, -0.2};
  CHECK_THROWS_AS(bfa::sample_counts(negative, 10, shots), bfa::ContractError);
  std::vector<double> ok{0.5, 0.5};
  CHECK_THROWS_AS(bfa::sample_counts(ok, 0, shots), bfa::ContractError);
}

TEST_CASE("bfa channel estimate reaches high fidelity with the symmetrised truth") {
  bfa::Rng rng(303);
  const auto m = oracle::random_response_matrix(3, rng);
  const auto target = bfa::densify(bfa::symmetrise(m));
  ShotStream shots(9, "bfa/channel-fidelity");
  std::vector<double> freq(8, 0.0);
  const std::uint64_t reps = 1000000;
  for (std::uint64_t i = 0; i < reps; ++i)
    freq[bfa::bfa_shot(BitString(0, 3), m, shots).value] += 1.0;
  for (double& f : freq) f /= static_cast<double>(reps);
  const auto estimated = bfa::densify(bfa::SyndromeDistribution(3, freq));
  CHECK(bfa::matrix_fidelity(estimated, target) >= 0.999);
}
