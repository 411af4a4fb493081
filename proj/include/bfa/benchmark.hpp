#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "bfa/calibrate.hpp"
#include "bfa/example_models.hpp"
#include "bfa/io.hpp"
#include "bfa/metrics.hpp"
#include "bfa/mitigate.hpp"
#include "bfa/models.hpp"
#include "bfa/rng.hpp"
#include "bfa/simulate.hpp"

namespace bfa {

// Default seed for every randomised entry point that is not given one.
inline constexpr std::uint64_t kDefaultSeed = 0xB17F11B5ull;

enum class ModelSource { SyntheticTpn, File, Example4q };

// Where the experiment's true channel comes from. Synthetic models draw
// per-qubit rates uniformly from the configured ranges (defaults mimic the
// asymmetry of transmon readout); any source can be correlation-boosted.
struct ModelSpec {
  ModelSource source = ModelSource::SyntheticTpn;
  std::string path;  // used by ModelSource::File
  double p10_min = 0.01, p10_max = 0.04;
  double p01_min = 0.03, p01_max = 0.10;
  double gamma = 1.0;
};

inline ResponseMatrix make_true_model(const ModelSpec& spec, int n,
                                      std::uint64_t seed) {
  ResponseMatrix base = [&] {
    switch (spec.source) {
      case ModelSource::Example4q:
        return example4q_response();
      case ModelSource::File:
        return densify(read_model(spec.path));
      case ModelSource::SyntheticTpn:
      default: {
        Rng rng(Rng::derive_seed(seed, fnv1a64("true-model/n=" + std::to_string(n))));
        std::vector<QubitErrorRates> rates(static_cast<std::size_t>(n));
        for (auto& r : rates) {
          r.p10 = spec.p10_min + rng.next_unit() * (spec.p10_max - spec.p10_min);
          r.p01 = spec.p01_min + rng.next_unit() * (spec.p01_max - spec.p01_min);
        }
        return densify(TpnModel(std::move(rates)));
      }
    }
  }();
  if (spec.source != ModelSource::SyntheticTpn && base.qubits() != n)
    throw ContractError("true model has " + std::to_string(base.qubits()) +
                        " qubits, experiment wants " + std::to_string(n));
  return spec.gamma == 1.0 ? base : boost_correlations(base, spec.gamma);
}

struct ExperimentConfig {
  std::string experiment;  // "convergence" | "fixed-budget" | "graph"
  int n = 5;               // convergence; single-n fallback for the others
  int n_min = 0, n_max = 0;
  ModelSpec model;
  std::vector<std::uint64_t> budgets;  // convergence; default 2^8 .. 2^16
  std::uint64_t budget_per_n = 100;    // fixed-budget/graph: budget = this * 2^n
  std::uint64_t measure_shots = 100000;  // graph
  int trials = 50;
  std::uint64_t seed = kDefaultSeed;
  MitigationMethod method = MitigationMethod::Inverse;
  bool use_clipped = false;  // graph observables from physical instead of quasi
  int workers = 1;
};

struct TrialRecord {
  int n = 0;
  std::string model;
  std::uint64_t budget = 0;
  int trial = 0;
  std::uint64_t seed = 0;
  std::string metric;
  double value = 0.0;
};

struct GroupStats {
  int n = 0;
  std::uint64_t budget = 0;
  std::string model;
  double mean = 0.0;
  double p2_5 = 0.0;
  double p97_5 = 0.0;
  std::optional<double> rms_error;  // graph only: vs the exact-mitigation mean
};

struct ExperimentResult {
  std::string experiment;
  std::vector<TrialRecord> records;
  std::vector<GroupStats> groups;

  std::string csv() const {
    std::string out = "experiment,n,model,budget,trial,seed,metric,value\n";
    char buf[512];
    for (const auto& r : records) {
      std::snprintf(buf, sizeof buf, "%s,%d,%s,%llu,%d,%llu,%s,%.17g\n",
                    experiment.c_str(), r.n, r.model.c_str(),
                    static_cast<unsigned long long>(r.budget), r.trial,
                    static_cast<unsigned long long>(r.seed), r.metric.c_str(),
                    r.value);
      out += buf;
    }
    return out;
  }

  json summary_json() const {
    json groups_json = json::array();
    for (const auto& g : groups) {
      json entry{{"n", g.n},     {"budget", g.budget}, {"model", g.model},
                 {"mean", g.mean}, {"p2_5", g.p2_5},   {"p97_5", g.p97_5}};
      if (g.rms_error) entry["rms_error_vs_exact"] = *g.rms_error;
      groups_json.push_back(std::move(entry));
    }
    return json{{"experiment", experiment}, {"groups", std::move(groups_json)}};
  }
};

namespace detail {

inline double percentile(std::vector<double> values, double q) {
  std::sort(values.begin(), values.end());
  if (values.size() == 1) return values[0];
  const double pos = q * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] * (1.0 - frac) + values[hi] * frac;
}

inline double mean(const std::vector<double>& values) {
  double acc = 0.0;
  for (double v : values) acc += v;
  return acc / static_cast<double>(values.size());
}

inline std::uint64_t trial_seed(std::uint64_t base, const std::string& tag) {
  return Rng::derive_seed(base, fnv1a64(tag));
}

// Run tasks [0, count) across `workers` threads with a fixed stride
// assignment; results land in preallocated slots, so the outcome is
// identical for any worker count.
template <typename Fn>
void parallel_for(std::uint64_t count, int workers, Fn&& fn) {
  if (workers <= 1 || count <= 1) {
    for (std::uint64_t i = 0; i < count; ++i) fn(i);
    return;
  }
  const int use = static_cast<int>(
      std::min<std::uint64_t>(static_cast<std::uint64_t>(workers), count));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(use));
  for (int w = 0; w < use; ++w)
    pool.emplace_back([&, w] {
      for (std::uint64_t i = static_cast<std::uint64_t>(w); i < count;
           i += static_cast<std::uint64_t>(use))
        fn(i);
    });
  for (auto& t : pool) t.join();
}

inline const std::vector<std::string>& calibration_model_names() {
  static const std::vector<std::string> names{"full", "tpn", "bfa", "bfa+tpn"};
  return names;
}

// One calibration round against `truth` with a shared budget; returns the
// response-matrix fidelity of each estimated model against its own target
// (the raw channel for full/tpn, the symmetrised channel for the bfa pair).
inline std::array<double, 4> calibration_fidelities(const ResponseMatrix& truth,
                                                    const ResponseMatrix& truth_sym,
                                                    std::uint64_t budget,
                                                    std::uint64_t seed) {
  std::array<double, 4> out{};
  {
    ShotStream shots(seed, "calibrate/full");
    out[0] = matrix_fidelity(
        estimate_full(run_calibration(truth, CalibrationProtocol::Full, budget, shots)),
        truth);
  }
  {
    ShotStream shots(seed, "calibrate/tpn");
    out[1] = matrix_fidelity(
        densify(estimate_tpn(run_calibration(truth, CalibrationProtocol::Tpn, budget, shots))),
        truth);
  }
  {
    ShotStream shots(seed, "calibrate/bfa");
    const CalibrationSet set =
        run_calibration(truth, CalibrationProtocol::Bfa, budget, shots);
    out[2] = matrix_fidelity(densify(estimate_bfa(set)), truth_sym);
    out[3] = matrix_fidelity(densify(estimate_bfa_tpn(set)), truth_sym);
  }
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Calibration convergence: fidelity of each estimated model against its
// target as the shared shot budget sweeps.
// ---------------------------------------------------------------------------

inline ExperimentResult convergence_experiment(ExperimentConfig cfg) {
  cfg.experiment = "convergence";
  if (cfg.trials < 1) throw ContractError("trials must be at least 1");
  if (cfg.budgets.empty())
    for (int k = 8; k <= 16; ++k) cfg.budgets.push_back(std::uint64_t{1} << k);

  const ResponseMatrix truth = make_true_model(cfg.model, cfg.n, cfg.seed);
  const ResponseMatrix truth_sym = densify(symmetrise(truth));
  const auto& names = detail::calibration_model_names();

  const std::uint64_t tasks =
      cfg.budgets.size() * static_cast<std::uint64_t>(cfg.trials);
  std::vector<std::array<double, 4>> values(tasks);
  std::vector<std::uint64_t> seeds(tasks);
  detail::parallel_for(tasks, cfg.workers, [&](std::uint64_t task) {
    const std::size_t bi = task / cfg.trials;
    const int trial = static_cast<int>(task % cfg.trials);
    seeds[task] = detail::trial_seed(
        cfg.seed, "convergence/budget=" + std::to_string(cfg.budgets[bi]) +
                      "/trial=" + std::to_string(trial));
    values[task] =
        detail::calibration_fidelities(truth, truth_sym, cfg.budgets[bi], seeds[task]);
  });

  ExperimentResult result;
  result.experiment = cfg.experiment;
  for (std::size_t bi = 0; bi < cfg.budgets.size(); ++bi) {
    for (std::size_t mi = 0; mi < names.size(); ++mi) {
      std::vector<double> series;
      series.reserve(static_cast<std::size_t>(cfg.trials));
      for (int t = 0; t < cfg.trials; ++t) {
        const std::uint64_t task = bi * cfg.trials + t;
        result.records.push_back({cfg.n, names[mi], cfg.budgets[bi], t, seeds[task],
                                  "F_M", values[task][mi]});
        series.push_back(values[task][mi]);
      }
      result.groups.push_back({cfg.n, cfg.budgets[bi], names[mi],
                               detail::mean(series), detail::percentile(series, 0.025),
                               detail::percentile(series, 0.975), std::nullopt});
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Fixed budget vs system size: one budget_per_n * 2^n point per n.
// ---------------------------------------------------------------------------

inline ExperimentResult fixed_budget_experiment(ExperimentConfig cfg) {
  cfg.experiment = "fixed-budget";
  if (cfg.trials < 1) throw ContractError("trials must be at least 1");
  const int n_lo = cfg.n_min > 0 ? cfg.n_min : cfg.n;
  const int n_hi = cfg.n_max > 0 ? cfg.n_max : cfg.n;
  if (n_lo > n_hi) throw ContractError("empty qubit range");

  const auto& names = detail::calibration_model_names();
  ExperimentResult result;
  result.experiment = cfg.experiment;

  for (int n = n_lo; n <= n_hi; ++n) {
    const ResponseMatrix truth = make_true_model(cfg.model, n, cfg.seed);
    const ResponseMatrix truth_sym = densify(symmetrise(truth));
    const std::uint64_t budget = cfg.budget_per_n << n;

    std::vector<std::array<double, 4>> values(static_cast<std::size_t>(cfg.trials));
    std::vector<std::uint64_t> seeds(static_cast<std::size_t>(cfg.trials));
    detail::parallel_for(static_cast<std::uint64_t>(cfg.trials), cfg.workers,
                         [&](std::uint64_t trial) {
                           seeds[trial] = detail::trial_seed(
                               cfg.seed, "fixed-budget/n=" + std::to_string(n) +
                                             "/trial=" + std::to_string(trial));
                           values[trial] = detail::calibration_fidelities(
                               truth, truth_sym, budget, seeds[trial]);
                         });

    for (std::size_t mi = 0; mi < names.size(); ++mi) {
      std::vector<double> series;
      for (int t = 0; t < cfg.trials; ++t) {
        result.records.push_back({n, names[mi], budget, t,
                                  seeds[static_cast<std::size_t>(t)], "F_M",
                                  values[static_cast<std::size_t>(t)][mi]});
        series.push_back(values[static_cast<std::size_t>(t)][mi]);
      }
      result.groups.push_back({n, budget, names[mi], detail::mean(series),
                               detail::percentile(series, 0.025),
                               detail::percentile(series, 0.975), std::nullopt});
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Graph-state fidelity estimation under six conditions: no mitigation, the
// four calibrated schemes, and mitigation with the exact channel.
// ---------------------------------------------------------------------------

inline const std::vector<std::string>& graph_condition_names() {
  static const std::vector<std::string> names{"none", "full",    "tpn",
                                              "bfa",  "bfa+tpn", "exact"};
  return names;
}

namespace detail {

inline std::vector<double> mitigated_distribution(const std::vector<double>& observed,
                                                  const Model& model,
                                                  MitigationMethod method,
                                                  bool use_clipped) {
  MitigationResult res;
  if (method == MitigationMethod::Lsq) {
    res = mitigate_lsq(observed, model);
  } else {
    // Inverse by default; a starved calibration can leave the estimated
    // dense matrix numerically unusable, in which case fall back to the
    // constrained solver instead of aborting the trial.
    try {
      res = mitigate_inverse(observed, model);
    } catch (const Error&) {
      res = mitigate_lsq(observed, model);
    }
  }
  return use_clipped ? res.physical : res.quasi;
}

struct GraphTrialOutput {
  std::array<double, 6> fidelity{};  // indexed like graph_condition_names()
};

inline GraphTrialOutput run_graph_trial(const ResponseMatrix& truth,
                                        const std::vector<double>& ideal_even,
                                        const std::vector<double>& ideal_odd,
                                        std::uint64_t budget,
                                        std::uint64_t measure_shots,
                                        MitigationMethod method, bool use_clipped,
                                        std::uint64_t seed) {
  const int n = truth.qubits();

  ShotStream cal_full_shots(seed, "calibrate/full");
  const ResponseMatrix est_full = estimate_full(
      run_calibration(truth, CalibrationProtocol::Full, budget, cal_full_shots));
  ShotStream cal_tpn_shots(seed, "calibrate/tpn");
  const TpnModel est_tpn = estimate_tpn(
      run_calibration(truth, CalibrationProtocol::Tpn, budget, cal_tpn_shots));
  ShotStream cal_bfa_shots(seed, "calibrate/bfa");
  const CalibrationSet bfa_set =
      run_calibration(truth, CalibrationProtocol::Bfa, budget, cal_bfa_shots);
  const SyndromeDistribution est_bfa = estimate_bfa(bfa_set);
  const TpnModel est_bfa_tpn = estimate_bfa_tpn(bfa_set);

  // Measurement rounds. The plain channel serves none/full/tpn/exact; the
  // bit-flip averaged channel serves the two bfa schemes.
  std::array<std::vector<double>, 2> plain_freq, bfa_freq;
  for (int si = 0; si < 2; ++si) {
    const auto& ideal = (si == 0) ? ideal_even : ideal_odd;
    const char* setting_tag = (si == 0) ? "even" : "odd";
    {
      CountsTable table(n);
      ShotStream shots(seed, std::string("measure/plain/") + setting_tag);
      for (std::uint64_t i = 0; i < measure_shots; ++i) {
        const std::uint32_t z = sample_index(ideal, shots.unit());
        table.add(corrupt_readout(BitString(z, n), truth, shots).value);
      }
      plain_freq[si] = table.frequencies();
    }
    {
      CountsTable table(n);
      ShotStream shots(seed, std::string("measure/bfa/") + setting_tag);
      for (std::uint64_t i = 0; i < measure_shots; ++i) {
        const std::uint32_t z = sample_index(ideal, shots.unit());
        table.add(bfa_shot(BitString(z, n), truth, shots).value);
      }
      bfa_freq[si] = table.frequencies();
    }
  }

  GraphTrialOutput out;
  const auto estimate = [&](int ci, const std::array<std::vector<double>, 2>& freq,
                            const Model* model) {
    std::array<std::vector<double>, 2> dist;
    for (int si = 0; si < 2; ++si)
      dist[si] = model ? mitigated_distribution(freq[si], *model, method, use_clipped)
                       : freq[si];
    out.fidelity[static_cast<std::size_t>(ci)] =
        graph_fidelity_estimate(dist[0], dist[1], n);
  };

  const Model model_full = est_full;
  const Model model_tpn = est_tpn;
  const Model model_bfa = est_bfa;
  const Model model_bfa_tpn = est_bfa_tpn;
  const Model model_exact = truth;
  estimate(0, plain_freq, nullptr);
  estimate(1, plain_freq, &model_full);
  estimate(2, plain_freq, &model_tpn);
  estimate(3, bfa_freq, &model_bfa);
  estimate(4, bfa_freq, &model_bfa_tpn);
  estimate(5, plain_freq, &model_exact);
  return out;
}

}  // namespace detail

inline ExperimentResult graph_experiment(ExperimentConfig cfg) {
  cfg.experiment = "graph";
  if (cfg.trials < 1) throw ContractError("trials must be at least 1");
  if (cfg.measure_shots < 1) throw ContractError("measurement shots must be at least 1");
  const int n_lo = cfg.n_min > 0 ? cfg.n_min : cfg.n;
  const int n_hi = cfg.n_max > 0 ? cfg.n_max : cfg.n;
  if (n_lo > n_hi) throw ContractError("empty qubit range");

  const auto& names = graph_condition_names();
  ExperimentResult result;
  result.experiment = cfg.experiment;

  for (int n = n_lo; n <= n_hi; ++n) {
    const ResponseMatrix truth = make_true_model(cfg.model, n, cfg.seed);
    const std::vector<double> ideal_even =
        graph_state_distribution(n, MeasurementSetting::alternating(n, true));
    const std::vector<double> ideal_odd =
        graph_state_distribution(n, MeasurementSetting::alternating(n, false));
    const std::uint64_t budget = cfg.budget_per_n << n;

    std::vector<detail::GraphTrialOutput> outputs(static_cast<std::size_t>(cfg.trials));
    std::vector<std::uint64_t> seeds(static_cast<std::size_t>(cfg.trials));
    detail::parallel_for(
        static_cast<std::uint64_t>(cfg.trials), cfg.workers, [&](std::uint64_t trial) {
          seeds[trial] = detail::trial_seed(cfg.seed, "graph/n=" + std::to_string(n) +
                                                          "/trial=" +
                                                          std::to_string(trial));
          outputs[trial] = detail::run_graph_trial(
              truth, ideal_even, ideal_odd, budget, cfg.measure_shots, cfg.method,
              cfg.use_clipped, seeds[trial]);
        });

    std::vector<double> exact_series;
    for (int t = 0; t < cfg.trials; ++t)
      exact_series.push_back(outputs[static_cast<std::size_t>(t)].fidelity[5]);
    const double exact_mean = detail::mean(exact_series);

    for (std::size_t ci = 0; ci < names.size(); ++ci) {
      std::vector<double> series;
      for (int t = 0; t < cfg.trials; ++t) {
        const double value = outputs[static_cast<std::size_t>(t)].fidelity[ci];
        result.records.push_back(
            {n, names[ci], budget, t, seeds[static_cast<std::size_t>(t)], "F_n", value});
        series.push_back(value);
      }
      double rms = 0.0;
      for (double v : series) rms += (v - exact_mean) * (v - exact_mean);
      rms = std::sqrt(rms / static_cast<double>(series.size()));
      result.groups.push_back({n, budget, names[ci], detail::mean(series),
                               detail::percentile(series, 0.025),
                               detail::percentile(series, 0.975), rms});
    }
  }
  return result;
}

inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  if (cfg.experiment == "convergence") return convergence_experiment(cfg);
  if (cfg.experiment == "fixed-budget") return fixed_budget_experiment(cfg);
  if (cfg.experiment == "graph") return graph_experiment(cfg);
  throw ContractError("unknown experiment \"" + cfg.experiment + "\"");
}

// ---------------------------------------------------------------------------
// Config (de)serialisation for the CLI
// ---------------------------------------------------------------------------

inline json config_to_json(const ExperimentConfig& cfg) {
  json model{{"gamma", cfg.model.gamma}};
  switch (cfg.model.source) {
    case ModelSource::SyntheticTpn:
      model["source"] = "synthetic-tpn";
      model["p10_range"] = {cfg.model.p10_min, cfg.model.p10_max};
      model["p01_range"] = {cfg.model.p01_min, cfg.model.p01_max};
      break;
    case ModelSource::File:
      model["source"] = "file";
      model["path"] = cfg.model.path;
      break;
    case ModelSource::Example4q:
      model["source"] = "example4q";
      break;
  }
  return json{{"experiment", cfg.experiment},
              {"n", cfg.n},
              {"n_min", cfg.n_min},
              {"n_max", cfg.n_max},
              {"model", std::move(model)},
              {"budgets", cfg.budgets},
              {"budget_per_n", cfg.budget_per_n},
              {"measure_shots", cfg.measure_shots},
              {"trials", cfg.trials},
              {"seed", cfg.seed},
              {"method", method_name(cfg.method)},
              {"use_clipped", cfg.use_clipped},
              {"workers", cfg.workers}};
}

inline ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig cfg;
  cfg.experiment = j.value("experiment", cfg.experiment);
  cfg.n = j.value("n", cfg.n);
  cfg.n_min = j.value("n_min", cfg.n_min);
  cfg.n_max = j.value("n_max", cfg.n_max);
  if (j.contains("model")) {
    const json& m = j.at("model");
    const std::string source = m.value("source", "synthetic-tpn");
    if (source == "synthetic-tpn")
      cfg.model.source = ModelSource::SyntheticTpn;
    else if (source == "file")
      cfg.model.source = ModelSource::File;
    else if (source == "example4q")
      cfg.model.source = ModelSource::Example4q;
    else
      throw IoError("unknown model source \"" + source + "\"");
    cfg.model.path = m.value("path", std::string{});
    if (m.contains("p10_range")) {
      cfg.model.p10_min = m.at("p10_range").at(0).get<double>();
      cfg.model.p10_max = m.at("p10_range").at(1).get<double>();
    }
    if (m.contains("p01_range")) {
      cfg.model.p01_min = m.at("p01_range").at(0).get<double>();
      cfg.model.p01_max = m.at("p01_range").at(1).get<double>();
    }
    cfg.model.gamma = m.value("gamma", cfg.model.gamma);
  }
  if (j.contains("budgets"))
    cfg.budgets = j.at("budgets").get<std::vector<std::uint64_t>>();
  cfg.budget_per_n = j.value("budget_per_n", cfg.budget_per_n);
  cfg.measure_shots = j.value("measure_shots", cfg.measure_shots);
  cfg.trials = j.value("trials", cfg.trials);
  cfg.seed = j.value("seed", cfg.seed);
  if (j.contains("method")) {
    const std::string m = j.at("method").get<std::string>();
    if (m == "inverse")
      cfg.method = MitigationMethod::Inverse;
    else if (m == "lsq")
      cfg.method = MitigationMethod::Lsq;
    else
      throw IoError("unknown mitigation method \"" + m + "\"");
  }
  cfg.use_clipped = j.value("use_clipped", cfg.use_clipped);
  cfg.workers = j.value("workers", cfg.workers);
  return cfg;
}

}  // namespace bfa
