// Command-line front end for the readout-error toolkit. Every subcommand
// speaks JSON (CSV for the long experiment tables); randomised subcommands
// take --seed and default to a fixed constant so runs are reproducible.

#include <CLI11.hpp>

#include <cstdint>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "bfa/bfa.hpp"

namespace {

using bfa::json;

void emit(const json& j, const std::string& out_path) {
  if (out_path.empty())
    std::cout << j.dump(2) << '\n';
  else
    bfa::save_json(out_path, j);
}

std::vector<std::vector<int>> parse_partition(const std::string& text) {
  std::vector<std::vector<int>> partition;
  std::vector<int> group;
  std::string token;
  auto flush_token = [&] {
    if (token.empty()) throw bfa::ContractError("empty qubit index in --groups");
    group.push_back(std::stoi(token));
    token.clear();
  };
  for (char c : text) {
    if (c == ',') {
      flush_token();
    } else if (c == ';') {
      flush_token();
      partition.push_back(std::move(group));
      group.clear();
    } else if (c >= '0' && c <= '9') {
      token.push_back(c);
    } else if (c != ' ') {
      throw bfa::ContractError(std::string("unexpected character '") + c +
                               "' in --groups");
    }
  }
  if (!token.empty()) flush_token();
  if (!group.empty()) partition.push_back(std::move(group));
  if (partition.empty()) throw bfa::ContractError("--groups is empty");
  return partition;
}

std::vector<std::uint32_t> read_support_file(const std::string& path, int n) {
  const json j = bfa::load_json(path);
  const json& arr = j.is_array() ? j : j.at("support");
  std::vector<std::uint32_t> support;
  for (const auto& entry : arr) {
    const bfa::BitString b = bfa::BitString::parse(entry.get<std::string>());
    if (b.width != n)
      throw bfa::IoError("support outcome \"" + b.str() + "\" has width " +
                         std::to_string(b.width) + ", expected " + std::to_string(n));
    support.push_back(b.value);
  }
  return support;
}

bfa::MitigationMethod parse_method(const std::string& name) {
  if (name == "inverse") return bfa::MitigationMethod::Inverse;
  if (name == "lsq") return bfa::MitigationMethod::Lsq;
  if (name == "lsq-reduced") return bfa::MitigationMethod::LsqReduced;
  throw bfa::ContractError("unknown mitigation method \"" + name + "\"");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Readout-error modeling and mitigation with bit-flip averaging"};
  app.require_subcommand(1);

  int exit_code = 0;

  // --- symmetrise ----------------------------------------------------------
  {
    auto* cmd = app.add_subcommand(
        "symmetrise", "Bit-flip average a model (dense/grouped -> syndrome, tpn -> symmetric tpn)");
    auto model_path = std::make_shared<std::string>();
    auto out_path = std::make_shared<std::string>();
    cmd->add_option("model", *model_path, "Model JSON file")->required();
    cmd->add_option("-o,--out", *out_path, "Output file (default stdout)");
    cmd->callback([=] {
      const bfa::Model m = bfa::read_model(*model_path);
      if (const auto* tpn = std::get_if<bfa::TpnModel>(&m)) {
        emit(bfa::model_to_json(bfa::symmetrise_tpn(*tpn)), *out_path);
      } else if (const auto* syn = std::get_if<bfa::SyndromeDistribution>(&m)) {
        emit(bfa::model_to_json(*syn), *out_path);
      } else if (const auto* grouped = std::get_if<bfa::GroupedModel>(&m)) {
        emit(bfa::model_to_json(bfa::to_syndrome(*grouped)), *out_path);
      } else {
        emit(bfa::model_to_json(bfa::symmetrise(std::get<bfa::ResponseMatrix>(m))),
             *out_path);
      }
    });
  }

  // --- densify --------------------------------------------------------------
  {
    auto* cmd = app.add_subcommand("densify", "Materialise any model as a dense matrix");
    auto model_path = std::make_shared<std::string>();
    auto out_path = std::make_shared<std::string>();
    cmd->add_option("model", *model_path, "Model JSON file")->required();
    cmd->add_option("-o,--out", *out_path, "Output file (default stdout)");
    cmd->callback([=] {
      emit(bfa::model_to_json(bfa::densify(bfa::read_model(*model_path))), *out_path);
    });
  }

  // --- boost ----------------------------------------------------------------
  {
    auto* cmd = app.add_subcommand(
        "boost", "Amplify adjacent-pair error correlations by gamma^(pair count)");
    auto model_path = std::make_shared<std::string>();
    auto out_path = std::make_shared<std::string>();
    auto gamma = std::make_shared<double>(1.0);
    cmd->add_option("model", *model_path, "Model JSON file")->required();
    cmd->add_option("--gamma", *gamma, "Boosting factor (> 0)")->required();
    cmd->add_option("-o,--out", *out_path, "Output file (default stdout)");
    cmd->callback([=] {
      const bfa::ResponseMatrix dense = bfa::densify(bfa::read_model(*model_path));
      emit(bfa::model_to_json(bfa::boost_correlations(dense, *gamma)), *out_path);
    });
  }

  // --- tensor ----------------------------------------------------------------
  {
    auto* cmd = app.add_subcommand(
        "tensor", "Kronecker product of dense factors (first factor = highest qubits)");
    auto factor_paths = std::make_shared<std::vector<std::string>>();
    auto out_path = std::make_shared<std::string>();
    cmd->add_option("factors", *factor_paths, "Model JSON files")->required();
    cmd->add_option("-o,--out", *out_path, "Output file (default stdout)");
    cmd->callback([=] {
      std::vector<bfa::ResponseMatrix> factors;
      for (const auto& path : *factor_paths)
        factors.push_back(bfa::densify(bfa::read_model(path)));
      emit(bfa::model_to_json(bfa::build_tensor(factors)), *out_path);
    });
  }

  // --- calibrate --------------------------------------------------------------
  {
    auto* cmd = app.add_subcommand(
        "calibrate", "Simulate a calibration run against a known channel");
    auto model_path = std::make_shared<std::string>();
    auto out_path = std::make_shared<std::string>();
    auto protocol = std::make_shared<std::string>();
    auto shots = std::make_shared<std::uint64_t>(0);
    auto seed = std::make_shared<std::uint64_t>(bfa::kDefaultSeed);
    cmd->add_option("--model", *model_path, "True channel model JSON")->required();
    cmd->add_option("--protocol", *protocol, "full | tpn | bfa")
        ->required()
        ->check(CLI::IsMember({"full", "tpn", "bfa"}));
    cmd->add_option("--shots", *shots, "Total shot budget")->required();
    cmd->add_option("--seed", *seed, "RNG seed");
    cmd->add_option("-o,--out", *out_path, "Output file (default stdout)");
    cmd->callback([=] {
      const bfa::ResponseMatrix m = bfa::densify(bfa::read_model(*model_path));
      const bfa::CalibrationProtocol p = *protocol == "full"
                                             ? bfa::CalibrationProtocol::Full
                                             : (*protocol == "tpn"
                                                    ? bfa::CalibrationProtocol::Tpn
                                                    : bfa::CalibrationProtocol::Bfa);
      bfa::ShotStream stream(*seed, "cli/calibrate/" + *protocol);
      emit(bfa::calibration_to_json(bfa::run_calibration(m, p, *shots, stream)),
           *out_path);
    });
  }

  // --- estimate ----------------------------------------------------------------
  {
    auto* cmd = app.add_subcommand(
        "estimate", "Fit a model family to a calibration set");
    auto set_path = std::make_shared<std::string>();
    auto out_path = std::make_shared<std::string>();
    auto family = std::make_shared<std::string>();
    auto groups = std::make_shared<std::string>();
    cmd->add_option("--set", *set_path, "Calibration set JSON")->required();
    cmd->add_option("--model", *family, "full | tpn | bfa | bfa+tpn | grouped")
        ->required()
        ->check(CLI::IsMember({"full", "tpn", "bfa", "bfa+tpn", "grouped"}));
    cmd->add_option("--groups", *groups,
                    "Partition for grouped, e.g. \"3;2,1;0\" (local bit j = j-th listed qubit)");
    cmd->add_option("-o,--out", *out_path, "Output file (default stdout)");
    cmd->callback([=] {
      const bfa::CalibrationSet set = bfa::read_calibration(*set_path);
      bfa::json out;
      if (*family == "full")
        out = bfa::model_to_json(bfa::estimate_full(set));
      else if (*family == "tpn")
        out = bfa::model_to_json(bfa::estimate_tpn(set));
      else if (*family == "bfa")
        out = bfa::model_to_json(bfa::estimate_bfa(set));
      else if (*family == "bfa+tpn")
        out = bfa::model_to_json(bfa::estimate_bfa_tpn(set));
      else {
        if (groups->empty())
          throw bfa::ContractError("grouped estimation needs --groups");
        out = bfa::model_to_json(bfa::estimate_grouped(set, parse_partition(*groups)));
      }
      emit(out, *out_path);
    });
  }

  // --- invert ----------------------------------------------------------------
  {
    auto* cmd = app.add_subcommand(
        "invert", "Analytic inverse coefficients of a syndrome-representable model");
    auto model_path = std::make_shared<std::string>();
    auto out_path = std::make_shared<std::string>();
    auto floor = std::make_shared<double>(bfa::kEigenvalueFloor);
    auto clamp = std::make_shared<bool>(false);
    cmd->add_option("model", *model_path, "Model JSON (syndrome, grouped, or symmetric tpn)")
        ->required();
    cmd->add_option("--floor", *floor, "Eigenvalue magnitude floor");
    cmd->add_flag("--clamp", *clamp,
                  "Clamp eigenvalues below the floor instead of failing");
    cmd->add_option("-o,--out", *out_path, "Output file (default stdout)");
    cmd->callback([=] {
      const bfa::Model m = bfa::read_model(*model_path);
      bfa::SyndromeDistribution syn = [&] {
        if (const auto* s = std::get_if<bfa::SyndromeDistribution>(&m)) return *s;
        if (const auto* g = std::get_if<bfa::GroupedModel>(&m)) return bfa::to_syndrome(*g);
        if (const auto* t = std::get_if<bfa::TpnModel>(&m)) return bfa::to_syndrome(*t);
        throw bfa::ContractError(
            "invert needs a syndrome-representable model; mitigate handles dense ones");
      }();
      const bfa::InverseCoefficients q = bfa::analytic_inverse(syn, *floor, *clamp);
      emit(bfa::json{{"n", q.n}, {"format", "syndrome"}, {"p_tilde", q.q_tilde}},
           *out_path);
    });
  }

  // --- mitigate ----------------------------------------------------------------
  {
    auto* cmd = app.add_subcommand("mitigate", "Recover the error-free distribution");
    auto counts_path = std::make_shared<std::string>();
    auto model_path = std::make_shared<std::string>();
    auto out_path = std::make_shared<std::string>();
    auto method = std::make_shared<std::string>("inverse");
    auto support_path = std::make_shared<std::string>();
    auto clip = std::make_shared<bool>(false);
    auto tol = std::make_shared<double>(1e-8);
    auto max_iter = std::make_shared<std::uint64_t>(0);
    cmd->add_option("--counts", *counts_path, "Observed counts JSON")->required();
    cmd->add_option("--model", *model_path, "Model JSON")->required();
    cmd->add_option("--method", *method, "inverse | lsq | lsq-reduced")
        ->check(CLI::IsMember({"inverse", "lsq", "lsq-reduced"}));
    cmd->add_option("--support-file", *support_path,
                    "Outcome support for lsq-reduced (JSON array of bitstrings)");
    cmd->add_flag("--clip", *clip, "Report the projected (clipped) vector as \"p\"");
    cmd->add_option("--tol", *tol, "lsq convergence tolerance");
    cmd->add_option("--max-iter", *max_iter, "lsq iteration cap (0 = 50 * 2^n)");
    cmd->add_option("-o,--out", *out_path, "Output file (default stdout)");
    cmd->callback([=] {
      const bfa::CountsTable counts = bfa::read_counts(*counts_path);
      const bfa::Model model = bfa::read_model(*model_path);
      if (counts.n != bfa::model_qubits(model))
        throw bfa::ContractError("counts and model disagree on qubit count");
      const std::vector<double> p_obs = counts.frequencies();

      bfa::MitigationResult result;
      switch (parse_method(*method)) {
        case bfa::MitigationMethod::Inverse:
          result = bfa::mitigate_inverse(p_obs, model);
          break;
        case bfa::MitigationMethod::Lsq:
          result = bfa::mitigate_lsq(p_obs, model, {*tol, *max_iter, nullptr});
          break;
        case bfa::MitigationMethod::LsqReduced: {
          if (support_path->empty())
            throw bfa::ContractError("lsq-reduced needs --support-file");
          const auto* syn = std::get_if<bfa::SyndromeDistribution>(&model);
          if (!syn)
            throw bfa::ContractError("lsq-reduced needs a syndrome-format model");
          result = bfa::mitigate_lsq_reduced(p_obs, *syn,
                                             read_support_file(*support_path, counts.n),
                                             {*tol, *max_iter, nullptr});
          break;
        }
      }
      bfa::json out = bfa::mitigation_to_json(result);
      out["p"] = *clip ? result.physical : result.quasi;
      emit(out, *out_path);
    });
  }

  // --- fidelity ----------------------------------------------------------------
  {
    auto* cmd = app.add_subcommand(
        "fidelity", "Response-matrix fidelity between two models (auto-densified)");
    auto a_path = std::make_shared<std::string>();
    auto b_path = std::make_shared<std::string>();
    cmd->add_option("a", *a_path, "Model JSON")->required();
    cmd->add_option("b", *b_path, "Model JSON")->required();
    cmd->callback([=] {
      const double f =
          bfa::matrix_fidelity(bfa::read_model(*a_path), bfa::read_model(*b_path));
      emit(bfa::json{{"fidelity", f}, {"infidelity", 1.0 - f}}, "");
    });
  }

  // --- tvd ----------------------------------------------------------------
  {
    auto* cmd = app.add_subcommand(
        "tvd", "Total variation distance between two counts files");
    auto a_path = std::make_shared<std::string>();
    auto b_path = std::make_shared<std::string>();
    cmd->add_option("a", *a_path, "Counts JSON")->required();
    cmd->add_option("b", *b_path, "Counts JSON")->required();
    cmd->callback([=] {
      const std::vector<double> p = bfa::read_counts(*a_path).frequencies();
      const std::vector<double> q = bfa::read_counts(*b_path).frequencies();
      emit(bfa::json{{"tvd", bfa::tv_distance(p, q)},
                     {"tvd_halved", bfa::tv_distance_halved(p, q)}},
           "");
    });
  }

  // --- complexity ----------------------------------------------------------------
  {
    auto* cmd = app.add_subcommand(
        "complexity", "Calibration sample-complexity report");
    auto n = std::make_shared<int>(0);
    auto pe = std::make_shared<double>(0.0);
    auto eps = std::make_shared<double>(0.0);
    auto gamma = std::make_shared<double>(0.0);
    auto out_path = std::make_shared<std::string>();
    cmd->add_option("--n", *n, "Qubit count")->required();
    cmd->add_option("--pe", *pe, "Representative per-qubit error probability")->required();
    cmd->add_option("--eps", *eps, "Accuracy / truncation parameter")->required();
    cmd->add_option("--gamma", *gamma, "Failure probability")->required();
    cmd->add_option("-o,--out", *out_path, "Output file (default stdout)");
    cmd->callback([=] {
      emit(bfa::complexity_to_json(bfa::complexity_report(*n, *pe, *eps, *gamma)),
           *out_path);
    });
  }

  // --- bench ----------------------------------------------------------------
  {
    auto* cmd = app.add_subcommand("bench", "Run a benchmark experiment");
    auto kind = std::make_shared<std::string>();
    auto config_path = std::make_shared<std::string>();
    auto out_csv = std::make_shared<std::string>();
    auto out_json = std::make_shared<std::string>();
    auto n = std::make_shared<int>(0);
    auto n_min = std::make_shared<int>(0);
    auto n_max = std::make_shared<int>(0);
    auto trials = std::make_shared<int>(0);
    auto seed = std::make_shared<std::uint64_t>(0);
    auto budgets = std::make_shared<std::vector<std::uint64_t>>();
    auto budget_per_n = std::make_shared<std::uint64_t>(0);
    auto shots = std::make_shared<std::uint64_t>(0);
    auto gamma = std::make_shared<double>(0.0);
    auto method = std::make_shared<std::string>();
    auto clip = std::make_shared<bool>(false);
    auto workers = std::make_shared<int>(0);
    auto model_source = std::make_shared<std::string>();
    auto model_file = std::make_shared<std::string>();

    cmd->add_option("kind", *kind, "convergence | fixed-budget | graph")
        ->required()
        ->check(CLI::IsMember({"convergence", "fixed-budget", "graph"}));
    cmd->add_option("--config", *config_path, "Experiment config JSON");
    cmd->add_option("--out-csv", *out_csv, "Per-trial CSV path (default stdout)");
    cmd->add_option("--out-json", *out_json, "Aggregated summary path");
    auto* opt_n = cmd->add_option("--n", *n, "Qubit count (convergence)");
    auto* opt_n_min = cmd->add_option("--n-min", *n_min, "Smallest n (ranged experiments)");
    auto* opt_n_max = cmd->add_option("--n-max", *n_max, "Largest n (ranged experiments)");
    auto* opt_trials = cmd->add_option("--trials", *trials, "Trials per point");
    auto* opt_seed = cmd->add_option("--seed", *seed, "Base RNG seed");
    auto* opt_budgets = cmd->add_option("--budgets", *budgets, "Budget sweep (convergence)");
    auto* opt_bpn = cmd->add_option("--budget-per-n", *budget_per_n,
                                    "Calibration budget multiplier (budget = this * 2^n)");
    auto* opt_shots = cmd->add_option("--shots", *shots, "Measurement shots (graph)");
    auto* opt_gamma = cmd->add_option("--gamma", *gamma, "Correlation boosting factor");
    auto* opt_method = cmd->add_option("--method", *method, "inverse | lsq")
                           ->check(CLI::IsMember({"inverse", "lsq"}));
    auto* opt_clip = cmd->add_flag("--clip", *clip, "Graph observables from clipped vectors");
    auto* opt_workers = cmd->add_option("--workers", *workers, "Worker threads");
    auto* opt_source = cmd->add_option("--model-source", *model_source,
                                       "synthetic-tpn | file | example4q")
                           ->check(CLI::IsMember({"synthetic-tpn", "file", "example4q"}));
    auto* opt_file = cmd->add_option("--model-file", *model_file, "True model JSON path");

    cmd->callback([=] {
      bfa::ExperimentConfig cfg;
      if (!config_path->empty()) cfg = bfa::config_from_json(bfa::load_json(*config_path));
      cfg.experiment = *kind;
      if (opt_n->count()) cfg.n = *n;
      if (opt_n_min->count()) cfg.n_min = *n_min;
      if (opt_n_max->count()) cfg.n_max = *n_max;
      if (opt_trials->count()) cfg.trials = *trials;
      if (opt_seed->count()) cfg.seed = *seed;
      if (opt_budgets->count()) cfg.budgets = *budgets;
      if (opt_bpn->count()) cfg.budget_per_n = *budget_per_n;
      if (opt_shots->count()) cfg.measure_shots = *shots;
      if (opt_gamma->count()) cfg.model.gamma = *gamma;
      if (opt_method->count()) cfg.method = parse_method(*method);
      if (opt_clip->count()) cfg.use_clipped = *clip;
      if (opt_workers->count()) cfg.workers = *workers;
      if (opt_source->count()) {
        if (*model_source == "synthetic-tpn")
          cfg.model.source = bfa::ModelSource::SyntheticTpn;
        else if (*model_source == "file")
          cfg.model.source = bfa::ModelSource::File;
        else
          cfg.model.source = bfa::ModelSource::Example4q;
      }
      if (opt_file->count()) {
        cfg.model.path = *model_file;
        cfg.model.source = bfa::ModelSource::File;
      }

      const bfa::ExperimentResult result = bfa::run_experiment(cfg);
      if (out_csv->empty()) {
        std::cout << result.csv();
      } else {
        std::ofstream csv(*out_csv);
        if (!csv) throw bfa::IoError("cannot open " + *out_csv + " for writing");
        csv << result.csv();
      }
      if (!out_json->empty()) {
        bfa::json summary = result.summary_json();
        summary["config"] = bfa::config_to_json(cfg);
        bfa::save_json(*out_json, summary);
      }
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  } catch (const bfa::Error& e) {
    std::cerr << bfa::json{{"error", {{"kind", e.kind()}, {"detail", e.what()}}}}.dump()
              << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << bfa::json{{"error", {{"kind", "internal"}, {"detail", e.what()}}}}.dump()
              << '\n';
    return 2;
  }
  return exit_code;
}
