#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "argoskit/diagnostics.hpp"
#include "argoskit/harness.hpp"
#include "argoskit/pipeline.hpp"
#include "argoskit/smoothing.hpp"
#include "json.hpp"

using namespace argoskit;

namespace {

double parse_snr_arg(const std::string& s) {
  if (s == "inf" || s == "Inf") return kInfinity;
  return std::stod(s);
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text << '\n';
    return;
  }
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << text << '\n';
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void add_bayes_options(CLI::App* cmd, BayesConfig& cfg) {
  cmd->add_option("--chains", cfg.chains, "HMC chains")->capture_default_str();
  cmd->add_option("--iters", cfg.iters, "iterations per chain, warmup included")
      ->capture_default_str();
  cmd->add_option("--warmup", cfg.warmup, "warmup iterations per chain")->capture_default_str();
  cmd->add_option("--ci", cfg.ci_level, "credible-interval level")->capture_default_str();
}

Matrix matrix_from_json(const nlohmann::json& j) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  if (rows == 0) throw ParseError("A must be a nonempty array of rows");
  const auto cols = static_cast<Eigen::Index>(j.at(0).size());
  Matrix A(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j.at(static_cast<std::size_t>(r));
    if (static_cast<Eigen::Index>(row.size()) != cols) throw ParseError("ragged matrix A");
    for (Eigen::Index c = 0; c < cols; ++c) A(r, c) = row.at(static_cast<std::size_t>(c)).get<double>();
  }
  return A;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse ODE discovery with frequentist screening and Bayesian term selection"};
  app.require_subcommand(1);

  // simulate
  std::string sim_system = "lorenz", sim_out, sim_snr = "inf";
  double sim_dt = 0.0;
  int sim_n = 5000;
  std::uint64_t sim_seed = 0;
  auto* simulate_cmd = app.add_subcommand("simulate", "Simulate a benchmark system to CSV");
  simulate_cmd->add_option("--system", sim_system, "system identifier")->capture_default_str();
  simulate_cmd->add_option("--dt", sim_dt, "sampling step (system default when omitted)");
  simulate_cmd->add_option("--n", sim_n, "number of samples")->capture_default_str();
  simulate_cmd->add_option("--snr", sim_snr, "SNR in dB or 'inf'")->capture_default_str();
  simulate_cmd->add_option("--seed", sim_seed, "master seed")->capture_default_str();
  simulate_cmd->add_option("-o,--out", sim_out, "output CSV (stdout when omitted)");

  // discover
  std::string disc_in, disc_out, disc_diag, disc_snr = "inf";
  DiscoverOptions disc;
  bool disc_text = false;
  auto* discover_cmd = app.add_subcommand("discover", "Identify governing equations from a trajectory CSV");
  discover_cmd->add_option("-i,--input", disc_in, "trajectory CSV")->required();
  discover_cmd->add_option("--degree", disc.degree, "polynomial degree")->capture_default_str();
  discover_cmd->add_flag("--trig", disc.trig, "add sin/cos terms");
  discover_cmd->add_option("--seed", disc.seed, "master seed")->capture_default_str();
  discover_cmd->add_option("--snr", disc_snr, "SNR recorded in the metadata");
  discover_cmd->add_option("-o,--out", disc_out, "model JSON (stdout when omitted)");
  discover_cmd->add_option("--diagnostics", disc_diag, "also write diagnostics JSON here");
  discover_cmd->add_flag("--text", disc_text, "print the equations to stderr");
  add_bayes_options(discover_cmd, disc.bayes);

  // benchmark
  std::string bench_config, bench_plot, bench_out;
  auto* benchmark_cmd = app.add_subcommand("benchmark", "Run a success-rate experiment");
  benchmark_cmd->add_option("-c,--config", bench_config, "key = value config file")->required();
  benchmark_cmd->add_option("-o,--out", bench_out, "success table CSV (stdout when omitted)");
  benchmark_cmd->add_option("--plot", bench_plot, "also write n,snr_db,success_rate,method CSV");

  // diagnose
  std::string diag_in, diag_model, diag_out;
  BayesConfig diag_bayes;
  auto* diagnose_cmd = app.add_subcommand("diagnose", "VIF, PSIS-LOO and residual diagnostics for a model");
  diagnose_cmd->add_option("-i,--input", diag_in, "trajectory CSV")->required();
  diagnose_cmd->add_option("-m,--model", diag_model, "model JSON from discover")->required();
  diagnose_cmd->add_option("-o,--out", diag_out, "diagnostics JSON (stdout when omitted)");
  add_bayes_options(diagnose_cmd, diag_bayes);

  // modes
  std::string modes_in, modes_out;
  auto* modes_cmd = app.add_subcommand("modes", "Equilibrium and modes of dz/dt = A z + b");
  modes_cmd->add_option("-i,--input", modes_in, "JSON file {\"A\": [[...]], \"b\": [...]}")
      ->required();
  modes_cmd->add_option("-o,--out", modes_out, "output JSON (stdout when omitted)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate_cmd->parsed()) {
      const DynamicalSystem sys = builtin_system(sim_system);
      const double dt = sim_dt > 0.0 ? sim_dt : sys.default_dt;
      const Vector ic =
          sample_initial_condition(sys, derive_seed(sim_seed, streams::kInitialCondition));
      Trajectory traj = simulate(sys, ic, dt, sim_n);
      traj = add_noise(traj, {parse_snr_arg(sim_snr), derive_seed(sim_seed, streams::kNoise)});
      if (sim_out.empty()) {
        write_trajectory_csv(std::cout, traj);
      } else {
        write_trajectory_csv(sim_out, traj);
      }
    } else if (discover_cmd->parsed()) {
      disc.diagnostics = !disc_diag.empty();
      disc.snr_db = parse_snr_arg(disc_snr);
      const DiscoveredModel model = discover(read_trajectory_csv(disc_in), disc);
      emit(disc_out, model_json(model));
      if (disc_text) std::cerr << model_text(model);
      if (disc.diagnostics) {
        nlohmann::ordered_json j = nlohmann::ordered_json::object();
        for (std::size_t e = 0; e < model.diagnostics.size(); ++e) {
          const auto& d = model.diagnostics[e];
          j[equation_lhs(static_cast<int>(e))] =
              d ? nlohmann::ordered_json::parse(diagnostics_json(*d)) : nlohmann::ordered_json();
        }
        emit(disc_diag, j.dump(2));
      }
    } else if (benchmark_cmd->parsed()) {
      const ExperimentConfig cfg = read_experiment_config(bench_config);
      const SuccessTable table = run_experiment(cfg, [](int n, double snr, const TrialOutcome& t) {
        std::fprintf(stderr, "n=%d snr=%s trial=%d success=%d %.1fs%s%s\n", n,
                     format_double(snr).c_str(), t.trial, t.success ? 1 : 0, t.runtime_seconds,
                     t.error.empty() ? "" : " error: ", t.error.c_str());
      });
      std::ostringstream csv;
      write_success_table_csv(csv, table);
      if (bench_out.empty()) {
        std::cout << csv.str();
      } else {
        std::ofstream(bench_out) << csv.str();
      }
      if (!bench_plot.empty()) emit_plot_data(table, bench_plot);
    } else if (diagnose_cmd->parsed()) {
      const Trajectory traj = read_trajectory_csv(diag_in);
      const DiscoveredModel model = read_model_json(diag_model);
      if (model.dim() != traj.dim()) {
        throw DimensionMismatchError("model and trajectory dimensions differ");
      }
      const SmoothedData smooth = smooth_and_differentiate(traj);
      nlohmann::ordered_json j = nlohmann::ordered_json::object();
      for (int e = 0; e < static_cast<int>(model.dim()); ++e) {
        const auto& eq = model.equations[static_cast<std::size_t>(e)];
        if (eq.terms.empty()) {
          j[equation_lhs(e)] = nullptr;
          continue;
        }
        std::vector<TermDescriptor> terms;
        for (const auto& t : eq.terms) terms.push_back(t.term);
        const CandidateLibrary lib = library_from_terms(smooth.X, terms);
        const Vector y = smooth.Xdot.col(e);
        BayesConfig cfg = diag_bayes;
        cfg.seed = equation_seed(model.meta.seed, e);
        const PosteriorSummary summary = summarize(hmc_sample(lib, y, cfg), cfg);
        j[equation_lhs(e)] = nlohmann::ordered_json::parse(diagnostics_json(diagnose(lib, y, summary)));
      }
      emit(diag_out, j.dump(2));
    } else if (modes_cmd->parsed()) {
      const auto j = nlohmann::json::parse(slurp(modes_in));
      const Matrix A = matrix_from_json(j.at("A"));
      const auto& bj = j.at("b");
      Vector b(static_cast<Eigen::Index>(bj.size()));
      for (std::size_t i = 0; i < bj.size(); ++i) b(static_cast<Eigen::Index>(i)) = bj[i].get<double>();
      emit(modes_out, modal_analysis_json(analyze_affine_modes(A, b), 2));
    }
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: invalid JSON: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
