// qregress command line: each stage of the pipeline as its own subcommand.

#include "qregress/error.hpp"
#include "qregress/experiment.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace qregress;

constexpr int kExitValidation = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitIo = 4;

json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_failure, "cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(Errc::validation_error, "'" + path + "' is not valid JSON: " + e.what());
  }
}

// Writes to path, or stdout when path is empty.
void write_text(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io_failure, "cannot open '" + path + "' for writing");
  out << text;
  out.flush();
  if (!out) throw Error(Errc::io_failure, "failed writing '" + path + "'");
}

struct Overrides {
  std::optional<double> beta0;
  std::optional<std::string> loss;
  std::vector<std::size_t> n;
  std::optional<std::size_t> reps;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;

  void attach(CLI::App* cmd) {
    cmd->add_option("--beta0", beta0, "True slope");
    cmd->add_option("--loss", loss, "square | absolute | huber[:c] | lq:q | quantile:alpha");
    cmd->add_option("--n", n, "Sample sizes (repeat or comma-separate)")->delimiter(',');
    cmd->add_option("--reps", reps, "Replications per sample size");
    cmd->add_option("--seed", seed, "Base seed");
    cmd->add_option("--out", out, "Output path (stdout when omitted)");
  }

  ExperimentConfig apply(json j) const {
    if (!j.is_object()) throw Error(Errc::validation_error, "config must be a JSON object");
    if (beta0) j["beta0"] = *beta0;
    if (loss) j["loss"] = *loss;
    if (!n.empty()) j["n_values"] = n;
    if (reps) j["replications"] = *reps;
    if (seed) j["base_seed"] = *seed;
    if (out) j["output_path"] = *out;
    return config_from_json(j);
  }
};

int cmd_decompose(const std::string& config_path, const Overrides& ov) {
  const ExperimentConfig cfg = ov.apply(read_json_file(config_path));
  const SymmetricOperator op = build_operator(cfg.operator_spec);
  const QuantumState state = build_state(cfg.state_spec, op);
  const SpectralDecomposition d = spectral_decompose(op);
  const json doc = {{"operator", to_json(op)},
                    {"state", to_json(state)},
                    {"decomposition", to_json(d)},
                    {"pmf", to_json(eigen_pmf(state, d))},
                    {"commutator_norm", commutator_norm(state, op)}};
  write_text(cfg.output_path, doc.dump(2) + "\n");
  return 0;
}

int cmd_sample(const std::string& config_path, const Overrides& ov, std::size_t rep,
               const std::string& format) {
  const ExperimentConfig cfg = ov.apply(read_json_file(config_path));
  const SymmetricOperator op = build_operator(cfg.operator_spec);
  const QuantumState state = build_state(cfg.state_spec, op);
  const TruePair pair = build_true_pair(op, cfg.beta0);
  const EigenPMF pmf = eigen_pmf(state, pair.x_spectrum);
  const RngSeed seed{cfg.base_seed, rep};
  auto samples = sample_eigen_pairs(pmf, pair, cfg.n_values.front(), seed);
  samples = apply_error(std::move(samples), cfg.error_model, cfg.beta0, seed);
  if (format == "json") {
    write_text(cfg.output_path, samples_to_json(samples).dump(2) + "\n");
  } else {
    std::ostringstream os;
    write_samples_csv(os, samples);
    write_text(cfg.output_path, os.str());
  }
  return 0;
}

int cmd_fit(const std::string& data_path, const std::string& loss_spec, const std::string& out) {
  std::ifstream in(data_path, std::ios::binary);
  if (!in) throw Error(Errc::io_failure, "cannot open '" + data_path + "'");
  const auto samples = read_samples_csv(in);
  const RegressionData data = RegressionData::from_samples(samples);
  const EstimatorResult r = fit(LossFunction::parse(loss_spec), data);
  json doc = to_json(r);
  doc["n"] = data.size();
  doc["loss"] = to_json(LossFunction::parse(loss_spec));
  write_text(out, doc.dump(2) + "\n");
  return 0;
}

int cmd_constants(const std::string& loss_spec, const std::string& error_spec, std::size_t draws,
                  double h, std::uint64_t seed, const std::string& out) {
  const LossFunction loss = LossFunction::parse(loss_spec);
  const ErrorModel model = parse_error_model(error_spec);
  const AsymptoticConstants k = asymptotic_constants(loss, model, RngSeed{seed, 0}, draws, h);
  json doc = {{"loss", to_json(loss)},
              {"error_model", to_json(model)},
              {"a", k.a},
              {"a_std_error", k.a_std_error},
              {"D", k.d_const},
              {"D_std_error", k.d_std_error},
              {"estimation_h", k.estimation_h},
              {"mc_draws", k.mc_draws},
              {"g_curve", to_json(k.g_values)}};
  const auto a_exact = closed_form_a(loss, model);
  const auto d_exact = closed_form_D(loss, model);
  doc["a_closed_form"] = a_exact ? json(*a_exact) : json(nullptr);
  doc["D_closed_form"] = d_exact ? json(*d_exact) : json(nullptr);
  write_text(out, doc.dump(2) + "\n");
  return 0;
}

std::string render(const MonteCarloReport& report, const std::string& format) {
  if (format == "csv") {
    std::ostringstream os;
    write_report_csv(os, report);
    return os.str();
  }
  return report_to_json(report).dump(2) + "\n";
}

int cmd_mc(const std::string& config_path, const Overrides& ov, const std::string& format,
           std::optional<std::size_t> threads) {
  const ExperimentConfig cfg = ov.apply(read_json_file(config_path));
  RunOptions options;
  options.threads = threads ? *threads : threads_from_env();
  const MonteCarloReport report = run_experiment(cfg, options);
  write_text(cfg.output_path, render(report, format));
  return 0;
}

int cmd_report(const std::string& in_path, const std::string& format, const std::string& out) {
  const MonteCarloReport report = report_from_json(read_json_file(in_path));
  write_text(out, render(report, format));
  return 0;
}

int exit_code_for(const Error& e) {
  switch (e.category()) {
    case ErrorCategory::validation: return kExitValidation;
    case ErrorCategory::numeric: return kExitNumeric;
    case ErrorCategory::io: return kExitIo;
  }
  return kExitValidation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Operator-on-operator regression: spectra, sampling, M-estimation, Monte Carlo"};
  app.set_version_flag("--version", std::string(kVersionTag));
  app.require_subcommand(1);

  std::string config_path;
  Overrides ov;

  auto* decompose = app.add_subcommand("decompose", "Spectrum and eigenvalue pmf of the configured model");
  decompose->add_option("config", config_path, "Experiment config (JSON)")->required();
  ov.attach(decompose);

  std::size_t sample_rep = 0;
  std::string sample_format = "csv";
  auto* sample = app.add_subcommand("sample", "Emit one data set at the first n (CSV or JSON)");
  sample->add_option("config", config_path, "Experiment config (JSON)")->required();
  sample->add_option("--rep", sample_rep, "Replication stream index");
  sample->add_option("--format", sample_format)->check(CLI::IsMember({"csv", "json"}));
  ov.attach(sample);

  std::string data_path;
  std::string fit_loss = "square";
  std::string plain_out;
  auto* fit_cmd = app.add_subcommand("fit", "Estimate beta from a sample CSV");
  fit_cmd->add_option("data", data_path, "CSV with lambda,mu columns")->required();
  fit_cmd->add_option("--loss", fit_loss, "Loss spec");
  fit_cmd->add_option("--out", plain_out, "Output path (stdout when omitted)");

  std::string const_loss = "square";
  std::string const_error = "gaussian:1";
  std::size_t const_draws = kDefaultConstantDraws;
  double const_h = kDefaultSlopeStep;
  std::uint64_t const_seed = 0;
  auto* constants = app.add_subcommand("constants", "Monte Carlo estimates of a and D");
  constants->add_option("--loss", const_loss, "Loss spec");
  constants->add_option("--error", const_error, "Error model, e.g. gaussian:1, student_t:5:1");
  constants->add_option("--draws", const_draws, "Monte Carlo draws");
  constants->add_option("--slope-step", const_h, "Central-difference step for a");
  constants->add_option("--seed", const_seed, "Base seed");
  constants->add_option("--out", plain_out, "Output path (stdout when omitted)");

  std::string mc_format = "json";
  std::optional<std::size_t> mc_threads;
  auto* mc = app.add_subcommand("mc", "Run the full Monte Carlo experiment");
  mc->add_option("config", config_path, "Experiment config (JSON)")->required();
  mc->add_option("--format", mc_format)->check(CLI::IsMember({"json", "csv"}));
  mc->add_option("--threads", mc_threads, "Worker count (0 = auto; default QREGRESS_THREADS)");
  ov.attach(mc);

  std::string report_path;
  std::string report_format = "json";
  auto* report = app.add_subcommand("report", "Re-render a saved JSON report");
  report->add_option("report", report_path, "Report JSON written by mc")->required();
  report->add_option("--format", report_format)->check(CLI::IsMember({"json", "csv"}));
  report->add_option("--out", plain_out, "Output path (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (*decompose) return cmd_decompose(config_path, ov);
    if (*sample) return cmd_sample(config_path, ov, sample_rep, sample_format);
    if (*fit_cmd) return cmd_fit(data_path, fit_loss, plain_out);
    if (*constants) {
      return cmd_constants(const_loss, const_error, const_draws, const_h, const_seed, plain_out);
    }
    if (*mc) return cmd_mc(config_path, ov, mc_format, mc_threads);
    if (*report) return cmd_report(report_path, report_format, plain_out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return 0;
}
