#pragma once

// Configuration-driven Monte Carlo experiments: build the model, sample,
// fit every replication, and aggregate into a report.

#include "qregress/asymptotics.hpp"
#include "qregress/estimators.hpp"
#include "qregress/operator_core.hpp"
#include "qregress/sampling.hpp"
#include "qregress/serialization.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace qregress {

inline constexpr std::string_view kVersionTag = "qregress 0.1.0";

struct OperatorSpec {
  enum class Kind { entries, diagonal, random_symmetric };
  Kind kind = Kind::diagonal;
  std::size_t dim = 0;
  RowList entries;
  std::vector<double> diagonal;
  std::uint64_t seed = 0;

  friend bool operator==(const OperatorSpec&, const OperatorSpec&) = default;
};

struct StateSpec {
  enum class Kind { entries, maximally_mixed, gibbs };
  Kind kind = Kind::maximally_mixed;
  std::size_t dim = 0;
  RowList entries;
  double temperature = 1.0;

  friend bool operator==(const StateSpec&, const StateSpec&) = default;
};

struct ExperimentConfig {
  OperatorSpec operator_spec;
  StateSpec state_spec;
  double beta0 = 1.0;
  LossFunction loss = LossFunction::square();
  ErrorModel error_model = ErrorModel::gaussian(1.0);
  std::vector<std::size_t> n_values;
  std::size_t replications = 1;
  std::uint64_t base_seed = 0;
  double delta_consistency = 0.1;
  std::string output_path;
  std::size_t constant_draws = kDefaultConstantDraws;
  double slope_step = kDefaultSlopeStep;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

// Parses and validates; throws Errc::validation_error (or the module error
// that made the config invalid).
ExperimentConfig config_from_json(const json& j);
json to_json(const ExperimentConfig& cfg);
void validate(const ExperimentConfig& cfg);

SymmetricOperator build_operator(const OperatorSpec& spec);
QuantumState build_state(const StateSpec& spec, const SymmetricOperator& op);

struct ReplicationResult {
  std::size_t n = 0;
  std::size_t rep = 0;
  double beta_hat = 0.0;
  double abs_error = 0.0;
  double z = 0.0;
  double s_n = 0.0;
  double d_n_sq = 0.0;

  friend bool operator==(const ReplicationResult&, const ReplicationResult&) = default;
};

struct NSummary {
  std::size_t n = 0;
  std::size_t replications = 0;
  double mean_beta_hat = 0.0;
  double sd_beta_hat = 0.0;
  double exceedance = 0.0;
  double mean_s_n = 0.0;
  double mean_d_n_sq = 0.0;

  friend bool operator==(const NSummary&, const NSummary&) = default;
};

struct MonteCarloReport {
  std::string version{kVersionTag};
  ExperimentConfig config;
  std::vector<double> spectrum;
  std::vector<double> pmf_masses;
  double commutator_norm = 0.0;
  double a = 0.0;
  double a_std_error = 0.0;
  double d_const = 0.0;
  double d_std_error = 0.0;
  GCurve g_values;
  double estimation_h = 0.0;
  std::size_t mc_draws = 0;
  std::vector<NSummary> summaries;
  bool exceedance_strictly_decreasing = false;
  bool exceedance_nonincreasing = false;
  std::size_t normality_n = 0;
  double ks_statistic = 0.0;
  double ks_p_value = 0.0;
  double z_mean = 0.0;
  double z_variance = 0.0;
  std::vector<ReplicationResult> rows;  // ordered by (n, rep)
  double wall_time_seconds = 0.0;

  // z values of the largest n, in replication order.
  std::vector<double> normality_z() const;

  friend bool operator==(const MonteCarloReport&, const MonteCarloReport&) = default;
};

struct RunOptions {
  // 0 picks std::thread::hardware_concurrency().
  std::size_t threads = 1;
};

// Worker count from QREGRESS_THREADS (unset or 0 means automatic).
std::size_t threads_from_env();

MonteCarloReport run_experiment(const ExperimentConfig& cfg, const RunOptions& options = {});

json report_to_json(const MonteCarloReport& report);
MonteCarloReport report_from_json(const json& j);

enum class ReportFormat { json, csv };

inline constexpr std::string_view kReportCsvHeader = "n,rep,beta_hat,abs_error,z";
void write_report_csv(std::ostream& out, const MonteCarloReport& report);
// Throws Errc::io_failure when the file cannot be written.
void emit_report(const MonteCarloReport& report, ReportFormat format,
                 const std::filesystem::path& path);

}  // namespace qregress
