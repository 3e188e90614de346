#include "qregress/experiment.hpp"

#include "qregress/error.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

namespace qregress {

namespace {

[[noreturn]] void invalid(const std::string& what) { throw Error(Errc::validation_error, what); }

template <class T>
T get(const json& j, const char* key) {
  if (!j.contains(key)) invalid(std::string("config is missing '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    invalid(std::string("config field '") + key + "': " + e.what());
  }
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? get<T>(j, key) : fallback;
}

OperatorSpec operator_spec_from_json(const json& j) {
  if (!j.is_object()) invalid("'operator' must be an object");
  OperatorSpec s;
  const auto generator = get_or<std::string>(j, "generator", "");
  if (generator == "diagonal") {
    s.kind = OperatorSpec::Kind::diagonal;
    s.diagonal = get<std::vector<double>>(j, "diagonal");
    s.dim = s.diagonal.size();
  } else if (generator == "random_symmetric") {
    s.kind = OperatorSpec::Kind::random_symmetric;
    s.dim = get<std::size_t>(j, "dim");
    s.seed = get<std::uint64_t>(j, "seed");
  } else if (generator.empty()) {
    s.kind = OperatorSpec::Kind::entries;
    s.dim = get<std::size_t>(j, "dim");
    s.entries = get<RowList>(j, "entries");
  } else {
    invalid("unknown operator generator '" + generator + "'");
  }
  return s;
}

json to_json(const OperatorSpec& s) {
  switch (s.kind) {
    case OperatorSpec::Kind::diagonal:
      return {{"generator", "diagonal"}, {"diagonal", s.diagonal}};
    case OperatorSpec::Kind::random_symmetric:
      return {{"generator", "random_symmetric"}, {"dim", s.dim}, {"seed", s.seed}};
    case OperatorSpec::Kind::entries:
      return {{"dim", s.dim}, {"entries", s.entries}};
  }
  return {};
}

StateSpec state_spec_from_json(const json& j) {
  StateSpec s;
  if (j.is_string()) {
    if (j.get<std::string>() != "maximally_mixed") invalid("unknown state '" + j.get<std::string>() + "'");
    s.kind = StateSpec::Kind::maximally_mixed;
    return s;
  }
  if (!j.is_object()) invalid("'state' must be a string or an object");
  const auto kind = get_or<std::string>(j, "kind", "");
  if (kind == "maximally_mixed") {
    s.kind = StateSpec::Kind::maximally_mixed;
  } else if (kind == "gibbs") {
    s.kind = StateSpec::Kind::gibbs;
    s.temperature = get<double>(j, "temperature");
  } else if (kind.empty() || kind == "entries") {
    s.kind = StateSpec::Kind::entries;
    s.dim = get<std::size_t>(j, "dim");
    s.entries = get<RowList>(j, "entries");
  } else {
    invalid("unknown state kind '" + kind + "'");
  }
  return s;
}

json to_json(const StateSpec& s) {
  switch (s.kind) {
    case StateSpec::Kind::maximally_mixed:
      return {{"kind", "maximally_mixed"}};
    case StateSpec::Kind::gibbs:
      return {{"kind", "gibbs"}, {"temperature", s.temperature}};
    case StateSpec::Kind::entries:
      return {{"kind", "entries"}, {"dim", s.dim}, {"entries", s.entries}};
  }
  return {};
}

struct Task {
  std::size_t n;
  std::size_t rep;
};

struct Model {
  TruePair pair;
  EigenPMF pmf;
  double commutator = 0.0;
};

Model build_model(const ExperimentConfig& cfg) {
  const SymmetricOperator op = build_operator(cfg.operator_spec);
  const QuantumState state = build_state(cfg.state_spec, op);
  TruePair pair = build_true_pair(op, cfg.beta0);
  EigenPMF pmf = eigen_pmf(state, pair.x_spectrum);
  const double comm = commutator_norm(state, op);
  return Model{std::move(pair), std::move(pmf), comm};
}

ReplicationResult run_one(const ExperimentConfig& cfg, const Model& model, double a, double d,
                          Task t) {
  const RngSeed seed{cfg.base_seed, t.rep};
  auto samples = sample_eigen_pairs(model.pmf, model.pair, t.n, seed);
  samples = apply_error(std::move(samples), cfg.error_model, cfg.beta0, seed);
  const RegressionData data = RegressionData::from_samples(samples);
  const DesignStats stats = design_stats(data.lambdas());
  const EstimatorResult fit_result = fit(cfg.loss, data);
  ReplicationResult r;
  r.n = t.n;
  r.rep = t.rep;
  r.beta_hat = fit_result.beta_hat;
  r.abs_error = std::abs(fit_result.beta_hat - cfg.beta0);
  r.z = normalized_statistic(fit_result.beta_hat, cfg.beta0, a, d, stats.s_n);
  r.s_n = stats.s_n;
  r.d_n_sq = stats.d_n_sq;
  return r;
}

json null_if_absent(bool present, double v) { return present ? json(v) : json(nullptr); }

double number_or_zero(const json& j) { return j.is_null() ? 0.0 : j.get<double>(); }

}  // namespace

SymmetricOperator build_operator(const OperatorSpec& spec) {
  switch (spec.kind) {
    case OperatorSpec::Kind::diagonal:
      if (spec.diagonal.empty()) invalid("diagonal operator needs at least one entry");
      return diagonal_operator(spec.diagonal);
    case OperatorSpec::Kind::random_symmetric:
      if (spec.dim == 0) invalid("random operator needs dim >= 1");
      return random_symmetric(spec.dim, spec.seed);
    case OperatorSpec::Kind::entries:
      return make_symmetric(spec.dim, spec.entries);
  }
  invalid("bad operator spec");
}

QuantumState build_state(const StateSpec& spec, const SymmetricOperator& op) {
  switch (spec.kind) {
    case StateSpec::Kind::maximally_mixed:
      return maximally_mixed(op.dim());
    case StateSpec::Kind::gibbs:
      return gibbs_state(op, spec.temperature);
    case StateSpec::Kind::entries:
      if (spec.dim != op.dim()) {
        throw Error(Errc::dimension_mismatch, "state dim " + std::to_string(spec.dim) +
                                                  " does not match operator dim " +
                                                  std::to_string(op.dim()));
      }
      return make_state(spec.dim, spec.entries);
  }
  invalid("bad state spec");
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.n_values.empty()) invalid("n_values must not be empty");
  for (std::size_t i = 0; i < cfg.n_values.size(); ++i) {
    if (cfg.n_values[i] == 0) invalid("n_values must be positive");
    if (i > 0 && cfg.n_values[i] <= cfg.n_values[i - 1]) invalid("n_values must be ascending");
  }
  if (cfg.replications == 0) invalid("replications must be at least 1");
  if (cfg.beta0 == 0.0) throw Error(Errc::zero_beta, "beta0 must be nonzero");
  if (!std::isfinite(cfg.beta0)) invalid("beta0 must be finite");
  if (!(cfg.delta_consistency > 0.0)) invalid("delta_consistency must be positive");
  if (cfg.constant_draws < 2) invalid("constant_draws must be at least 2");
  if (!(cfg.slope_step > 0.0)) invalid("slope_step must be positive");
  // Dimension and state checks live in the constructors.
  build_state(cfg.state_spec, build_operator(cfg.operator_spec));
}

ExperimentConfig config_from_json(const json& j) {
  if (!j.is_object()) invalid("config must be a JSON object");
  ExperimentConfig cfg;
  cfg.operator_spec = operator_spec_from_json(get<json>(j, "operator"));
  cfg.state_spec = state_spec_from_json(get_or<json>(j, "state", json("maximally_mixed")));
  cfg.beta0 = get<double>(j, "beta0");
  cfg.loss = loss_from_json(get_or<json>(j, "loss", json("square")));
  cfg.error_model = error_model_from_json(get<json>(j, "error_model"));
  cfg.n_values = get<std::vector<std::size_t>>(j, "n_values");
  cfg.replications = get<std::size_t>(j, "replications");
  cfg.base_seed = get_or<std::uint64_t>(j, "base_seed", 0);
  cfg.delta_consistency = get_or<double>(j, "delta_consistency", 0.1);
  cfg.output_path = get_or<std::string>(j, "output_path", "");
  cfg.constant_draws = get_or<std::size_t>(j, "constant_draws", kDefaultConstantDraws);
  cfg.slope_step = get_or<double>(j, "slope_step", kDefaultSlopeStep);
  validate(cfg);
  return cfg;
}

json to_json(const ExperimentConfig& cfg) {
  return {{"operator", to_json(cfg.operator_spec)},
          {"state", to_json(cfg.state_spec)},
          {"beta0", cfg.beta0},
          {"loss", to_json(cfg.loss)},
          {"error_model", to_json(cfg.error_model)},
          {"n_values", cfg.n_values},
          {"replications", cfg.replications},
          {"base_seed", cfg.base_seed},
          {"delta_consistency", cfg.delta_consistency},
          {"output_path", cfg.output_path},
          {"constant_draws", cfg.constant_draws},
          {"slope_step", cfg.slope_step}};
}

std::vector<double> MonteCarloReport::normality_z() const {
  std::vector<double> z;
  for (const auto& r : rows)
    if (r.n == normality_n) z.push_back(r.z);
  return z;
}

std::size_t threads_from_env() {
  const char* raw = std::getenv("QREGRESS_THREADS");
  std::size_t requested = 0;
  if (raw != nullptr && *raw != '\0') {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(raw, &end, 10);
    if (end != nullptr && *end == '\0') requested = static_cast<std::size_t>(v);
  }
  if (requested == 0) requested = std::max(1u, std::thread::hardware_concurrency());
  return requested;
}

MonteCarloReport run_experiment(const ExperimentConfig& cfg, const RunOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  validate(cfg);
  const Model model = build_model(cfg);

  MonteCarloReport report;
  report.config = cfg;
  report.spectrum = model.pmf.support;
  report.pmf_masses = model.pmf.masses;
  report.commutator_norm = model.commutator;

  const AsymptoticConstants k = asymptotic_constants(cfg.loss, cfg.error_model,
                                                     RngSeed{cfg.base_seed, 0},
                                                     cfg.constant_draws, cfg.slope_step);
  report.a = k.a;
  report.a_std_error = k.a_std_error;
  report.d_const = k.d_const;
  report.d_std_error = k.d_std_error;
  report.g_values = k.g_values;
  report.estimation_h = k.estimation_h;
  report.mc_draws = k.mc_draws;

  std::vector<Task> tasks;
  tasks.reserve(cfg.n_values.size() * cfg.replications);
  for (std::size_t n : cfg.n_values)
    for (std::size_t r = 0; r < cfg.replications; ++r) tasks.push_back({n, r});

  std::vector<ReplicationResult> results(tasks.size());
  std::vector<std::exception_ptr> failures(tasks.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      try {
        results[i] = run_one(cfg, model, k.a, k.d_const, tasks[i]);
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
  };
  std::size_t threads = options.threads == 0 ? threads_from_env() : options.threads;
  threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(1, tasks.size()));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  // First failure in task order, so the reported coordinate does not depend on scheduling.
  for (std::size_t i = 0; i < failures.size(); ++i) {
    if (!failures[i]) continue;
    const std::string where =
        "n=" + std::to_string(tasks[i].n) + ", rep=" + std::to_string(tasks[i].rep) + ": ";
    try {
      std::rethrow_exception(failures[i]);
    } catch (const Error& e) {
      const std::string msg = e.what();
      const std::size_t prefix = to_string(e.code()).size() + 2;
      throw Error(e.code(), where + (msg.size() >= prefix ? msg.substr(prefix) : msg));
    } catch (const std::exception& e) {
      throw Error(Errc::validation_error, where + e.what());
    }
  }

  std::map<std::size_t, std::vector<double>> abs_errors;
  std::size_t offset = 0;
  for (std::size_t n : cfg.n_values) {
    NSummary s;
    s.n = n;
    s.replications = cfg.replications;
    const auto m = static_cast<double>(cfg.replications);
    double sum = 0.0;
    double s_n_sum = 0.0;
    double d_sum = 0.0;
    auto& errs = abs_errors[n];
    for (std::size_t r = 0; r < cfg.replications; ++r) {
      const auto& row = results[offset + r];
      sum += row.beta_hat;
      s_n_sum += row.s_n;
      d_sum += row.d_n_sq;
      errs.push_back(row.abs_error);
    }
    s.mean_beta_hat = sum / m;
    double ss = 0.0;
    for (std::size_t r = 0; r < cfg.replications; ++r) {
      const double dev = results[offset + r].beta_hat - s.mean_beta_hat;
      ss += dev * dev;
    }
    s.sd_beta_hat = cfg.replications > 1 ? std::sqrt(ss / (m - 1.0)) : 0.0;
    s.mean_s_n = s_n_sum / m;
    s.mean_d_n_sq = d_sum / m;
    report.summaries.push_back(s);
    offset += cfg.replications;
  }

  const ConsistencyReport consistency = consistency_check(abs_errors, cfg.delta_consistency);
  for (auto& s : report.summaries) s.exceedance = consistency.exceedance.at(s.n);
  report.exceedance_strictly_decreasing = consistency.strictly_decreasing;
  report.exceedance_nonincreasing = consistency.nonincreasing;

  report.rows = std::move(results);
  if (cfg.replications >= kMinKsSize) {
    report.normality_n = cfg.n_values.back();
    const NormalityReport nr = ks_test(report.normality_z());
    report.ks_statistic = nr.ks_statistic;
    report.ks_p_value = nr.ks_p_value;
    report.z_mean = nr.mean;
    report.z_variance = nr.variance;
  }

  report.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

json report_to_json(const MonteCarloReport& r) {
  json summaries = json::array();
  json exceedance = json::object();
  for (const auto& s : r.summaries) {
    summaries.push_back({{"n", s.n},
                         {"replications", s.replications},
                         {"mean_beta_hat", s.mean_beta_hat},
                         {"sd_beta_hat", s.sd_beta_hat},
                         {"exceedance", s.exceedance},
                         {"mean_s_n", s.mean_s_n},
                         {"mean_d_n_sq", s.mean_d_n_sq}});
    exceedance[std::to_string(s.n)] = s.exceedance;
  }
  json rows = json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"n", row.n},
                    {"rep", row.rep},
                    {"beta_hat", row.beta_hat},
                    {"abs_error", row.abs_error},
                    {"z", row.z},
                    {"s_n", row.s_n},
                    {"d_n_sq", row.d_n_sq}});
  }
  const bool has_normality = r.normality_n > 0;
  const NSummary* last = r.summaries.empty() ? nullptr : &r.summaries.back();
  return {
      {"version", r.version},
      {"config", to_json(r.config)},
      {"model", {{"spectrum", r.spectrum},
                 {"pmf_masses", r.pmf_masses},
                 {"commutator_norm", r.commutator_norm}}},
      {"constants", {{"a", r.a},
                     {"a_std_error", r.a_std_error},
                     {"D", r.d_const},
                     {"D_std_error", r.d_std_error},
                     {"estimation_h", r.estimation_h},
                     {"mc_draws", r.mc_draws},
                     {"g_curve", to_json(r.g_values)}}},
      {"summaries", summaries},
      {"consistency", {{"delta", r.config.delta_consistency},
                       {"strictly_decreasing", r.exceedance_strictly_decreasing},
                       {"nonincreasing", r.exceedance_nonincreasing}}},
      {"normality", {{"n", r.normality_n},
                     {"ks_statistic", null_if_absent(has_normality, r.ks_statistic)},
                     {"ks_p_value", null_if_absent(has_normality, r.ks_p_value)},
                     {"mean", null_if_absent(has_normality, r.z_mean)},
                     {"variance", null_if_absent(has_normality, r.z_variance)}}},
      {"diagnostics", {{"s_n", last ? json(last->mean_s_n) : json(nullptr)},
                       {"d_n_sq", last ? json(last->mean_d_n_sq) : json(nullptr)},
                       {"a", r.a},
                       {"D", r.d_const},
                       {"ks_statistic", null_if_absent(has_normality, r.ks_statistic)},
                       {"ks_p_value", null_if_absent(has_normality, r.ks_p_value)},
                       {"exceedance", exceedance}}},
      {"replications", rows},
      {"wall_time_seconds", r.wall_time_seconds},
  };
}

MonteCarloReport report_from_json(const json& j) {
  try {
    MonteCarloReport r;
    r.version = j.at("version").get<std::string>();
    r.config = config_from_json(j.at("config"));
    const auto& model = j.at("model");
    r.spectrum = model.at("spectrum").get<std::vector<double>>();
    r.pmf_masses = model.at("pmf_masses").get<std::vector<double>>();
    r.commutator_norm = model.at("commutator_norm").get<double>();
    const auto& k = j.at("constants");
    r.a = k.at("a").get<double>();
    r.a_std_error = k.at("a_std_error").get<double>();
    r.d_const = k.at("D").get<double>();
    r.d_std_error = k.at("D_std_error").get<double>();
    r.estimation_h = k.at("estimation_h").get<double>();
    r.mc_draws = k.at("mc_draws").get<std::size_t>();
    r.g_values = g_curve_from_json(k.at("g_curve"));
    for (const auto& s : j.at("summaries")) {
      r.summaries.push_back(NSummary{s.at("n").get<std::size_t>(),
                                     s.at("replications").get<std::size_t>(),
                                     s.at("mean_beta_hat").get<double>(),
                                     s.at("sd_beta_hat").get<double>(),
                                     s.at("exceedance").get<double>(),
                                     s.at("mean_s_n").get<double>(),
                                     s.at("mean_d_n_sq").get<double>()});
    }
    const auto& c = j.at("consistency");
    r.exceedance_strictly_decreasing = c.at("strictly_decreasing").get<bool>();
    r.exceedance_nonincreasing = c.at("nonincreasing").get<bool>();
    const auto& nr = j.at("normality");
    r.normality_n = nr.at("n").get<std::size_t>();
    r.ks_statistic = number_or_zero(nr.at("ks_statistic"));
    r.ks_p_value = number_or_zero(nr.at("ks_p_value"));
    r.z_mean = number_or_zero(nr.at("mean"));
    r.z_variance = number_or_zero(nr.at("variance"));
    for (const auto& row : j.at("replications")) {
      r.rows.push_back(ReplicationResult{row.at("n").get<std::size_t>(),
                                         row.at("rep").get<std::size_t>(),
                                         row.at("beta_hat").get<double>(),
                                         row.at("abs_error").get<double>(),
                                         row.at("z").get<double>(),
                                         row.at("s_n").get<double>(),
                                         row.at("d_n_sq").get<double>()});
    }
    r.wall_time_seconds = j.at("wall_time_seconds").get<double>();
    return r;
  } catch (const json::exception& e) {
    throw Error(Errc::validation_error, std::string("malformed report: ") + e.what());
  }
}

void write_report_csv(std::ostream& out, const MonteCarloReport& report) {
  out << kReportCsvHeader << '\n';
  for (const auto& row : report.rows) {
    out << row.n << ',' << row.rep << ',' << format_number(row.beta_hat) << ','
        << format_number(row.abs_error) << ',' << format_number(row.z) << '\n';
  }
}

void emit_report(const MonteCarloReport& report, ReportFormat format,
                 const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io_failure, "cannot open '" + path.string() + "' for writing");
  if (format == ReportFormat::json) {
    out << report_to_json(report).dump(2) << '\n';
  } else {
    write_report_csv(out, report);
  }
  out.flush();
  if (!out) throw Error(Errc::io_failure, "failed writing '" + path.string() + "'");
}

}  // namespace qregress
