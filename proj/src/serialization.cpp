#include "qregress/serialization.hpp"

#include "qregress/detail/numfmt.hpp"
#include "qregress/error.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

namespace qregress {

namespace {

json matrix_rows(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

template <class T>
T field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    throw Error(Errc::validation_error, std::string("missing field '") + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(Errc::validation_error, std::string("field '") + key + "': " + e.what());
  }
}

std::pair<std::size_t, RowList> dim_and_entries(const json& j) {
  return {field<std::size_t>(j, "dim"), field<RowList>(j, "entries")};
}

double parse_number(std::string_view text) {
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw Error(Errc::validation_error, "cannot parse number '" + std::string(text) + "'");
  }
  return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    parts.push_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

}  // namespace

std::string format_number(double x) { return detail::format_number(x); }

json to_json(const SymmetricOperator& op) {
  return {{"dim", op.dim()}, {"entries", matrix_rows(op.matrix())}};
}

json to_json(const QuantumState& state) {
  return {{"dim", state.dim()}, {"entries", matrix_rows(state.matrix())}};
}

SymmetricOperator operator_from_json(const json& j) {
  auto [dim, entries] = dim_and_entries(j);
  return make_symmetric(dim, entries);
}

QuantumState state_from_json(const json& j) {
  auto [dim, entries] = dim_and_entries(j);
  return make_state(dim, entries);
}

json to_json(const SpectralDecomposition& d) {
  json projections = json::array();
  for (const auto& p : d.projections) projections.push_back(matrix_rows(p));
  json ranks = json::array();
  for (std::size_t k = 0; k < d.size(); ++k) ranks.push_back(d.rank(k));
  return {{"eigenvalues", d.eigenvalues},
          {"ranks", ranks},
          {"projections", projections},
          {"cluster_tol", d.cluster_tol}};
}

json to_json(const EigenPMF& pmf) { return {{"support", pmf.support}, {"masses", pmf.masses}}; }

json to_json(const LossFunction& loss) {
  json j = {{"family", ""}};
  switch (loss.family()) {
    case LossFamily::square: j["family"] = "square"; break;
    case LossFamily::absolute: j["family"] = "absolute"; break;
    case LossFamily::huber: j = {{"family", "huber"}, {"c", loss.parameter()}}; break;
    case LossFamily::lq: j = {{"family", "lq"}, {"q", loss.parameter()}}; break;
    case LossFamily::quantile: j = {{"family", "quantile"}, {"alpha", loss.parameter()}}; break;
  }
  return j;
}

LossFunction loss_from_json(const json& j) {
  if (j.is_string()) return LossFunction::parse(j.get<std::string>());
  const auto family = field<std::string>(j, "family");
  if (family == "square") return LossFunction::square();
  if (family == "absolute") return LossFunction::absolute();
  if (family == "huber") {
    return j.contains("c") ? LossFunction::huber(field<double>(j, "c")) : LossFunction::huber();
  }
  if (family == "lq") return LossFunction::lq(field<double>(j, "q"));
  if (family == "quantile") return LossFunction::quantile(field<double>(j, "alpha"));
  throw Error(Errc::validation_error, "unknown loss family '" + family + "'");
}

json to_json(const ErrorModel& m) {
  switch (m.family()) {
    case ErrorFamily::gaussian: return {{"family", "gaussian"}, {"sigma", m.sigma()}};
    case ErrorFamily::laplace: return {{"family", "laplace"}, {"scale", m.scale()}};
    case ErrorFamily::student_t:
      return {{"family", "student_t"}, {"df", m.df()}, {"scale", m.scale()}};
    case ErrorFamily::contaminated:
      return {{"family", "contaminated"},
              {"sigma", m.sigma()},
              {"outlier_sigma", m.outlier_sigma()},
              {"outlier_prob", m.outlier_prob()}};
  }
  return {};
}

ErrorModel error_model_from_json(const json& j) {
  if (j.is_string()) return parse_error_model(j.get<std::string>());
  const auto family = field<std::string>(j, "family");
  if (family == "gaussian") return ErrorModel::gaussian(field<double>(j, "sigma"));
  if (family == "laplace") return ErrorModel::laplace(field<double>(j, "scale"));
  if (family == "student_t") {
    return ErrorModel::student_t(field<double>(j, "df"), j.value("scale", 1.0));
  }
  if (family == "contaminated") {
    return ErrorModel::contaminated(field<double>(j, "sigma"), field<double>(j, "outlier_sigma"),
                                    field<double>(j, "outlier_prob"));
  }
  throw Error(Errc::validation_error, "unknown error family '" + family + "'");
}

ErrorModel parse_error_model(std::string_view spec) {
  const auto parts = split(spec, ':');
  const auto name = parts.front();
  std::vector<double> args;
  for (std::size_t i = 1; i < parts.size(); ++i) args.push_back(parse_number(parts[i]));
  const auto need = [&](std::size_t k) {
    if (args.size() != k) {
      throw Error(Errc::validation_error, "error model '" + std::string(name) + "' takes " +
                                              std::to_string(k) + " parameter(s)");
    }
  };
  if (name == "gaussian") { need(1); return ErrorModel::gaussian(args[0]); }
  if (name == "laplace") { need(1); return ErrorModel::laplace(args[0]); }
  if (name == "student_t") {
    if (args.size() == 1) return ErrorModel::student_t(args[0], 1.0);
    need(2);
    return ErrorModel::student_t(args[0], args[1]);
  }
  if (name == "contaminated") { need(3); return ErrorModel::contaminated(args[0], args[1], args[2]); }
  throw Error(Errc::validation_error, "unknown error model '" + std::string(spec) + "'");
}

json to_json(const EstimatorResult& r) {
  json j = {{"beta_hat", r.beta_hat},
            {"objective_value", r.objective_value},
            {"solver", r.solver},
            {"iterations", r.iterations},
            {"minimizer_interval", nullptr}};
  if (r.minimizer_interval) {
    j["minimizer_interval"] = {r.minimizer_interval->first, r.minimizer_interval->second};
  }
  return j;
}

json to_json(const Sample& s) {
  return {{"lambda", s.lambda},
          {"mu", s.mu},
          {"eigenvector_index", s.eigenvector_index},
          {"error", s.error}};
}

json samples_to_json(const std::vector<Sample>& samples) {
  json arr = json::array();
  for (const auto& s : samples) arr.push_back(to_json(s));
  return arr;
}

std::vector<Sample> samples_from_json(const json& j) {
  if (!j.is_array()) throw Error(Errc::validation_error, "samples must be a JSON array");
  std::vector<Sample> out;
  out.reserve(j.size());
  for (const auto& row : j) {
    out.push_back(Sample{field<double>(row, "lambda"), field<double>(row, "mu"),
                         row.value("eigenvector_index", std::size_t{0}),
                         row.value("error", 0.0)});
  }
  return out;
}

void write_samples_csv(std::ostream& out, const std::vector<Sample>& samples) {
  out << kSampleCsvHeader << '\n';
  for (const auto& s : samples) {
    out << format_number(s.lambda) << ',' << format_number(s.mu) << ',' << s.eigenvector_index
        << ',' << format_number(s.error) << '\n';
  }
}

std::vector<Sample> read_samples_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(Errc::validation_error, "empty sample CSV");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  // lambda,mu alone is accepted for externally produced data.
  const bool full = line == kSampleCsvHeader;
  if (!full && line != "lambda,mu") {
    throw Error(Errc::validation_error, "unexpected CSV header '" + line + "'");
  }
  std::vector<Sample> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cols = split(line, ',');
    if (cols.size() != (full ? 4u : 2u)) {
      throw Error(Errc::validation_error, "CSV line " + std::to_string(lineno) + " has " +
                                              std::to_string(cols.size()) + " columns");
    }
    Sample s;
    s.lambda = parse_number(cols[0]);
    s.mu = parse_number(cols[1]);
    if (full) {
      s.eigenvector_index = static_cast<std::size_t>(parse_number(cols[2]));
      s.error = parse_number(cols[3]);
    }
    out.push_back(s);
  }
  return out;
}

json to_json(const GCurve& g) {
  return {{"c", g.c}, {"g", g.g}, {"std_error", g.std_error}};
}

GCurve g_curve_from_json(const json& j) {
  return GCurve{field<std::vector<double>>(j, "c"), field<std::vector<double>>(j, "g"),
                field<std::vector<double>>(j, "std_error")};
}

}  // namespace qregress
