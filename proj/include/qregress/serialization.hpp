#pragma once

// JSON and CSV forms of the domain types. Numbers are written in shortest
// round-trip form so documents reparse to identical doubles.

#include "qregress/asymptotics.hpp"
#include "qregress/estimators.hpp"
#include "qregress/loss.hpp"
#include "qregress/operator_core.hpp"
#include "qregress/sampling.hpp"

#include <json.hpp>

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace qregress {

using json = nlohmann::json;

// { "dim": n, "entries": [[...], ...] }
json to_json(const SymmetricOperator& op);
json to_json(const QuantumState& state);
SymmetricOperator operator_from_json(const json& j);
QuantumState state_from_json(const json& j);

// { "eigenvalues": [...], "projections": [[[...]]], "cluster_tol": t }
json to_json(const SpectralDecomposition& d);
json to_json(const EigenPMF& pmf);

json to_json(const LossFunction& loss);
// Accepts "huber:1.5" or { "family": "huber", "c": 1.5 }.
LossFunction loss_from_json(const json& j);

json to_json(const ErrorModel& model);
// Accepts { "family": "gaussian", "sigma": 1 } and friends.
ErrorModel error_model_from_json(const json& j);
// "gaussian:1", "laplace:1", "student_t:5:1", "contaminated:1:10:0.05"
ErrorModel parse_error_model(std::string_view spec);

// { "beta_hat", "objective_value", "solver", "iterations", "minimizer_interval" }
json to_json(const EstimatorResult& r);

json to_json(const Sample& s);
json samples_to_json(const std::vector<Sample>& samples);
std::vector<Sample> samples_from_json(const json& j);

inline constexpr std::string_view kSampleCsvHeader = "lambda,mu,eigenvector_index,error";
void write_samples_csv(std::ostream& out, const std::vector<Sample>& samples);
// Throws Errc::validation_error on a bad header or malformed row.
std::vector<Sample> read_samples_csv(std::istream& in);

json to_json(const GCurve& g);
GCurve g_curve_from_json(const json& j);

std::string format_number(double x);

}  // namespace qregress
