#include "relaymec/report_io.hpp"

#include <cmath>
#include <limits>

#include <json.hpp>

#include "relaymec/errors.hpp"

namespace relaymec {

namespace {

using nlohmann::json;

// +-inf and NaN have no JSON literal; nlohmann already dumps them as null
json encode_double(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

double decode_double(const json& j, const char* field) {
  if (j.is_null()) return std::numeric_limits<double>::infinity();
  if (!j.is_number()) {
    throw ConfigError(std::string("expected a number for '") + field + "'", 0,
                      field);
  }
  return j.get<double>();
}

std::vector<double> decode_vector(const json& j, const char* field) {
  if (!j.is_array()) {
    throw ConfigError(std::string("expected an array for '") + field + "'", 0,
                      field);
  }
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& item : j) out.push_back(decode_double(item, field));
  return out;
}

const json& field_of(const json& j, const char* name) {
  const auto it = j.find(name);
  if (it == j.end()) {
    throw ConfigError(std::string("missing field '") + name + "'", 0, name);
  }
  return *it;
}

}  // namespace

std::string report_to_json(const SolveReport& r) {
  json j;
  j["method"] = r.method;
  j["feasibility"] =
      r.feasibility == Feasibility::feasible ? "feasible" : "infeasible";
  j["tau_r_lb"] = encode_double(r.tau_r_lb);
  j["direct_rate"] = encode_double(r.direct_rate);
  j["solution"] = {
      {"tau_r", r.solution.tau_r},     {"t_loc", r.solution.t_loc},
      {"t_off", r.solution.t_off},     {"e_off", r.solution.e_off},
      {"r_mec", r.solution.r_mec},     {"f_mec", r.solution.f_mec},
      {"r_local", r.solution.r_local}, {"r_relay", r.solution.r_relay},
      {"objective", r.solution.objective}};
  j["dual"] = {{"zeta", r.dual.zeta},
               {"mu", r.dual.mu},
               {"lambda", r.dual.lambda},
               {"eta", r.dual.eta}};
  j["dual_value"] = r.dual_value;
  j["primal_value"] = r.primal_value;
  j["gap"] = r.gap;
  j["iterations"] = r.iterations;
  json trace = json::array();
  for (const auto& row : r.trace) {
    trace.push_back({{"iteration", row.iteration},
                     {"best_value", row.best_value},
                     {"log_volume", row.log_volume}});
  }
  j["trace"] = std::move(trace);
  return j.dump(2) + "\n";
}

SolveReport report_from_json(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ConfigError("malformed report JSON");

  SolveReport r;
  r.method = field_of(j, "method").get<std::string>();
  const std::string feas = field_of(j, "feasibility").get<std::string>();
  if (feas == "feasible") {
    r.feasibility = Feasibility::feasible;
  } else if (feas == "infeasible") {
    r.feasibility = Feasibility::infeasible;
  } else {
    throw ConfigError("unknown feasibility '" + feas + "'", 0, "feasibility");
  }
  r.tau_r_lb = decode_double(field_of(j, "tau_r_lb"), "tau_r_lb");
  r.direct_rate = decode_double(field_of(j, "direct_rate"), "direct_rate");

  const json& sol = field_of(j, "solution");
  r.solution.tau_r = decode_double(field_of(sol, "tau_r"), "tau_r");
  r.solution.t_loc = decode_vector(field_of(sol, "t_loc"), "t_loc");
  r.solution.t_off = decode_vector(field_of(sol, "t_off"), "t_off");
  r.solution.e_off = decode_vector(field_of(sol, "e_off"), "e_off");
  r.solution.r_mec = decode_vector(field_of(sol, "r_mec"), "r_mec");
  r.solution.f_mec = decode_vector(field_of(sol, "f_mec"), "f_mec");
  r.solution.r_local = decode_vector(field_of(sol, "r_local"), "r_local");
  r.solution.r_relay = decode_double(field_of(sol, "r_relay"), "r_relay");
  r.solution.objective =
      decode_double(field_of(sol, "objective"), "objective");

  const json& dual = field_of(j, "dual");
  r.dual.zeta = decode_double(field_of(dual, "zeta"), "zeta");
  r.dual.mu = decode_vector(field_of(dual, "mu"), "mu");
  r.dual.lambda = decode_vector(field_of(dual, "lambda"), "lambda");
  r.dual.eta = decode_vector(field_of(dual, "eta"), "eta");

  r.dual_value = decode_double(field_of(j, "dual_value"), "dual_value");
  r.primal_value = decode_double(field_of(j, "primal_value"), "primal_value");
  r.gap = decode_double(field_of(j, "gap"), "gap");
  r.iterations = field_of(j, "iterations").get<long>();
  for (const auto& row : field_of(j, "trace")) {
    DualTraceRow t;
    t.iteration = field_of(row, "iteration").get<long>();
    t.best_value = decode_double(field_of(row, "best_value"), "best_value");
    t.log_volume = decode_double(field_of(row, "log_volume"), "log_volume");
    r.trace.push_back(t);
  }
  return r;
}

}  // namespace relaymec
