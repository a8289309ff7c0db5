#include "ztd/cli/report.hpp"

#include <charconv>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ztd/error.hpp"

namespace ztd::cli {

std::string format_double(double x) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc{}) throw Error("double formatting failed");
  return std::string(buf, ptr);
}

std::string history_csv(const MetaTrainerState& state) {
  std::string out = "iter,tau_meta,stop_metric\n";
  for (const auto& rec : state.history) {
    out += std::to_string(rec.iter) + ',' + format_double(rec.tau_meta) + ',' +
           format_double(rec.stop_metric) + '\n';
  }
  return out;
}

std::string table_csv(std::span<const PolicyRow> rows) {
  std::string out = "label,mean_cost,std_dev,n_seeds\n";
  for (const auto& r : rows) {
    out += r.label + ',' + format_double(r.mean_cost) + ',' + format_double(r.std_dev) + ',' +
           std::to_string(r.n_seeds) + '\n';
  }
  return out;
}

std::string detail_csv(std::span<const DetailRow> rows) {
  std::string out = "label,p_a_d,p_u_d,p_a_n,p_u_n,tau,cost\n";
  for (const auto& r : rows) {
    out += r.label + ',' + format_double(r.theta.p_a_d) + ',' + format_double(r.theta.p_u_d) + ',' +
           format_double(r.theta.p_a_n) + ',' + format_double(r.theta.p_u_n) + ',' +
           format_double(r.tau) + ',' + format_double(r.cost) + '\n';
  }
  return out;
}

std::string sweep_csv(std::span<const SweepRow> rows) {
  std::string out = "param_value,tau_mean,tau_std\n";
  for (const auto& r : rows) {
    out += format_double(r.param_value) + ',' + format_double(r.tau_mean) + ',' +
           format_double(r.tau_std) + '\n';
  }
  return out;
}

std::string scenarios_csv(const ScenarioSet& set, std::span<const double> weights) {
  std::string out = "index,p_a_d,p_u_d,p_a_n,p_u_n,weight\n";
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto& s = set.scenarios[i];
    out += std::to_string(i) + ',' + format_double(s.p_a_d) + ',' + format_double(s.p_u_d) + ',' +
           format_double(s.p_a_n) + ',' + format_double(s.p_u_n) + ',' +
           format_double(i < weights.size() ? weights[i] : 0.0) + '\n';
  }
  return out;
}

std::string support_csv(const EmpiricalScenarioDist& dist, ScenarioField field) {
  std::string out = "param_value,weight\n";
  for (std::size_t i = 0; i < dist.support.size(); ++i) {
    out += format_double(get(dist.support[i], field)) + ',' + format_double(dist.weights[i]) + '\n';
  }
  return out;
}

void write_file(const std::string& path, const std::string& contents) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot write " + path);
  f << contents;
  if (!f) throw Error("write failed for " + path);
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

double read_policy_tau(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open policy file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("policy file " + path + ": " + e.what());
  }
  if (!j.is_object() || !j.contains("tau_meta") || !j["tau_meta"].is_number()) {
    throw ParseError("policy file " + path + " has no numeric tau_meta");
  }
  const double tau = j["tau_meta"].get<double>();
  if (!(tau >= 0.0 && tau <= 1.0)) throw ValidationError("tau_meta", "must lie in [0,1]");
  return tau;
}

}  // namespace ztd::cli
