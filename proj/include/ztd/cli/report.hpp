#pragma once

#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ztd/eval.hpp"
#include "ztd/meta.hpp"
#include "ztd/scenario_dist.hpp"

namespace ztd::cli {

/// Shortest decimal form that round-trips to the same double.
std::string format_double(double x);

std::string history_csv(const MetaTrainerState& state);
std::string table_csv(std::span<const PolicyRow> rows);
std::string detail_csv(std::span<const DetailRow> rows);
std::string sweep_csv(std::span<const SweepRow> rows);
/// Training scenarios with their final weights.
std::string scenarios_csv(const ScenarioSet& set, std::span<const double> weights);
/// Support values of an empirical distribution along `field`.
std::string support_csv(const EmpiricalScenarioDist& dist, ScenarioField field);

/// Writes `contents` to `path`, creating parent directories.
void write_file(const std::string& path, const std::string& contents);

/// Current UTC time as an ISO-8601 string.
std::string utc_timestamp();

/// Reads `tau_meta` from a policy file written by the train commands.
double read_policy_tau(const std::string& path);

}  // namespace ztd::cli
