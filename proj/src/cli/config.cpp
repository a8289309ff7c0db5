#include "ztd/cli/config.hpp"

#include <openssl/evp.h>

#include <array>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "ztd/error.hpp"

namespace ztd::cli {

using nlohmann::json;

namespace {

// 1-based line of the first occurrence of "key" in the source text; 0 if absent.
int line_of(std::string_view text, const std::string& key) {
  const std::string quoted = "\"" + key + "\"";
  const auto pos = text.find(quoted);
  if (pos == std::string_view::npos) return 0;
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<long>(pos), '\n'));
}

std::string leaf(const std::string& path) {
  const auto dot = path.rfind('.');
  return dot == std::string::npos ? path : path.substr(dot + 1);
}

class Reader {
 public:
  explicit Reader(std::string_view text) : text_(text) {}

  [[noreturn]] void fail(const std::string& field, const std::string& reason) const {
    throw ValidationError(field, reason, line_of(text_, leaf(field)));
  }

  void reject_unknown(const json& obj, const std::string& prefix,
                      std::initializer_list<const char*> allowed) const {
    if (!obj.is_object()) fail(prefix.empty() ? "<root>" : prefix, "expected an object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, value] : obj.items()) {
      if (!ok.count(key)) fail(prefix.empty() ? key : prefix + "." + key, "unknown key");
    }
  }

  void number(const json& obj, const char* key, const std::string& prefix, double& out) const {
    if (!obj.contains(key)) return;
    const auto& v = obj.at(key);
    if (!v.is_number()) fail(join(prefix, key), "expected a number");
    out = v.get<double>();
  }

  template <typename Int>
  void integer(const json& obj, const char* key, const std::string& prefix, Int& out) const {
    if (!obj.contains(key)) return;
    const auto& v = obj.at(key);
    if (!v.is_number_integer()) fail(join(prefix, key), "expected an integer");
    if constexpr (std::is_unsigned_v<Int>) {
      if (v.is_number_unsigned()) {
        out = v.get<Int>();
      } else if (v.get<long long>() >= 0) {
        out = static_cast<Int>(v.get<long long>());
      } else {
        fail(join(prefix, key), "must be nonnegative");
      }
    } else {
      const auto wide = v.get<long long>();
      if (wide < std::numeric_limits<Int>::min() || wide > std::numeric_limits<Int>::max()) {
        fail(join(prefix, key), "out of range");
      }
      out = static_cast<Int>(wide);
    }
  }

  void string(const json& obj, const char* key, const std::string& prefix, std::string& out) const {
    if (!obj.contains(key)) return;
    const auto& v = obj.at(key);
    if (!v.is_string()) fail(join(prefix, key), "expected a string");
    out = v.get<std::string>();
  }

  void boolean(const json& obj, const char* key, const std::string& prefix, bool& out) const {
    if (!obj.contains(key)) return;
    const auto& v = obj.at(key);
    if (!v.is_boolean()) fail(join(prefix, key), "expected a boolean");
    out = v.get<bool>();
  }

  static std::string join(const std::string& prefix, const char* key) {
    return prefix.empty() ? std::string(key) : prefix + "." + key;
  }

  std::string_view text() const { return text_; }

 private:
  std::string_view text_;
};

void read_scenario(const Reader& r, const json& obj, const std::string& prefix, Scenario& s) {
  r.reject_unknown(obj, prefix, {"p_a_d", "p_u_d", "p_a_n", "p_u_n"});
  r.number(obj, "p_a_d", prefix, s.p_a_d);
  r.number(obj, "p_u_d", prefix, s.p_u_d);
  r.number(obj, "p_a_n", prefix, s.p_a_n);
  r.number(obj, "p_u_n", prefix, s.p_u_n);
}

void read_power_law(const Reader& r, const json& obj, const std::string& prefix, PowerLawSchedule& s) {
  r.reject_unknown(obj, prefix, {"scale", "offset", "exponent"});
  r.number(obj, "scale", prefix, s.scale);
  r.number(obj, "offset", prefix, s.offset);
  r.number(obj, "exponent", prefix, s.exponent);
}

void read_pomdp(const Reader& r, const json& obj, PomdpConfig& p) {
  const std::string pre = "pomdp";
  r.reject_unknown(obj, pre, {"q_a", "q_u", "cost", "rho", "horizon", "b0_legit"});
  r.number(obj, "q_a", pre, p.q_a);
  r.number(obj, "q_u", pre, p.q_u);
  r.number(obj, "rho", pre, p.rho);
  r.integer(obj, "horizon", pre, p.horizon);
  r.number(obj, "b0_legit", pre, p.b0_legit);
  if (obj.contains("cost")) {
    const auto& c = obj.at("cost");
    auto is_row = [](const json& row) {
      return row.is_array() && row.size() == 2 && row[0].is_number() && row[1].is_number();
    };
    if (!c.is_array() || c.size() != 2 || !is_row(c[0]) || !is_row(c[1])) {
      r.fail("pomdp.cost", "expected a 2x2 array of numbers [[C00,C01],[C10,C11]]");
    }
    for (int s = 0; s < 2; ++s) {
      for (int a = 0; a < 2; ++a) p.cost[s][a] = c[s][a].get<double>();
    }
  }
}

void read_dist(const Reader& r, const json& obj, ScenarioDistConfig& d) {
  const std::string pre = "scenario_dist";
  r.reject_unknown(obj, pre,
                   {"family", "field", "lo", "hi", "mean", "concentration", "base", "histogram_path"});
  std::string family = d.family == DistFamily::Histogram ? "histogram" : "scaled_beta";
  r.string(obj, "family", pre, family);
  if (family == "scaled_beta") {
    d.family = DistFamily::ScaledBeta;
  } else if (family == "histogram") {
    d.family = DistFamily::Histogram;
  } else {
    r.fail("scenario_dist.family", "expected 'scaled_beta' or 'histogram'");
  }
  std::string field(field_name(d.field));
  r.string(obj, "field", pre, field);
  const auto parsed = parse_field(field);
  if (!parsed) r.fail("scenario_dist.field", "expected one of p_a_d, p_u_d, p_a_n, p_u_n");
  d.field = *parsed;
  r.number(obj, "lo", pre, d.lo);
  r.number(obj, "hi", pre, d.hi);
  r.number(obj, "mean", pre, d.mean);
  r.number(obj, "concentration", pre, d.concentration);
  if (obj.contains("base")) read_scenario(r, obj.at("base"), pre + ".base", d.base);
  r.string(obj, "histogram_path", pre, d.histogram_path);
}

void read_training(const Reader& r, const json& obj, TrainingConfig& t) {
  const std::string pre = "training";
  r.reject_unknown(obj, pre,
                   {"mode", "batch_size", "n_scenarios", "max_iters", "tau_init", "stop_window",
                    "n_rollouts", "schedule"});
  std::string mode(mode_name(t.mode));
  r.string(obj, "mode", pre, mode);
  if (mode == "agnostic") {
    t.mode = TrainingMode::Agnostic;
  } else if (mode == "robust") {
    t.mode = TrainingMode::Robust;
  } else {
    r.fail("training.mode", "expected 'agnostic' or 'robust'");
  }
  r.integer(obj, "batch_size", pre, t.batch_size);
  r.integer(obj, "n_scenarios", pre, t.n_scenarios);
  r.integer(obj, "max_iters", pre, t.max_iters);
  r.number(obj, "tau_init", pre, t.tau_init);
  r.integer(obj, "stop_window", pre, t.stop_window);
  r.integer(obj, "n_rollouts", pre, t.n_rollouts);
  if (obj.contains("schedule")) {
    const auto& s = obj.at("schedule");
    const std::string spre = "training.schedule";
    r.reject_unknown(s, spre, {"eta", "alpha", "beta", "gamma", "epsilon"});
    if (s.contains("eta")) read_power_law(r, s.at("eta"), spre + ".eta", t.schedule.eta);
    if (s.contains("alpha")) read_power_law(r, s.at("alpha"), spre + ".alpha", t.schedule.alpha);
    if (s.contains("beta")) read_power_law(r, s.at("beta"), spre + ".beta", t.schedule.beta);
    r.number(s, "gamma", spre, t.schedule.gamma);
    r.number(s, "epsilon", spre, t.schedule.epsilon);
  }
}

void read_evaluation(const Reader& r, const json& obj, EvaluationConfig& e) {
  const std::string pre = "evaluation";
  r.reject_unknown(obj, pre,
                   {"n_seeds", "test_size", "grid_step", "n_rollouts", "baseline_rollouts",
                    "sweep_points", "sweep_repeats", "expected_cost_baseline"});
  r.integer(obj, "n_seeds", pre, e.n_seeds);
  r.integer(obj, "test_size", pre, e.test_size);
  r.number(obj, "grid_step", pre, e.grid_step);
  r.integer(obj, "n_rollouts", pre, e.n_rollouts);
  r.integer(obj, "baseline_rollouts", pre, e.baseline_rollouts);
  r.integer(obj, "sweep_points", pre, e.sweep_points);
  r.integer(obj, "sweep_repeats", pre, e.sweep_repeats);
  r.boolean(obj, "expected_cost_baseline", pre, e.expected_cost_baseline);
}

// Maps InvalidArgument from library validators onto ValidationError with a
// field name; the library messages start with the field.
template <typename Fn>
void check(std::string_view text, const std::string& prefix, Fn&& fn) {
  try {
    fn();
  } catch (const InvalidArgument& e) {
    std::string msg = e.what();
    const auto space = msg.find(' ');
    const std::string key = msg.substr(0, space);
    throw ValidationError(prefix + "." + key, space == std::string::npos ? msg : msg.substr(space + 1),
                          line_of(text, leaf(key)));
  }
}

void validate_text(const RunConfig& c, std::string_view text) {
  auto fail = [&](const std::string& field, const std::string& reason) {
    throw ValidationError(field, reason, line_of(text, leaf(field)));
  };
  check(text, "pomdp", [&] { c.pomdp.validate(); });
  check(text, "training.schedule", [&] { c.training.schedule.validate(); });

  const auto& d = c.scenario_dist;
  if (!in_threshold_regime(d.base)) fail("scenario_dist.base", "base scenario outside the threshold regime");
  if (!(d.lo < d.hi)) fail("scenario_dist.hi", "must exceed lo");
  if (d.lo < 0.0 || d.hi > 1.0) fail("scenario_dist.lo", "support must lie in [0,1]");
  if (!in_threshold_regime(with_field(d.base, d.field, d.lo)) ||
      !in_threshold_regime(with_field(d.base, d.field, d.hi))) {
    fail("scenario_dist.hi", "support leaves the threshold regime for the base scenario");
  }
  if (d.family == DistFamily::ScaledBeta) {
    if (!(d.lo < d.mean && d.mean < d.hi)) fail("scenario_dist.mean", "must lie strictly inside (lo, hi)");
    if (!(d.concentration > 0.0)) fail("scenario_dist.concentration", "must be positive");
  } else {
    if (d.histogram_path.empty()) fail("scenario_dist.histogram_path", "required for the histogram family");
    if (!std::filesystem::is_regular_file(d.histogram_path)) {
      fail("scenario_dist.histogram_path", "file does not exist: " + d.histogram_path);
    }
  }

  const auto& t = c.training;
  if (t.batch_size < 1) fail("training.batch_size", "must be >= 1");
  if (t.n_scenarios < 1) fail("training.n_scenarios", "must be >= 1");
  if (t.batch_size > t.n_scenarios) fail("training.batch_size", "must not exceed n_scenarios");
  if (t.max_iters < 1) fail("training.max_iters", "must be >= 1");
  if (!(t.tau_init >= 0.0 && t.tau_init <= 1.0)) fail("training.tau_init", "must lie in [0,1]");
  if (t.stop_window < 1) fail("training.stop_window", "must be >= 1");
  if (t.n_rollouts < 1) fail("training.n_rollouts", "must be >= 1");

  const auto& e = c.evaluation;
  if (e.n_seeds < 1) fail("evaluation.n_seeds", "must be >= 1");
  if (e.test_size < 1) fail("evaluation.test_size", "must be >= 1");
  if (!(e.grid_step > 0.0 && e.grid_step <= 0.1)) fail("evaluation.grid_step", "must lie in (0, 0.1]");
  if (e.n_rollouts < 1) fail("evaluation.n_rollouts", "must be >= 1");
  if (e.baseline_rollouts < 1) fail("evaluation.baseline_rollouts", "must be >= 1");
  if (e.sweep_points < 2) fail("evaluation.sweep_points", "must be >= 2");
  if (e.sweep_repeats < 1) fail("evaluation.sweep_repeats", "must be >= 1");

  if (c.jobs < 1) fail("jobs", "must be >= 1");
  if (c.output_dir.empty()) fail("output_dir", "must not be empty");
}

std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[md[i] >> 4]);
    out.push_back(kHex[md[i] & 0xF]);
  }
  return out;
}

}  // namespace

void validate(const RunConfig& config) { validate_text(config, {}); }

RunConfig parse_config(std::string_view text, const std::string& base_dir) {
  json root;
  const bool blank = text.find_first_not_of(" \t\r\n") == std::string_view::npos;
  if (blank) {
    root = json::object();
  } else {
    try {
      root = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
      const auto upto = std::min<std::size_t>(e.byte, text.size());
      const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<long>(upto), '\n');
      throw ParseError("line " + std::to_string(line) + ": " + e.what());
    }
  }

  const Reader r(text);
  RunConfig c;
  r.reject_unknown(root, "",
                   {"pomdp", "scenario_dist", "training", "evaluation", "master_seed", "output_dir", "jobs"});
  if (root.contains("pomdp")) read_pomdp(r, root.at("pomdp"), c.pomdp);
  if (root.contains("scenario_dist")) read_dist(r, root.at("scenario_dist"), c.scenario_dist);
  if (root.contains("training")) read_training(r, root.at("training"), c.training);
  if (root.contains("evaluation")) read_evaluation(r, root.at("evaluation"), c.evaluation);
  r.integer(root, "master_seed", "", c.master_seed);
  r.string(root, "output_dir", "", c.output_dir);
  r.integer(root, "jobs", "", c.jobs);

  auto& hist = c.scenario_dist.histogram_path;
  if (!hist.empty() && std::filesystem::path(hist).is_relative()) {
    hist = std::filesystem::weakly_canonical(std::filesystem::absolute(base_dir) / hist).string();
  }
  validate_text(c, text);
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open config file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  const auto dir = std::filesystem::path(path).parent_path();
  return parse_config(buf.str(), dir.empty() ? "." : dir.string());
}

json to_json(const RunConfig& c) {
  auto power_law = [](const PowerLawSchedule& s) {
    return json{{"scale", s.scale}, {"offset", s.offset}, {"exponent", s.exponent}};
  };
  auto scenario = [](const Scenario& s) {
    return json{{"p_a_d", s.p_a_d}, {"p_u_d", s.p_u_d}, {"p_a_n", s.p_a_n}, {"p_u_n", s.p_u_n}};
  };
  const auto& p = c.pomdp;
  const auto& d = c.scenario_dist;
  const auto& t = c.training;
  const auto& e = c.evaluation;
  json dist{{"family", d.family == DistFamily::Histogram ? "histogram" : "scaled_beta"},
            {"field", std::string(field_name(d.field))},
            {"lo", d.lo},
            {"hi", d.hi},
            {"mean", d.mean},
            {"concentration", d.concentration},
            {"base", scenario(d.base)}};
  if (!d.histogram_path.empty()) dist["histogram_path"] = d.histogram_path;
  return json{
      {"pomdp",
       {{"q_a", p.q_a},
        {"q_u", p.q_u},
        {"cost", {{p.cost[0][0], p.cost[0][1]}, {p.cost[1][0], p.cost[1][1]}}},
        {"rho", p.rho},
        {"horizon", p.horizon},
        {"b0_legit", p.b0_legit}}},
      {"scenario_dist", dist},
      {"training",
       {{"mode", std::string(mode_name(t.mode))},
        {"batch_size", t.batch_size},
        {"n_scenarios", t.n_scenarios},
        {"max_iters", t.max_iters},
        {"tau_init", t.tau_init},
        {"stop_window", t.stop_window},
        {"n_rollouts", t.n_rollouts},
        {"schedule",
         {{"eta", power_law(t.schedule.eta)},
          {"alpha", power_law(t.schedule.alpha)},
          {"beta", power_law(t.schedule.beta)},
          {"gamma", t.schedule.gamma},
          {"epsilon", t.schedule.epsilon}}}}},
      {"evaluation",
       {{"n_seeds", e.n_seeds},
        {"test_size", e.test_size},
        {"grid_step", e.grid_step},
        {"n_rollouts", e.n_rollouts},
        {"baseline_rollouts", e.baseline_rollouts},
        {"sweep_points", e.sweep_points},
        {"sweep_repeats", e.sweep_repeats},
        {"expected_cost_baseline", e.expected_cost_baseline}}},
      {"master_seed", c.master_seed},
      {"output_dir", c.output_dir},
      {"jobs", c.jobs}};
}

std::string serialize_config(const RunConfig& config) { return to_json(config).dump(2) + "\n"; }

std::string config_digest(const RunConfig& config) {
  json j = to_json(config);
  j.erase("output_dir");
  j.erase("jobs");
  auto& dist = j["scenario_dist"];
  if (config.scenario_dist.family == DistFamily::Histogram) {
    std::ifstream in(config.scenario_dist.histogram_path, std::ios::binary);
    if (!in) throw ParseError("cannot open histogram file " + config.scenario_dist.histogram_path);
    std::ostringstream buf;
    buf << in.rdbuf();
    dist["histogram_sha256"] = sha256_hex(buf.str());
  }
  dist.erase("histogram_path");
  return sha256_hex(j.dump());
}

ScenarioDistribution build_distribution(const RunConfig& config) {
  const auto& d = config.scenario_dist;
  if (d.family == DistFamily::ScaledBeta) {
    return scaled_beta_from_mean(d.lo, d.hi, d.mean, d.concentration, d.field, d.base);
  }
  const auto rows = read_histogram_csv(d.histogram_path);
  return ingest_histogram(rows, d.field, d.lo, d.hi, d.base);
}

}  // namespace ztd::cli
