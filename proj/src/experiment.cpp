#include "gqh/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <json.hpp>

#include "gqh/chart.hpp"

namespace gqh {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& field, const std::string& what) {
  throw ConfigError("config field '" + field + "': " + what);
}

std::string join(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

const json* find(const json& obj, const char* key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

double get_number(const json& obj, const char* key, const std::string& prefix, std::optional<double> fallback) {
  const json* v = find(obj, key);
  if (!v) {
    if (!fallback) fail(join(prefix, key), "required");
    return *fallback;
  }
  if (!v->is_number()) fail(join(prefix, key), "expected a number");
  return v->get<double>();
}

std::size_t get_count(const json& obj, const char* key, const std::string& prefix, std::optional<std::size_t> fallback) {
  const json* v = find(obj, key);
  if (!v) {
    if (!fallback) fail(join(prefix, key), "required");
    return *fallback;
  }
  if (!v->is_number_integer() || v->get<long long>() < 0) fail(join(prefix, key), "expected a nonnegative integer");
  return v->get<std::size_t>();
}

bool get_bool(const json& obj, const char* key, const std::string& prefix, bool fallback) {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_boolean()) fail(join(prefix, key), "expected true or false");
  return v->get<bool>();
}

std::string get_string(const json& obj, const char* key, const std::string& prefix,
                       std::optional<std::string> fallback) {
  const json* v = find(obj, key);
  if (!v) {
    if (!fallback) fail(join(prefix, key), "required");
    return *fallback;
  }
  if (!v->is_string()) fail(join(prefix, key), "expected a string");
  return v->get<std::string>();
}

const json& get_object(const json& obj, const char* key, const std::string& prefix) {
  const json* v = find(obj, key);
  if (!v) fail(join(prefix, key), "required");
  if (!v->is_object()) fail(join(prefix, key), "expected an object");
  return *v;
}

void reject_unknown(const json& obj, const std::string& prefix, std::initializer_list<const char*> known) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (std::none_of(known.begin(), known.end(), [&](const char* k) { return it.key() == k; })) {
      fail(join(prefix, it.key()), "unknown field");
    }
  }
}

std::vector<Atom> parse_support(const json& v, const std::string& field) {
  if (!v.is_array() || v.empty()) fail(field, "expected a nonempty array of [value, probability] pairs");
  std::vector<Atom> out;
  for (const auto& pair : v) {
    if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number() || !pair[1].is_number()) {
      fail(field, "expected [value, probability] pairs");
    }
    out.push_back({pair[0].get<double>(), pair[1].get<double>()});
  }
  return out;
}

std::vector<std::size_t> parse_policy(const json& env, const std::string& prefix, std::size_t n_states,
                                      std::size_t n_actions, const std::string& default_mode,
                                      const std::vector<std::size_t>& named_default) {
  const json* v = find(env, "policy");
  if (v && v->is_array()) {
    std::vector<std::size_t> p;
    for (const auto& a : *v) {
      if (!a.is_number_integer() || a.get<long long>() < 0 || a.get<std::size_t>() >= n_actions) {
        fail(join(prefix, "policy"), "actions must be integers in [0, " + std::to_string(n_actions) + ")");
      }
      p.push_back(a.get<std::size_t>());
    }
    if (p.size() != n_states) fail(join(prefix, "policy"), "needs one action per state (" + std::to_string(n_states) + ")");
    return p;
  }
  const std::string mode = v ? (v->is_string() ? v->get<std::string>() : "") : default_mode;
  if (mode == "greedy") return {};
  if (!named_default.empty() && (mode == "advance" || mode == "flat")) return named_default;
  fail(join(prefix, "policy"), "expected \"greedy\", a named fixed policy, or an action array");
}

EnvironmentSpec parse_environment(const json& env, const std::filesystem::path& base_dir) {
  const std::string prefix = "environment";
  EnvironmentSpec spec;
  const std::string type = get_string(env, "type", prefix, std::nullopt);
  if (type == "chain") {
    reject_unknown(env, prefix, {"type", "length", "discount", "rewards", "gaussian", "policy", "oracle_horizon"});
    spec.kind = EnvironmentKind::Chain;
    const auto length = get_count(env, "length", prefix, std::nullopt);
    if (length < 2) fail(join(prefix, "length"), "must be >= 2");
    const double discount = get_number(env, "discount", prefix, 1.0);
    if (!(discount > 0.0 && discount <= 1.0)) fail(join(prefix, "discount"), "must lie in (0, 1]");
    std::vector<Atom> noise;
    if (const json* g = find(env, "gaussian")) {
      if (find(env, "rewards")) fail(join(prefix, "gaussian"), "give either rewards or gaussian, not both");
      if (!g->is_object()) fail(join(prefix, "gaussian"), "expected an object");
      const std::string gp = join(prefix, "gaussian");
      reject_unknown(*g, gp, {"mean", "std", "atoms"});
      const double std = get_number(*g, "std", gp, std::nullopt);
      const auto atoms = get_count(*g, "atoms", gp, 9);
      if (!(std > 0.0)) fail(join(gp, "std"), "must be positive");
      if (atoms < 2 || atoms > 64) fail(join(gp, "atoms"), "must lie in [2, 64]");
      noise = binomial_gaussian_support(get_number(*g, "mean", gp, 0.0), std, atoms);
    } else {
      const json* r = find(env, "rewards");
      if (!r) fail(join(prefix, "rewards"), "required (or give gaussian)");
      noise = parse_support(*r, join(prefix, "rewards"));
    }
    try {
      spec.mdp = chain_mdp(length, std::move(noise), discount);
    } catch (const std::invalid_argument& e) {
      fail(prefix, e.what());
    }
    spec.policy = parse_policy(env, prefix, spec.mdp.n_states, spec.mdp.n_actions, "advance",
                               std::vector<std::size_t>(spec.mdp.n_states, 0));
    spec.oracle_horizon = get_count(env, "oracle_horizon", prefix, length + 1);
  } else if (type == "mdp_file") {
    reject_unknown(env, prefix, {"type", "path", "policy", "oracle_horizon"});
    spec.kind = EnvironmentKind::MdpFile;
    auto path = std::filesystem::path(get_string(env, "path", prefix, std::nullopt));
    if (path.is_relative() && !base_dir.empty()) path = base_dir / path;
    try {
      spec.mdp = load_mdp(path);
    } catch (const std::invalid_argument& e) {
      fail(join(prefix, "path"), e.what());
    }
    spec.policy = parse_policy(env, prefix, spec.mdp.n_states, spec.mdp.n_actions, "greedy", {});
    spec.oracle_horizon = get_count(env, "oracle_horizon", prefix, 64);
  } else if (type == "sabr") {
    reject_unknown(env, prefix,
                   {"type", "spot0", "strike", "alpha0", "beta", "rho", "nu", "maturity", "steps",
                    "transaction_cost_rate", "contracts", "option", "positions", "spot_buckets", "bucket_range",
                    "policy"});
    spec.kind = EnvironmentKind::Sabr;
    SabrConfig c;
    c.spot0 = get_number(env, "spot0", prefix, c.spot0);
    c.strike = get_number(env, "strike", prefix, c.strike);
    c.alpha0 = get_number(env, "alpha0", prefix, c.alpha0);
    c.beta = get_number(env, "beta", prefix, c.beta);
    c.rho = get_number(env, "rho", prefix, c.rho);
    c.nu = get_number(env, "nu", prefix, c.nu);
    c.maturity = get_number(env, "maturity", prefix, c.maturity);
    c.steps = get_count(env, "steps", prefix, c.steps);
    c.transaction_cost_rate = get_number(env, "transaction_cost_rate", prefix, c.transaction_cost_rate);
    c.contracts = get_number(env, "contracts", prefix, c.contracts);
    c.spot_buckets = get_count(env, "spot_buckets", prefix, c.spot_buckets);
    c.bucket_range = get_number(env, "bucket_range", prefix, c.bucket_range);
    const std::string option = get_string(env, "option", prefix, "call");
    if (option == "call") {
      c.option = OptionKind::Call;
    } else if (option == "linear") {
      c.option = OptionKind::Linear;
    } else {
      fail(join(prefix, "option"), "expected \"call\" or \"linear\"");
    }
    if (const json* p = find(env, "positions")) {
      if (!p->is_array() || p->empty()) fail(join(prefix, "positions"), "expected a nonempty array of numbers");
      for (const auto& x : *p) {
        if (!x.is_number()) fail(join(prefix, "positions"), "expected numbers");
        c.positions.push_back(x.get<double>());
      }
    }
    try {
      c.validate();
    } catch (const std::invalid_argument& e) {
      fail(prefix, e.what());
    }
    spec.sabr = c;
    const SabrHedgingEnv probe(c);
    std::vector<std::size_t> flat;
    if (std::find(probe.positions().begin(), probe.positions().end(), 0.0) != probe.positions().end()) {
      flat.assign(probe.num_states(), probe.flat_action());
    }
    spec.policy = parse_policy(env, prefix, probe.num_states(), probe.num_actions(), "greedy", flat);
  } else {
    fail(join(prefix, "type"), "expected \"chain\", \"mdp_file\" or \"sabr\"");
  }
  return spec;
}

Arm parse_arm(const json& a, std::size_t index, double fallback_b) {
  const std::string prefix = "arms[" + std::to_string(index) + "]";
  if (!a.is_object()) fail(prefix, "expected an object");
  reject_unknown(a, prefix, {"name", "loss", "threshold", "adaptive"});
  Arm arm;
  arm.name = get_string(a, "name", prefix, std::nullopt);
  const std::string loss = get_string(a, "loss", prefix, std::nullopt);
  const auto variant = parse_loss_variant(loss);
  if (!variant) fail(join(prefix, "loss"), "expected QR, QuantileHuber, GL or GLA");
  arm.loss.variant = *variant;
  arm.loss.adaptive = get_bool(a, "adaptive", prefix, false);
  if (*variant == LossVariant::QR) {
    if (arm.loss.adaptive) fail(join(prefix, "adaptive"), "QR has no threshold to adapt");
    arm.loss.threshold = 0.0;
  } else if (arm.loss.adaptive) {
    arm.loss.threshold = get_number(a, "threshold", prefix, fallback_b);
  } else {
    arm.loss.threshold = get_number(a, "threshold", prefix, std::nullopt);
  }
  if (!(arm.loss.threshold >= 0.0) || !std::isfinite(arm.loss.threshold)) {
    fail(join(prefix, "threshold"), "must be finite and >= 0");
  }
  return arm;
}

TrainConfig parse_train(const json& t) {
  const std::string prefix = "train";
  reject_unknown(t, prefix,
                 {"quantiles", "learning_rate", "epochs", "steps_per_epoch", "exploration_epsilon", "seed",
                  "risk_metric", "eval_episodes", "max_episode_steps", "record_timing"});
  TrainConfig c;
  c.quantiles = get_count(t, "quantiles", prefix, c.quantiles);
  c.learning_rate = get_number(t, "learning_rate", prefix, c.learning_rate);
  c.epochs = get_count(t, "epochs", prefix, c.epochs);
  c.steps_per_epoch = get_count(t, "steps_per_epoch", prefix, c.steps_per_epoch);
  c.exploration_epsilon = get_number(t, "exploration_epsilon", prefix, c.exploration_epsilon);
  c.seed = get_count(t, "seed", prefix, c.seed);
  const auto metric = parse_risk_metric(get_string(t, "risk_metric", prefix, "Mean"));
  if (!metric) fail(join(prefix, "risk_metric"), "expected Mean or CVaR95");
  c.risk_metric = *metric;
  c.eval_episodes = get_count(t, "eval_episodes", prefix, c.eval_episodes);
  c.max_episode_steps = get_count(t, "max_episode_steps", prefix, c.max_episode_steps);
  c.record_timing = get_bool(t, "record_timing", prefix, false);
  return c;
}

struct Stats {
  std::optional<double> mean, std;
};

Stats mean_std(const std::vector<double>& xs) {
  if (xs.empty()) return {};
  double s = 0.0;
  for (double x : xs) s += x;
  const double mean = s / static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  const double sd = xs.size() > 1 ? std::sqrt(ss / static_cast<double>(xs.size() - 1)) : 0.0;
  return {mean, sd};
}

std::string opt(const std::optional<double>& x) { return x ? format_double(*x) : std::string(); }

}  // namespace

void ExperimentConfig::validate() const {
  if (arms.empty()) fail("arms", "must contain at least one arm");
  std::set<std::string> names;
  for (std::size_t i = 0; i < arms.size(); ++i) {
    const auto& name = arms[i].name;
    const std::string field = "arms[" + std::to_string(i) + "].name";
    if (name.empty()) fail(field, "must be nonempty");
    if (name.find_first_of(",\"\n") != std::string::npos) fail(field, "may not contain commas, quotes or newlines");
    if (!names.insert(name).second) fail(field, "duplicate arm name '" + name + "'");
    try {
      arms[i].loss.validate();
    } catch (const std::invalid_argument& e) {
      fail("arms[" + std::to_string(i) + "].threshold", e.what());
    }
  }
  if (seeds == 0) fail("seeds", "must be >= 1");
  if (workers == 0) fail("workers", "must be >= 1");
  if (!(fallback_b >= 0.0) || !std::isfinite(fallback_b)) fail("noise.fallback_b", "must be finite and >= 0");
  try {
    train.validate();
  } catch (const std::invalid_argument& e) {
    fail("train", e.what());
  }
  if (environment.kind == EnvironmentKind::Sabr && train.risk_metric == RiskMetric::CVaR95 && train.quantiles < 20) {
    fail("train.quantiles", "CVaR95 needs at least 20 quantiles");
  }
}

ExperimentConfig parse_experiment_config(const std::string& text, const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t upto = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n');
    throw ConfigError("config line " + std::to_string(line) + ": malformed JSON (" + e.what() + ")");
  }
  if (!doc.is_object()) throw ConfigError("config: top level must be a JSON object");
  reject_unknown(doc, "", {"environment", "arms", "train", "noise", "seeds", "output", "workers", "w1_threshold"});

  ExperimentConfig c;
  if (const json* noise = find(doc, "noise")) {
    if (!noise->is_object()) fail("noise", "expected an object");
    reject_unknown(*noise, "noise", {"centering", "fallback_b"});
    const std::string centering = get_string(*noise, "centering", "noise", "batch_mean");
    if (centering == "batch_mean") {
      c.centering = NoiseCentering::BatchMean;
    } else if (centering == "running_mean") {
      c.centering = NoiseCentering::RunningMean;
    } else {
      fail("noise.centering", "expected batch_mean or running_mean");
    }
    c.fallback_b = get_number(*noise, "fallback_b", "noise", 1.0);
  }
  c.environment = parse_environment(get_object(doc, "environment", ""), base_dir);
  const json* arms = find(doc, "arms");
  if (!arms) fail("arms", "required");
  if (!arms->is_array()) fail("arms", "expected an array");
  for (std::size_t i = 0; i < arms->size(); ++i) c.arms.push_back(parse_arm((*arms)[i], i, c.fallback_b));
  if (const json* t = find(doc, "train")) {
    if (!t->is_object()) fail("train", "expected an object");
    c.train = parse_train(*t);
  }
  c.train.discount = c.environment.kind == EnvironmentKind::Sabr ? 1.0 : c.environment.mdp.discount;
  c.train.fixed_policy = c.environment.policy;
  c.seeds = get_count(doc, "seeds", "", 1);
  c.workers = get_count(doc, "workers", "", 1);
  c.output = get_string(doc, "output", "", "out");
  c.w1_threshold = get_number(doc, "w1_threshold", "", 0.05);
  c.validate();
  return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return parse_experiment_config(text, path.parent_path());
}

std::unique_ptr<Environment> make_environment(const EnvironmentSpec& spec) {
  if (spec.kind == EnvironmentKind::Sabr) return std::make_unique<SabrHedgingEnv>(spec.sabr);
  return std::make_unique<MdpEnvironment>(spec.mdp);
}

std::optional<OracleTarget> make_oracle(const EnvironmentSpec& spec, std::size_t quantiles) {
  if (spec.kind == EnvironmentKind::Sabr || spec.policy.empty()) return std::nullopt;
  const auto dist = oracle_return_distribution(spec.mdp, spec.policy, spec.mdp.start_state, spec.oracle_horizon);
  return OracleTarget{spec.mdp.start_state, spec.policy[spec.mdp.start_state],
                      midpoint_quantiles(dist.atoms, quantiles)};
}

std::vector<ArmSummary> summarize(const std::vector<Arm>& arms, const std::vector<RunRecord>& records,
                                  const std::vector<RunFailure>& failures, double w1_threshold) {
  std::vector<ArmSummary> out;
  for (const auto& arm : arms) {
    ArmSummary s;
    s.arm = arm.name;
    std::set<std::uint64_t> failed;
    for (const auto& f : failures) {
      if (f.arm == arm.name) failed.insert(f.seed);
    }
    s.ok = failed.empty();

    // Records arrive grouped by seed in ascending epoch order.
    std::vector<std::uint64_t> seed_order;
    std::map<std::uint64_t, std::vector<const RunRecord*>> by_seed;
    for (const auto& r : records) {
      if (r.arm != arm.name || failed.count(r.seed)) continue;
      if (!by_seed.count(r.seed)) seed_order.push_back(r.seed);
      by_seed[r.seed].push_back(&r);
    }
    std::vector<double> loss, w1, risk, b, reach;
    bool has_w1 = false;
    for (auto seed : seed_order) {
      const auto& rows = by_seed[seed];
      const RunRecord* last = *std::max_element(rows.begin(), rows.end(),
                                                [](const RunRecord* x, const RunRecord* y) { return x->epoch < y->epoch; });
      loss.push_back(last->loss);
      risk.push_back(last->risk);
      b.push_back(last->b);
      if (last->w1_oracle) {
        has_w1 = true;
        w1.push_back(*last->w1_oracle);
        for (const RunRecord* r : rows) {
          if (r->w1_oracle && *r->w1_oracle <= w1_threshold) {
            reach.push_back(static_cast<double>(r->epoch));
            break;
          }
        }
      }
    }
    s.seeds = seed_order.size();
    auto assign = [](const std::vector<double>& xs, std::optional<double>& m, std::optional<double>& sd) {
      const auto st = mean_std(xs);
      m = st.mean;
      sd = st.std;
    };
    assign(loss, s.loss_mean, s.loss_std);
    assign(w1, s.w1_mean, s.w1_std);
    assign(risk, s.risk_mean, s.risk_std);
    assign(b, s.b_mean, s.b_std);
    if (has_w1) {
      s.reached = reach.size();
      s.epochs_to_threshold_mean = mean_std(reach).mean;
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::string summary_to_csv(const std::vector<ArmSummary>& summary) {
  std::string out = kSummaryHeader;
  out += '\n';
  for (const auto& s : summary) {
    out += s.arm + ',' + (s.ok ? "ok" : "failed") + ',' + std::to_string(s.seeds);
    out += ',' + opt(s.loss_mean) + ',' + opt(s.loss_std);
    out += ',' + opt(s.w1_mean) + ',' + opt(s.w1_std);
    out += ',' + opt(s.risk_mean) + ',' + opt(s.risk_std);
    out += ',' + opt(s.b_mean) + ',' + opt(s.b_std);
    out += ',' + opt(s.epochs_to_threshold_mean);
    out += ',' + (s.reached ? std::to_string(*s.reached) : std::string());
    out += '\n';
  }
  return out;
}

ExperimentResult execute_experiment(const ExperimentConfig& config) {
  config.validate();
  const auto oracle = make_oracle(config.environment, config.train.quantiles);

  struct Job {
    std::size_t arm = 0;
    std::uint64_t seed = 0;
    std::vector<RunRecord> records;
    std::optional<std::string> error;
  };
  std::vector<Job> jobs;
  for (std::size_t a = 0; a < config.arms.size(); ++a) {
    for (std::size_t k = 0; k < config.seeds; ++k) jobs.push_back({a, config.train.seed + k, {}, std::nullopt});
  }

  const auto n = static_cast<std::ptrdiff_t>(jobs.size());
  const int workers = static_cast<int>(std::min<std::size_t>(config.workers, jobs.size()));
#pragma omp parallel for schedule(dynamic, 1) num_threads(workers)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    Job& job = jobs[static_cast<std::size_t>(i)];
    const Arm& arm = config.arms[job.arm];
    TrainConfig tc = config.train;
    tc.loss = arm.loss;
    tc.seed = job.seed;
    NoiseStats stats;
    stats.centering = config.centering;
    stats.fallback_b = config.fallback_b;
    try {
      const auto env = make_environment(config.environment);
      auto result = train(*env, tc, stats, oracle);
      job.records = std::move(result.records);
    } catch (const TrainingDiverged& e) {
      job.records = e.records;
      job.error = e.what();
    } catch (const std::exception& e) {
      job.error = e.what();
    }
    for (auto& r : job.records) r.arm = arm.name;
  }

  ExperimentResult result;
  for (auto& job : jobs) {
    for (auto& r : job.records) result.records.push_back(std::move(r));
    if (job.error) result.failures.push_back({config.arms[job.arm].name, job.seed, *job.error});
  }
  result.summary = summarize(config.arms, result.records, result.failures, config.w1_threshold);
  const bool all_failed = std::none_of(result.summary.begin(), result.summary.end(),
                                       [](const ArmSummary& s) { return s.ok; });
  result.exit_code = all_failed ? 2 : 0;
  return result;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  auto result = execute_experiment(config);
  const auto& dir = config.output;
  write_file_atomic(dir / "records.csv", records_to_csv(result.records));
  write_file_atomic(dir / "summary.csv", summary_to_csv(result.summary));
  if (!result.records.empty()) {
    for (auto metric : {ChartMetric::Loss, ChartMetric::W1Oracle, ChartMetric::Risk, ChartMetric::B}) {
      if (metric == ChartMetric::W1Oracle && !result.records.front().w1_oracle) continue;
      emit_chart(result.records, metric, dir / (std::string(to_string(metric)) + ".svg"));
    }
  }
  return result;
}

}  // namespace gqh
