#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "gqh/chart.hpp"
#include "gqh/experiment.hpp"
#include "gqh/records.hpp"

using namespace gqh;
namespace fs = std::filesystem;

namespace {

const fs::path kDataDir = GQH_TEST_DATA_DIR;

const char* kChainConfig = R"({
  "environment": {"type": "chain", "length": 3, "rewards": [[-1, 0.5], [1, 0.5]]},
  "arms": [
    {"name": "qh_k1", "loss": "QuantileHuber", "threshold": 1},
    {"name": "gla_adaptive", "loss": "GLA", "adaptive": true}
  ],
  "train": {"quantiles": 32, "learning_rate": 0.05, "epochs": 6, "steps_per_epoch": 30, "exploration_epsilon": 0},
  "seeds": 5
})";

std::string config_error(const std::string& text) {
  try {
    parse_experiment_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

std::vector<RunRecord> rows_of(const std::vector<RunRecord>& records, const std::string& arm) {
  std::vector<RunRecord> out;
  std::copy_if(records.begin(), records.end(), std::back_inserter(out), [&](const RunRecord& r) { return r.arm == arm; });
  return out;
}

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("gqh_test_" + name);
  fs::remove_all(dir);
  return dir;
}

std::size_t count(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) ++n;
  return n;
}

}  // namespace

TEST_CASE("chain config parses") {
  const auto c = parse_experiment_config(kChainConfig);
  CHECK(c.arms.size() == 2);
  CHECK(c.arms[0].loss.variant == LossVariant::QuantileHuber);
  CHECK(c.arms[0].loss.threshold == 1.0);
  CHECK(c.arms[1].loss.adaptive);
  CHECK(c.arms[1].loss.threshold == 1.0);  // fallback until the first batch
  CHECK(c.seeds == 5);
  CHECK(c.train.epochs == 6);
  CHECK(c.train.fixed_policy == std::vector<std::size_t>(4, 0));
  CHECK(c.environment.mdp.n_states == 4);
}

TEST_CASE("config validation names the field") {
  CHECK(config_error(R"({"environment": {"type": "chain", "length": 3, "rewards": [[0, 1]]}, "arms": []})")
            .find("'arms'") != std::string::npos);
  CHECK(config_error(R"({"environment": {"type": "chain", "length": 3, "rewards": [[0, 1]]},
      "arms": [{"name": "a", "loss": "QR"}], "train": {"epohcs": 3}})")
            .find("'train.epohcs'") != std::string::npos);
  CHECK(config_error(R"({"environment": {"type": "chain", "length": 3, "rewards": [[0, 1]]},
      "arms": [{"name": "a", "loss": "Huber"}]})")
            .find("'arms[0].loss'") != std::string::npos);
  CHECK(config_error(R"({"environment": {"type": "chain", "length": 3, "rewards": [[0, 1]]},
      "arms": [{"name": "a", "loss": "GL"}]})")
            .find("'arms[0].threshold'") != std::string::npos);
  CHECK(config_error(R"({"environment": {"type": "chain", "length": 3, "rewards": [[0, 1]]},
      "arms": [{"name": "a", "loss": "QR"}, {"name": "a", "loss": "QR"}]})")
            .find("'arms[1].name'") != std::string::npos);
  CHECK(config_error(R"({"environment": {"type": "chain", "length": 1, "rewards": [[0, 1]]},
      "arms": [{"name": "a", "loss": "QR"}]})")
            .find("'environment.length'") != std::string::npos);
  CHECK(config_error(R"({"environment": {"type": "chain", "length": 3, "rewards": [[0, 1]]},
      "arms": [{"name": "a", "loss": "QR"}], "seeds": 0})")
            .find("'seeds'") != std::string::npos);
  CHECK(config_error(R"({"environment": {"type": "maze"}, "arms": [{"name": "a", "loss": "QR"}]})")
            .find("'environment.type'") != std::string::npos);
  CHECK(config_error("{\n  \"arms\": [\n  ,\n]}").find("line 3") != std::string::npos);
  CHECK(config_error(R"({"environment": {"type": "sabr"}, "arms": [{"name": "a", "loss": "QR"}],
      "train": {"risk_metric": "CVaR95", "quantiles": 8}})")
            .find("train") != std::string::npos);
}

TEST_CASE("mdp_file and sabr configs") {
  const auto c = load_experiment_config(kDataDir / "mdp_file.json");
  CHECK(c.environment.kind == EnvironmentKind::MdpFile);
  CHECK(c.environment.mdp.n_states == 4);
  CHECK(c.train.discount == 0.9);
  const auto result = execute_experiment(c);
  CHECK(result.records.size() == 2 * 5);
  CHECK(result.records.front().w1_oracle.has_value());

  const auto s = parse_experiment_config(R"({"environment": {"type": "sabr", "policy": "greedy", "steps": 4},
      "arms": [{"name": "a", "loss": "QR"}], "train": {"risk_metric": "CVaR95", "quantiles": 20}})");
  CHECK(s.environment.kind == EnvironmentKind::Sabr);
  CHECK(s.environment.sabr.steps == 4);
  CHECK(s.environment.policy.empty());
  CHECK(!make_oracle(s.environment, 20));
  CHECK_THROWS_AS(load_experiment_config(kDataDir / "does_not_exist.json"), ConfigError);
}

TEST_CASE("one record per (arm, seed, epoch)") {
  const auto c = parse_experiment_config(kChainConfig);
  const auto r = execute_experiment(c);
  REQUIRE(r.records.size() == 2 * 5 * 6);
  CHECK(r.exit_code == 0);
  CHECK(r.failures.empty());
  std::size_t i = 0;
  for (const auto& arm : {"qh_k1", "gla_adaptive"}) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      for (std::size_t epoch = 1; epoch <= 6; ++epoch, ++i) {
        CHECK(r.records[i].arm == arm);
        CHECK(r.records[i].seed == seed);
        CHECK(r.records[i].epoch == epoch);
        CHECK(std::isfinite(r.records[i].loss));
        CHECK(r.records[i].ms == 0.0);
      }
    }
  }
}

TEST_CASE("adding an arm leaves other arms' rows untouched") {
  auto one = parse_experiment_config(kChainConfig);
  one.arms.erase(one.arms.begin());
  auto three = parse_experiment_config(kChainConfig);
  three.arms.insert(three.arms.begin(), Arm{"qr", LossSpec::qr()});
  three.workers = 3;
  const auto a = execute_experiment(one);
  const auto b = execute_experiment(three);
  CHECK(records_to_csv(rows_of(a.records, "gla_adaptive")) == records_to_csv(rows_of(b.records, "gla_adaptive")));
}

TEST_CASE("worker count does not change the records") {
  auto c = parse_experiment_config(kChainConfig);
  c.workers = 1;
  const auto a = execute_experiment(c);
  c.workers = 4;
  const auto b = execute_experiment(c);
  CHECK(records_to_csv(a.records) == records_to_csv(b.records));
}

TEST_CASE("records.csv schema and round trip") {
  std::vector<RunRecord> recs = {
      {"a", 1, 1, 0.1, 0.25, -1.5, 1.0, 0.0},
      {"a", 1, 2, 1.0 / 3.0, std::nullopt, 2e-300, 0.0, 12.5},
      {"b", 18446744073709551615ULL, 3, -0.0, 1e300, 3.0, 0.1 + 0.2, 0.0},
  };
  const auto csv = records_to_csv(recs);
  CHECK(csv.substr(0, csv.find('\n')) == "arm,seed,epoch,loss,w1_oracle,risk,b,ms");
  CHECK(csv.substr(0, csv.find('\n')) == kRecordsHeader);
  CHECK(parse_records_csv(csv) == recs);
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1.0) == "1");
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);

  try {
    parse_records_csv(std::string(kRecordsHeader) + "\na,1,1,0.1,,0,0,0\na,1,x,0.1,,0,0,0\n");
    FAIL("expected a parse error");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_records_csv("arm,seed\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_records_csv(std::string(kRecordsHeader) + "\na,1,1,0.1,,0,0\n"), std::invalid_argument);
}

TEST_CASE("summary statistics") {
  std::vector<Arm> arms = {{"a", LossSpec::qr()}, {"b", LossSpec::qr()}};
  std::vector<RunRecord> recs;
  // Arm a: seed 1 reaches 0.1 at epoch 2, seed 2 never does.
  recs.push_back({"a", 1, 1, 4.0, 0.5, 1.0, 0.2, 0.0});
  recs.push_back({"a", 1, 2, 2.0, 0.1, 3.0, 0.4, 0.0});
  recs.push_back({"a", 2, 1, 5.0, 0.9, 2.0, 0.3, 0.0});
  recs.push_back({"a", 2, 2, 6.0, 0.3, 5.0, 0.8, 0.0});
  recs.push_back({"b", 1, 1, 1.0, std::nullopt, 1.0, 0.0, 0.0});
  const auto s = summarize(arms, recs, {{"b", 2, "boom"}}, 0.1);
  REQUIRE(s.size() == 2);
  CHECK(s[0].ok);
  CHECK(s[0].seeds == 2);
  CHECK(*s[0].loss_mean == 4.0);
  CHECK(*s[0].loss_std == doctest::Approx(std::sqrt(8.0)));
  CHECK(*s[0].w1_mean == doctest::Approx(0.2));
  CHECK(*s[0].risk_mean == 4.0);
  CHECK(*s[0].b_mean == doctest::Approx(0.6));
  CHECK(*s[0].epochs_to_threshold_mean == 2.0);
  CHECK(*s[0].reached == 1);
  CHECK(!s[1].ok);
  CHECK(s[1].seeds == 1);
  CHECK(*s[1].loss_std == 0.0);
  CHECK(!s[1].w1_mean);
  CHECK(!s[1].reached);
  const auto csv = summary_to_csv(s);
  CHECK(csv.substr(0, csv.find('\n')) == kSummaryHeader);
  CHECK(csv.find("\nb,failed,1,1,0,,,1,0,0,0,,\n") != std::string::npos);
}

TEST_CASE("runs that blow up fail their arm and set exit code 2 when every arm fails") {
  auto c = parse_experiment_config(kChainConfig);
  c.train.learning_rate = 1e308;
  c.environment.mdp = chain_mdp(3, {{-1e300, 0.5}, {1e300, 0.5}}, 1.0);
  const auto r = execute_experiment(c);
  CHECK(r.exit_code == 2);
  CHECK(r.failures.size() == 10);
  for (const auto& s : r.summary) CHECK(!s.ok);
}

TEST_CASE("run_experiment writes its outputs deterministically") {
  auto c = parse_experiment_config(kChainConfig);
  c.output = scratch_dir("run_a");
  run_experiment(c);
  for (const char* f : {"records.csv", "summary.csv", "loss.svg", "w1_oracle.svg", "risk.svg", "b.svg"}) {
    CHECK(fs::exists(c.output / f));
  }
  const auto first = read_file(c.output / "records.csv");
  const auto first_chart = read_file(c.output / "loss.svg");
  c.output = scratch_dir("run_b");
  c.workers = 3;
  run_experiment(c);
  CHECK(read_file(c.output / "records.csv") == first);
  CHECK(read_file(c.output / "loss.svg") == first_chart);
  CHECK(read_records_csv(c.output / "records.csv") == execute_experiment(c).records);
}

TEST_CASE("charts") {
  const std::vector<RunRecord> one = {{"solo", 1, 1, 0.5, 0.2, 1.0, 0.3, 0.0}};
  const auto svg = render_chart_svg(one, ChartMetric::Loss);
  CHECK(svg.rfind("<?xml", 0) == 0);
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(count(svg, "<circle") == 1);
  CHECK(count(svg, "class=\"legend\"") == 1);

  std::vector<RunRecord> two;
  for (const char* arm : {"x", "y"}) {
    for (std::uint64_t seed = 1; seed <= 2; ++seed) {
      for (std::size_t e = 1; e <= 4; ++e) two.push_back({arm, seed, e, 1.0 / static_cast<double>(e), std::nullopt, 0.0, 0.1, 0.0});
    }
  }
  const auto svg2 = render_chart_svg(two, ChartMetric::Loss);
  CHECK(count(svg2, "class=\"legend\"") == 2);
  CHECK(count(svg2, "<polyline") == 2);
  CHECK(svg2.find("epoch") != std::string::npos);
  CHECK(render_chart_svg(two, ChartMetric::Loss) == svg2);
  CHECK_THROWS_AS(render_chart_svg(two, ChartMetric::W1Oracle), std::invalid_argument);
  CHECK_THROWS_AS(emit_chart({}, ChartMetric::Loss, scratch_dir("empty") / "x.svg"), std::invalid_argument);
  CHECK(parse_chart_metric("w1_oracle") == ChartMetric::W1Oracle);
  CHECK(!parse_chart_metric("W1"));
}
