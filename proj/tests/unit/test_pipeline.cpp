#include <fstream>
#include <sstream>

#include <doctest.h>

#include "fixtures.hpp"
#include "plausim/errors.hpp"
#include "plausim/pipeline.hpp"
#include "plausim/pose_io.hpp"

using namespace plausim;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const HumanoidModel& model() {
  static const HumanoidModel m = HumanoidModel::default_humanoid();
  return m;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_json(const fs::path& p, const json& j) { std::ofstream(p) << j.dump(2); }

json base_config() {
  return {{"kind", "plausim.config"}, {"schema_version", 1}, {"input", "standing.json"}, {"output", "out"}};
}

}  // namespace

TEST_CASE("config parsing") {
  fixtures::TempDir dir("cfg");
  save_pose_file(fixtures::standing_sequence(model(), 10, 25.0), dir / "standing.json");

  SUBCASE("relative paths resolve against the config directory") {
    json j = base_config();
    j["optimizer"] = {{"window_length", 0.5}, {"population", 12}};
    j["simulation"] = {{"torque_law", "pd"}};
    j["seed"] = 9;
    write_json(dir / "c.json", j);
    const RunConfig c = load_config(dir / "c.json");
    REQUIRE(c.inputs.size() == 1);
    CHECK(c.inputs[0] == dir.path() / "standing.json");
    CHECK(c.output == dir.path() / "out");
    CHECK(c.plan.population == 12);
    CHECK(c.plan.iterations == WindowPlan{}.iterations);
    CHECK(c.sim.torque_law == TorqueLaw::PD);
    CHECK(c.seed == 9);
    CHECK_NOTHROW(c.validate());
  }
  SUBCASE("schema errors") {
    auto fails = [&](const json& j) {
      write_json(dir / "bad.json", j);
      try {
        load_config(dir / "bad.json").validate();
      } catch (const SchemaError& e) {
        return exit_code_for(e) == 2;
      }
      return false;
    };
    json j = base_config();
    j["optimiser"] = json::object();
    CHECK(fails(j));
    j = base_config();
    j["input"] = "absent.json";
    CHECK(fails(j));
    j = base_config();
    j["simulation"] = {{"torque_law", "pid"}};
    CHECK(fails(j));
    j = base_config();
    j["preprocess"] = {{"median_window", 4}};
    CHECK(fails(j));
    j = base_config();
    j["seed"] = "seven";
    CHECK(fails(j));
    j = base_config();
    j.erase("input");
    CHECK(fails(j));
    j = base_config();
    j["kind"] = "plausim.pose";
    CHECK(fails(j));
    j = base_config();
    j["thresholds"] = {{"footskate", 0.0}};
    CHECK(fails(j));
  }
  SUBCASE("echo leaves out threads and output") {
    json j = base_config();
    j["threads"] = 4;
    const json echo = config_echo(config_from_json(j, dir.path()));
    CHECK_FALSE(echo.contains("threads"));
    CHECK_FALSE(echo.contains("output"));
    CHECK(echo.contains("optimizer"));
  }
}

TEST_CASE("exit codes") {
  CHECK(exit_code_for(InvalidArgument("x")) == 1);
  CHECK(exit_code_for(SchemaError("x")) == 2);
  CHECK(exit_code_for(DegenerateGeometry("x")) == 2);
  CHECK(exit_code_for(SimulationDiverged("v", 0.1)) == 3);
  CHECK(exit_code_for(IoError("x")) == 4);
}

TEST_CASE("metrics-only runs") {
  fixtures::TempDir dir("metrics");
  const PoseSequence seq = fixtures::standing_sequence(model(), 30, 25.0);
  save_pose_file(seq, dir / "standing.json");
  PoseSequence sunk = seq;
  for (int t = 0; t < sunk.num_frames(); ++t)
    for (int k = 0; k < sunk.num_joints(); ++k) sunk.at(t, k).z() -= 0.01;
  save_pose_file(sunk, dir / "gt.json");
  json j = base_config();
  j["ground_truth"] = "gt.json";
  j["ground_height"] = 0.0;
  write_json(dir / "c.json", j);
  const RunOutcome out = run_metrics_only(load_config(dir / "c.json"));
  CHECK(out.code == ExitCode::Ok);
  REQUIRE(out.reports.size() == 1);
  const PlausibilityReport& r = out.reports[0];
  CHECK(r.mode == "metrics");
  CHECK(r.gp_mm == 0.0);
  CHECK(r.fs_percent == 0.0);
  CHECK_FALSE(r.psd.has_value());
  CHECK(*r.mpjpe_mm < 1e-9);
  CHECK(*r.mpjpe_g_mm == doctest::Approx(10.0));

  const fs::path report = dir / "out" / "standing" / "report.json";
  REQUIRE(fs::exists(report));
  CHECK(load_report_file(report) == r);
  CHECK_FALSE(fs::exists(dir / "out" / "standing" / "contact_forces.csv"));
  const std::string summary = slurp(dir / "out" / "summary.csv");
  CHECK(std::count(summary.begin(), summary.end(), '\n') == 2);
  CHECK(validate_file(report).exit_code == 0);
}

TEST_CASE("simulate runs and batch naming") {
  fixtures::TempDir dir("sim");
  fs::create_directories(dir / "a");
  fs::create_directories(dir / "b");
  save_pose_file(fixtures::standing_sequence(model(), 12, 25.0), dir / "a" / "seq.json");
  save_pose_file(fixtures::standing_sequence(model(), 12, 25.0, false), dir / "b" / "seq.json");
  json j = base_config();
  j.erase("input");
  j["inputs"] = {"a/seq.json", "b/seq.json"};
  j["threads"] = 2;
  write_json(dir / "c.json", j);
  const RunConfig c = load_config(dir / "c.json");
  const RunOutcome out = run_simulate(c);
  REQUIRE(out.reports.size() == 2);
  for (const PlausibilityReport& r : out.reports) {
    CHECK(r.psd == 12);
    CHECK(r.simulated_frames == 12);
    CHECK(r.contact_forces.size() == 12);
    // 12 frames is shorter than the default median window
    CHECK(std::find(r.flags.begin(), r.flags.end(), "median_window_clamped") != r.flags.end());
  }
  CHECK(out.reports[0].sequence == "seq_0");
  CHECK(out.reports[1].sequence == "seq_1");
  for (const char* name : {"seq_0", "seq_1"})
    for (const char* f : {"report.json", "contact_forces.csv", "cost_traces.csv", "optimized_trajectory.json"})
      CHECK(fs::exists(dir / "out" / name / f));
  CHECK(validate_file(dir / "out" / "seq_0" / "optimized_trajectory.json").exit_code == 0);

  // same inputs, different threads and output: identical report bytes
  RunConfig c2 = c;
  c2.threads = 1;
  c2.output = dir / "out2";
  run_simulate(c2);
  CHECK(slurp(dir / "out" / "seq_0" / "report.json") == slurp(dir / "out2" / "seq_0" / "report.json"));
}

TEST_CASE("per-sequence failures keep the other results") {
  fixtures::TempDir dir("fail");
  save_pose_file(fixtures::standing_sequence(model(), 10, 25.0), dir / "ok.json");
  Skeleton sk;
  sk.joint_names = {"pelvis", "head"};
  sk.parent_index = {-1, 0};
  PoseSequence partial(sk, 25.0, 10);
  for (int t = 0; t < 10; ++t) partial.at(t, 0) = Vec3(0, 0, 0.9), partial.at(t, 1) = Vec3(0, 0, 1.6);
  save_pose_file(partial, dir / "partial.json");
  json j = base_config();
  j.erase("input");
  j["inputs"] = {"ok.json", "partial.json"};
  write_json(dir / "c.json", j);
  CHECK_THROWS_AS(run_simulate(load_config(dir / "c.json")), SchemaError);
  CHECK(fs::exists(dir / "out" / "ok" / "report.json"));
  CHECK_FALSE(fs::exists(dir / "out" / "partial" / "report.json"));
}

TEST_CASE("validate_file") {
  fixtures::TempDir dir("validate");
  save_pose_file(fixtures::standing_sequence(model(), 3, 25.0), dir / "p.json");
  save_model_file(model(), dir / "m.json");
  write_json(dir / "cams.json", cameras_to_json({}));
  CHECK(validate_file(dir / "p.json").kind == "plausim.pose");
  CHECK(validate_file(dir / "p.json").exit_code == 0);
  CHECK(validate_file(dir / "m.json").exit_code == 0);
  CHECK(validate_file(dir / "missing.json").exit_code == 4);
  write_json(dir / "unknown.json", {{"kind", "plausim.banana"}, {"schema_version", 1}});
  CHECK(validate_file(dir / "unknown.json").exit_code == 2);
  write_json(dir / "nokind.json", {{"schema_version", 1}});
  CHECK(validate_file(dir / "nokind.json").exit_code == 2);
  json p = pose_to_json(fixtures::standing_sequence(model(), 3, 25.0));
  p["positions"][2] = json::array();
  write_json(dir / "broken.json", p);
  const ValidationIssue issue = validate_file(dir / "broken.json");
  CHECK(issue.exit_code == 2);
  CHECK(issue.message.find("positions") != std::string::npos);
}
