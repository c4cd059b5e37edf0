#include "plausim/pipeline.hpp"

#include <algorithm>
#include <exception>
#include <map>
#include <set>

#include "plausim/errors.hpp"
#include "plausim/kinematics.hpp"
#include "plausim/log.hpp"
#include "plausim/metrics.hpp"
#include "plausim/parallel.hpp"
#include "plausim/pose_io.hpp"

namespace plausim {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void check_keys(const json& j, const std::string& where, const std::set<std::string>& allowed) {
  if (!j.is_object()) throw SchemaError(where + ": expected an object");
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key)) throw SchemaError(where + ": unknown field '" + key + "'");
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception&) {
    throw SchemaError(where + "." + key + ": wrong type");
  }
}

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return (path.is_absolute() ? path : base / path).lexically_normal();
}

std::vector<fs::path> paths(const json& j, const char* key, const fs::path& base) {
  std::vector<fs::path> out;
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return out;
  if (it->is_string()) {
    out.push_back(resolve(base, it->get<std::string>()));
  } else if (it->is_array()) {
    for (const json& e : *it) {
      if (!e.is_string()) throw SchemaError(std::string("config.") + key + ": expected file names");
      out.push_back(resolve(base, e.get<std::string>()));
    }
  } else {
    throw SchemaError(std::string("config.") + key + ": expected a file name or a list of them");
  }
  return out;
}

void require_file(const fs::path& p, const std::string& what) {
  std::error_code ec;
  if (!fs::is_regular_file(p, ec)) throw SchemaError(what + " '" + p.string() + "' does not exist");
}

std::string torque_law_name(TorqueLaw l) { return l == TorqueLaw::StablePD ? "stable_pd" : "pd"; }

std::vector<std::string> path_strings(const std::vector<fs::path>& ps) {
  std::vector<std::string> out;
  for (const auto& p : ps) out.push_back(p.generic_string());
  return out;
}

// Output directory name per input: the file stem, suffixed when stems collide.
std::vector<std::string> sequence_names(const std::vector<fs::path>& inputs) {
  std::map<std::string, int> seen;
  for (const auto& p : inputs) ++seen[p.stem().string()];
  std::vector<std::string> out;
  for (size_t i = 0; i < inputs.size(); ++i) {
    const std::string stem = inputs[i].stem().string();
    out.push_back(seen[stem] > 1 ? stem + "_" + std::to_string(i) : stem);
  }
  return out;
}

int clamp_median_window(int window, int frames) {
  if (window <= frames) return window;
  return frames % 2 == 1 ? frames : frames - 1;
}

}  // namespace

void MetricThresholds::validate() const {
  for (double v : {stationary_speed, contact.height, contact.speed, footskate})
    if (!(v > 0.0) || !std::isfinite(v)) throw SchemaError("config.thresholds: all thresholds must be positive");
}

void RunConfig::validate() const {
  if (inputs.empty()) throw SchemaError("config: no input pose files");
  for (const auto& p : inputs) require_file(p, "input pose file");
  if (ground_truth.size() > 1 && ground_truth.size() != inputs.size())
    throw SchemaError("config.ground_truth: expected one file or one per input");
  for (const auto& p : ground_truth) require_file(p, "ground-truth pose file");
  if (cameras) require_file(*cameras, "camera file");
  if (model) require_file(*model, "model file");
  if (ground_height && !std::isfinite(*ground_height)) throw SchemaError("config.ground_height: must be finite");
  if (preprocess.median_window < 1 || preprocess.median_window % 2 == 0)
    throw SchemaError("config.preprocess.median_window: must be odd and at least 1");
  thresholds.validate();
  if (threads < 1) throw SchemaError("config.threads: must be at least 1");
  if (!(sim.dt > 0.0) || !(sim.contact_stiffness > 0.0) || !(sim.contact_damping >= 0.0) || !(sim.friction >= 0.0) ||
      !(sim.tangential_damping >= 0.0) || !(sim.contact_height >= 0.0) || !(sim.max_speed > 0.0))
    throw SchemaError("config.simulation: parameters out of range");
  try {
    WindowPlan p = plan;
    p.threads = 1;
    p.validate(1e9);  // frame-rate dependent checks run per sequence
    CostWeights w = weights;
    w.joint.clear();
    w.validate(HumanoidModel{});
  } catch (const InvalidArgument& e) {
    throw SchemaError(std::string("config: ") + e.what());
  }
  for (double v : weights.joint)
    if (!(v >= 0.0) || !std::isfinite(v)) throw SchemaError("config.weights.joint: must be finite and non-negative");
}

RunConfig config_from_json(const json& j, const fs::path& base_dir) {
  check_header(j, "plausim.config");
  check_keys(j, "config",
             {"kind", "schema_version", "input", "inputs", "ground_truth", "cameras", "model", "ground_height",
              "preprocess", "optimizer", "weights", "simulation", "thresholds", "seed", "threads", "output"});
  RunConfig c;
  c.inputs = paths(j, "inputs", base_dir);
  for (auto& p : paths(j, "input", base_dir)) c.inputs.push_back(p);
  c.ground_truth = paths(j, "ground_truth", base_dir);
  if (auto v = paths(j, "cameras", base_dir); !v.empty()) c.cameras = v.front();
  if (auto v = paths(j, "model", base_dir); !v.empty()) c.model = v.front();
  if (j.contains("ground_height") && !j["ground_height"].is_null()) {
    double h = 0.0;
    read(j, "ground_height", h, "config");
    c.ground_height = h;
  }
  if (j.contains("preprocess")) {
    const json& p = j["preprocess"];
    check_keys(p, "config.preprocess", {"median_window", "constrain_bones"});
    read(p, "median_window", c.preprocess.median_window, "config.preprocess");
    read(p, "constrain_bones", c.preprocess.constrain_bones, "config.preprocess");
  }
  if (j.contains("optimizer")) {
    const json& o = j["optimizer"];
    const std::string w = "config.optimizer";
    check_keys(o, w,
               {"window_length", "overlap", "iterations", "population", "sigma0", "knot_spacing",
                "divergence_penalty"});
    read(o, "window_length", c.plan.window_length, w);
    read(o, "overlap", c.plan.overlap, w);
    read(o, "iterations", c.plan.iterations, w);
    read(o, "population", c.plan.population, w);
    read(o, "sigma0", c.plan.sigma0, w);
    read(o, "knot_spacing", c.plan.knot_spacing, w);
    read(o, "divergence_penalty", c.plan.divergence_penalty, w);
  }
  if (j.contains("weights")) {
    const json& o = j["weights"];
    const std::string w = "config.weights";
    check_keys(o, w, {"com", "com_velocity", "orientation", "pose", "velocity", "acceleration", "feet", "joint"});
    read(o, "com", c.weights.com, w);
    read(o, "com_velocity", c.weights.com_velocity, w);
    read(o, "orientation", c.weights.orientation, w);
    read(o, "pose", c.weights.pose, w);
    read(o, "velocity", c.weights.velocity, w);
    read(o, "acceleration", c.weights.acceleration, w);
    read(o, "feet", c.weights.feet, w);
    read(o, "joint", c.weights.joint, w);
  }
  if (j.contains("simulation")) {
    const json& o = j["simulation"];
    const std::string w = "config.simulation";
    check_keys(o, w,
               {"dt", "gravity", "contact_stiffness", "contact_damping", "friction", "tangential_damping",
                "contact_height", "max_speed", "torque_law"});
    read(o, "dt", c.sim.dt, w);
    read(o, "gravity", c.sim.gravity, w);
    read(o, "contact_stiffness", c.sim.contact_stiffness, w);
    read(o, "contact_damping", c.sim.contact_damping, w);
    read(o, "friction", c.sim.friction, w);
    read(o, "tangential_damping", c.sim.tangential_damping, w);
    read(o, "contact_height", c.sim.contact_height, w);
    read(o, "max_speed", c.sim.max_speed, w);
    std::string law = torque_law_name(c.sim.torque_law);
    read(o, "torque_law", law, w);
    if (law == "stable_pd")
      c.sim.torque_law = TorqueLaw::StablePD;
    else if (law == "pd")
      c.sim.torque_law = TorqueLaw::PD;
    else
      throw SchemaError(w + ".torque_law: expected 'stable_pd' or 'pd'");
  }
  if (j.contains("thresholds")) {
    const json& o = j["thresholds"];
    const std::string w = "config.thresholds";
    check_keys(o, w, {"stationary_speed", "contact_height", "contact_speed", "footskate"});
    read(o, "stationary_speed", c.thresholds.stationary_speed, w);
    read(o, "contact_height", c.thresholds.contact.height, w);
    read(o, "contact_speed", c.thresholds.contact.speed, w);
    read(o, "footskate", c.thresholds.footskate, w);
  }
  read(j, "seed", c.seed, "config");
  read(j, "threads", c.threads, "config");
  if (j.contains("output")) {
    std::string out;
    read(j, "output", out, "config");
    c.output = resolve(base_dir, out);
  }
  return c;
}

RunConfig load_config(const fs::path& path) {
  const json j = read_json_file(path);
  try {
    return config_from_json(j, path.has_parent_path() ? path.parent_path() : fs::path("."));
  } catch (const SchemaError& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

json config_echo(const RunConfig& c) {
  json j;
  j["inputs"] = path_strings(c.inputs);
  j["ground_truth"] = path_strings(c.ground_truth);
  j["cameras"] = c.cameras ? json(c.cameras->generic_string()) : json(nullptr);
  j["model"] = c.model ? json(c.model->generic_string()) : json(nullptr);
  j["ground_height"] = c.ground_height ? json(*c.ground_height) : json(nullptr);
  j["preprocess"] = {{"median_window", c.preprocess.median_window}, {"constrain_bones", c.preprocess.constrain_bones}};
  j["optimizer"] = {{"window_length", c.plan.window_length}, {"overlap", c.plan.overlap},
                    {"iterations", c.plan.iterations},       {"population", c.plan.population},
                    {"sigma0", c.plan.sigma0},               {"knot_spacing", c.plan.knot_spacing},
                    {"divergence_penalty", c.plan.divergence_penalty}};
  j["weights"] = {{"com", c.weights.com},
                  {"com_velocity", c.weights.com_velocity},
                  {"orientation", c.weights.orientation},
                  {"pose", c.weights.pose},
                  {"velocity", c.weights.velocity},
                  {"acceleration", c.weights.acceleration},
                  {"feet", c.weights.feet},
                  {"joint", c.weights.joint}};
  j["simulation"] = {{"dt", c.sim.dt},
                     {"gravity", c.sim.gravity},
                     {"contact_stiffness", c.sim.contact_stiffness},
                     {"contact_damping", c.sim.contact_damping},
                     {"friction", c.sim.friction},
                     {"tangential_damping", c.sim.tangential_damping},
                     {"contact_height", c.sim.contact_height},
                     {"max_speed", c.sim.max_speed},
                     {"torque_law", torque_law_name(c.sim.torque_law)}};
  j["thresholds"] = {{"stationary_speed", c.thresholds.stationary_speed},
                     {"contact_height", c.thresholds.contact.height},
                     {"contact_speed", c.thresholds.contact.speed},
                     {"footskate", c.thresholds.footskate}};
  j["seed"] = c.seed;
  return j;
}

int exit_code_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::InvalidArgument:
      return static_cast<int>(ExitCode::Usage);
    case ErrorKind::Schema:
    case ErrorKind::DegenerateGeometry:
      return static_cast<int>(ExitCode::Schema);
    case ErrorKind::SimulationDiverged:
      return static_cast<int>(ExitCode::Diverged);
    case ErrorKind::Io:
      return static_cast<int>(ExitCode::Io);
  }
  return static_cast<int>(ExitCode::Usage);
}

SequenceResult process_sequence(const RunConfig& config, size_t index, RunMode mode) {
  const fs::path& input = config.inputs.at(index);
  const PoseSequence raw = load_pose_file(input);
  const int T = raw.num_frames();

  SequenceResult out;
  PlausibilityReport& r = out.report;
  r.sequence = input.stem().string();
  r.mode = mode == RunMode::Evaluate ? "evaluate" : mode == RunMode::Simulate ? "simulate" : "metrics";
  r.frames = T;
  r.fps = raw.fps();
  r.config = config_echo(config);

  GroundPlane plane;
  if (config.ground_height) {
    plane.height = *config.ground_height;
  } else {
    plane = estimate_ground_plane(raw);
    if (plane.low_confidence) r.flags.push_back("ground_plane_low_confidence");
  }
  r.ground_height = plane.height;

  // Kinematic metrics describe the input as given.
  const ContactStates raw_contacts = estimate_contact_states(raw, plane, config.thresholds.contact);
  r.fs_percent = footskate(raw, raw_contacts, plane, config.thresholds.footskate);
  r.gp_mm = ground_penetration(raw, plane);
  if (!config.ground_truth.empty()) {
    const fs::path& gt_path = config.ground_truth.size() == 1 ? config.ground_truth.front() : config.ground_truth[index];
    const PoseSequence gt = load_pose_file(gt_path);
    std::vector<Camera> cameras = config.cameras ? load_camera_file(*config.cameras)
                                  : !gt.cameras().empty() ? gt.cameras()
                                                          : raw.cameras();
    const MpjpeResult m = mpjpe_family(raw, gt, cameras);
    r.mpjpe_mm = m.mpjpe;
    r.mpjpe_g_mm = m.mpjpe_g;
    r.mpjpe_2d_px = m.mpjpe_2d;
  }
  if (mode == RunMode::Metrics) return out;

  PoseSequence seq = raw;
  const int window = clamp_median_window(config.preprocess.median_window, T);
  if (window != config.preprocess.median_window) {
    r.flags.push_back("median_window_clamped");
    log_warning(r.sequence + ": median window reduced to " + std::to_string(window) + " frames");
  }
  if (window > 1) seq = median_filter(seq, window);
  if (config.preprocess.constrain_bones) seq = constrain_bone_lengths(seq);

  HumanoidModel model = config.model ? load_model_file(*config.model) : HumanoidModel::default_humanoid();
  model.validate_humanoid();

  const KinematicTrajectory reference = initialize_kinematics(seq, model);
  const std::vector<std::array<bool, 2>> feet =
      foot_contact_flags(estimate_contact_states(seq, plane, config.thresholds.contact));

  // Without sole observations the lowest joints are the ankles, which sit above the floor.
  GroundPlane sim_plane = plane;
  if (!seq.skeleton().has_sole_joints()) sim_plane.height -= model.sole_clearance();

  WindowPlan plan = config.plan;
  plan.threads = config.threads;
  CostWeights weights = config.weights;
  if (weights.joint.empty()) weights.joint = CostWeights::for_model(model, reference.neutral_ankles).joint;
  try {
    plan.validate(raw.fps());
    weights.validate(model);
  } catch (const InvalidArgument& e) {
    throw SchemaError(std::string("config: ") + e.what());
  }

  OptimizationResult result = mode == RunMode::Evaluate
                                  ? optimize_sequence(reference, feet, model, sim_plane, plan, weights,
                                                      config.seed + index, config.sim)
                                  : simulate_reference(reference, model, sim_plane, config.sim);

  const FrameSeries kinematic = reference_series(reference, model, feet);
  const int n = static_cast<int>(result.simulated.size());
  std::vector<Vec3> sim_com;
  for (const Snapshot& s : result.simulated) sim_com.push_back(s.com);
  if (n > 0) {
    const std::vector<Vec3> kin_com(kinematic.com.begin(), kinematic.com.begin() + n);
    r.cd_mm = com_distance(kin_com, sim_com);
  }
  const StabilityResult psd =
      pose_stability_duration(stability_frames(result.simulated, kinematic.com_velocity, model, sim_plane), T,
                              config.thresholds.stationary_speed);
  r.psd = psd.psd;
  r.unbalanced = psd.unbalanced;
  r.fall_frame = psd.fall_frame;
  r.diverged = result.diverged;
  r.diverged_frame = result.diverged_frame;
  r.simulated_frames = n;
  if (result.diverged) r.flags.push_back("simulation_diverged");

  const Eigen::MatrixX2d forces = contact_force_series(result.simulated);
  for (int t = 0; t < forces.rows(); ++t) r.contact_forces.push_back({forces(t, 0), forces(t, 1)});
  r.windows = summarize_windows(result.windows);
  out.optimization = std::move(result);
  return out;
}

namespace {

void write_artifacts(const fs::path& dir, const SequenceResult& res, const HumanoidModel& model) {
  const PlausibilityReport& r = res.report;
  write_file_atomic(dir / "report.json", serialize_report(r));
  if (res.optimization) {
    write_file_atomic(dir / "contact_forces.csv", contact_forces_csv(r));
    write_file_atomic(dir / "cost_traces.csv", cost_traces_csv(r));
    write_file_atomic(dir / "optimized_trajectory.json", trajectory_to_json(model, *res.optimization).dump() + "\n");
  }
}

RunOutcome run(const RunConfig& config, RunMode mode) {
  config.validate();
  const size_t n = config.inputs.size();
  const std::vector<std::string> names = sequence_names(config.inputs);

  // One sequence uses every thread inside the optimizer; batches spread sequences instead.
  RunConfig inner = config;
  const int outer = static_cast<int>(std::min<size_t>(n, static_cast<size_t>(config.threads)));
  if (n > 1) inner.threads = 1;

  std::vector<std::optional<SequenceResult>> results(n);
  std::vector<std::exception_ptr> errors(n);
  parallel_for(static_cast<int>(n), outer, [&](int i, int) {
    try {
      results[i] = process_sequence(inner, static_cast<size_t>(i), mode);
      results[i]->report.sequence = names[i];
    } catch (...) {
      errors[i] = std::current_exception();
    }
  });

  const HumanoidModel model = config.model ? load_model_file(*config.model) : HumanoidModel::default_humanoid();
  RunOutcome outcome;
  std::string summary = summary_csv_header();
  for (size_t i = 0; i < n; ++i) {
    if (!results[i]) continue;
    write_artifacts(config.output / names[i], *results[i], model);
    summary += summary_csv_row(results[i]->report);
    if (results[i]->report.diverged) outcome.code = ExitCode::Diverged;
    outcome.reports.push_back(std::move(results[i]->report));
  }
  write_file_atomic(config.output / "summary.csv", summary);
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return outcome;
}

}  // namespace

RunOutcome run_evaluate(const RunConfig& config) { return run(config, RunMode::Evaluate); }
RunOutcome run_simulate(const RunConfig& config) { return run(config, RunMode::Simulate); }
RunOutcome run_metrics_only(const RunConfig& config) { return run(config, RunMode::Metrics); }

ValidationIssue validate_file(const fs::path& path) {
  ValidationIssue issue;
  issue.file = path;
  try {
    const json j = read_json_file(path);
    if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string())
      throw SchemaError(path.string() + ": missing 'kind' field");
    issue.kind = j["kind"].get<std::string>();
    try {
      if (issue.kind == "plausim.pose") {
        pose_from_json(j);
      } else if (issue.kind == "plausim.model") {
        model_from_json(j);
      } else if (issue.kind == "plausim.cameras") {
        check_header(j, "plausim.cameras");
        cameras_from_json(j);
      } else if (issue.kind == "plausim.config") {
        config_from_json(j, path.has_parent_path() ? path.parent_path() : fs::path(".")).validate();
      } else if (issue.kind == "plausim.report") {
        report_from_json(j);
      } else if (issue.kind == "plausim.trajectory") {
        check_header(j, "plausim.trajectory");
      } else {
        throw SchemaError("unknown document kind '" + issue.kind + "'");
      }
    } catch (const SchemaError& e) {
      throw SchemaError(path.string() + ": " + e.what());
    }
  } catch (const Error& e) {
    issue.message = e.what();
    issue.exit_code = exit_code_for(e);
  }
  return issue;
}

}  // namespace plausim
