#include "plausim/traj_opt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>

#include "plausim/errors.hpp"

namespace plausim {

CostWeights CostWeights::for_model(const HumanoidModel& model, bool neutral_ankles) {
  CostWeights w;
  for (int li : model.controlled()) w.joint.push_back(neutral_ankles && model.links[li].foot ? 0.0 : 1.0);
  return w;
}

void CostWeights::validate(const HumanoidModel& model) const {
  for (double v : {com, com_velocity, orientation, pose, velocity, acceleration, feet})
    if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidArgument("cost weights must be finite and non-negative");
  if (!joint.empty() && joint.size() != model.controlled().size())
    throw InvalidArgument("joint weight array has " + std::to_string(joint.size()) + " entries, model has " +
                          std::to_string(model.controlled().size()) + " controllable joints");
  for (double v : joint)
    if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidArgument("joint weights must be finite and non-negative");
}

Eigen::VectorXd CostWeights::channel_weights(const HumanoidModel& model) const {
  validate(model);
  Eigen::VectorXd w(model.num_channels());
  const auto& ctl = model.controlled();
  for (size_t j = 0; j < ctl.size(); ++j) {
    const Link& l = model.links[ctl[j]];
    w.segment(l.channel_index, l.nv()).setConstant(joint.empty() ? 1.0 : joint[j]);
  }
  return w;
}

void WindowPlan::validate(double fps) const {
  if (!(window_length > 0.0) || window_length * fps < 1.0)
    throw InvalidArgument("window length must span at least two target frames");
  if (!(overlap >= 0.0 && overlap < 1.0)) throw InvalidArgument("window overlap must be in [0, 1)");
  if (iterations < 0) throw InvalidArgument("iterations must be non-negative");
  if (population < 4) throw InvalidArgument("population must be at least 4");
  if (!(sigma0 > 0.0)) throw InvalidArgument("sigma0 must be positive");
  if (!(knot_spacing > 0.0)) throw InvalidArgument("knot spacing must be positive");
  if (!(divergence_penalty > 0.0)) throw InvalidArgument("divergence penalty must be positive");
  if (threads < 1) throw InvalidArgument("thread count must be at least 1");
}

std::vector<Window> plan_windows(int num_frames, double fps, const WindowPlan& plan) {
  plan.validate(fps);
  if (num_frames < 2) throw InvalidArgument("sequence needs at least 2 frames");
  // A window spanning L seconds holds round(L * fps) + 1 frames; neighbours share
  // at least their boundary frame so the next window starts from a simulated state.
  const int frames = std::max(2, static_cast<int>(std::lround(plan.window_length * fps)) + 1);
  const int stride = std::max(1, static_cast<int>(std::lround((frames - 1) * (1.0 - plan.overlap))));
  std::vector<Window> out;
  for (int b = 0;; b += stride) {
    const int count = std::min(frames, num_frames - b);
    out.push_back({b, count});
    if (b + count >= num_frames) break;
  }
  return out;
}

FrameSeries FrameSeries::slice(int begin, int count) const {
  FrameSeries s;
  auto cut = [&](const auto& v, auto& out) {
    if (v.empty()) return;
    out.assign(v.begin() + begin, v.begin() + begin + count);
  };
  if (begin < 0 || begin + count > num_frames()) throw InvalidArgument("series slice out of range");
  cut(com, s.com);
  cut(com_velocity, s.com_velocity);
  cut(root_orientation, s.root_orientation);
  cut(channels, s.channels);
  cut(acceleration, s.acceleration);
  cut(feet, s.feet);
  return s;
}

double CostTerms::total(const CostWeights& w) const {
  return w.com * com + w.com_velocity * com_velocity + w.orientation * orientation + w.pose * pose +
         w.velocity * velocity + w.acceleration * acceleration + w.feet * feet;
}

namespace {

Eigen::VectorXd wrapped(const Eigen::VectorXd& d) { return d.unaryExpr([](double a) { return wrap_angle(a); }); }

Eigen::VectorXd channel_rate(const std::vector<Eigen::VectorXd>& ch, int t, double fps) {
  const int n = static_cast<int>(ch.size());
  const int a = t + 1 < n ? t : t - 1;
  return wrapped(ch[a + 1] - ch[a]) * fps;
}

}  // namespace

CostTerms trajectory_cost(const FrameSeries& sim, const FrameSeries& ref, const Eigen::VectorXd& channel_weights,
                          double fps) {
  const int n = sim.num_frames();
  if (ref.num_frames() != n || static_cast<int>(sim.channels.size()) != n ||
      static_cast<int>(ref.channels.size()) != n || static_cast<int>(sim.feet.size()) != n ||
      static_cast<int>(ref.feet.size()) != n)
    throw InvalidArgument("trajectory_cost: simulated and reference series differ in length");
  CostTerms c;
  for (int t = 0; t < n; ++t) {
    c.com += (sim.com[t] - ref.com[t]).squaredNorm();
    c.com_velocity += (sim.com_velocity[t] - ref.com_velocity[t]).squaredNorm();
    // arccos |<a, b>| in a form that stays accurate near identical orientations
    const Eigen::Vector4d a = sim.root_orientation[t].coeffs(), b = ref.root_orientation[t].coeffs();
    const Eigen::Vector4d bs = a.dot(b) < 0.0 ? Eigen::Vector4d(-b) : b;
    c.orientation += 2.0 * std::atan2((a - bs).norm(), (a + bs).norm());
    const Eigen::VectorXd dq = wrapped(sim.channels[t] - ref.channels[t]);
    c.pose += channel_weights.dot(dq.cwiseAbs2());
    if (n >= 2) {
      const Eigen::VectorXd dv = channel_rate(sim.channels, t, fps) - channel_rate(ref.channels, t, fps);
      c.velocity += channel_weights.dot(dv.cwiseAbs2());
    }
    if (!sim.acceleration.empty()) c.acceleration += sim.acceleration[t].squaredNorm();
    for (int side = 0; side < 2; ++side) c.feet += sim.feet[t][side] != ref.feet[t][side] ? 1.0 : 0.0;
  }
  return c;
}

FrameSeries reference_series(const KinematicTrajectory& traj, const HumanoidModel& model,
                             const std::vector<std::array<bool, 2>>& feet) {
  const int T = traj.num_frames();
  if (static_cast<int>(feet.size()) != T) throw InvalidArgument("contact flags do not cover the trajectory");
  FrameSeries s;
  s.feet = feet;
  const Eigen::MatrixXd ch = T > 0 ? unwrapped_channels(traj, model, 0, T) : Eigen::MatrixXd();
  for (int t = 0; t < T; ++t) {
    s.com.push_back(compute_com(model, to_coordinates(model, traj.poses[t])));
    s.root_orientation.push_back(traj.poses[t].root_orientation);
    s.channels.push_back(ch.row(t).transpose());
  }
  for (int t = 0; t < T; ++t) {
    const int a = t + 1 < T ? t : t - 1;
    s.com_velocity.push_back(T >= 2 ? Vec3((s.com[a + 1] - s.com[a]) * traj.fps) : Vec3::Zero());
  }
  return s;
}

std::vector<std::array<bool, 2>> foot_contact_flags(const ContactStates& contacts) {
  std::vector<std::array<bool, 2>> out(contacts.num_frames);
  for (int t = 0; t < contacts.num_frames; ++t)
    out[t] = {contacts.foot(t, FootSide::Left), contacts.foot(t, FootSide::Right)};
  return out;
}

FrameSeries simulated_series(const std::vector<Snapshot>& snapshots, const HumanoidModel& model) {
  FrameSeries s;
  const int root_dofs = model.links.empty() ? 0 : model.links[0].nv();
  for (const Snapshot& snap : snapshots) {
    s.com.push_back(snap.com);
    s.com_velocity.push_back(snap.com_velocity);
    const KinematicPose pose = pose_from_coordinates(model, snap.q);
    s.root_orientation.push_back(pose.root_orientation);
    s.channels.push_back(joint_channels(model, pose));
    s.acceleration.push_back(snap.acceleration.tail(snap.acceleration.size() - root_dofs));
    std::array<bool, 2> feet{false, false};
    for (const auto& [link, p] : snap.ground_points)
      if (auto side = model.links[link].foot) feet[static_cast<int>(*side)] = true;
    s.feet.push_back(feet);
  }
  return s;
}

SimState initial_state(const Simulator& sim, const KinematicTrajectory& traj, const GroundPlane& plane, int frame) {
  const HumanoidModel& model = sim.model();
  Eigen::VectorXd q = to_coordinates(model, traj.poses.at(frame));
  std::vector<std::pair<int, Vec3>> points;
  model.collision_points(model.forward_kinematics(q), plane.normal, points);
  double lowest = std::numeric_limits<double>::infinity();
  for (const auto& p : points) lowest = std::min(lowest, plane.height_of(p.second));
  if (lowest < 0.0 && model.links[0].joint.type == JointType::Free) q[model.links[0].q_index + 2] -= lowest;
  return sim.make_state(q, to_velocities(model, traj.velocities.at(frame)), frame / traj.fps);
}

WindowEvaluation evaluate_window(const Eigen::VectorXd& x, const WindowContext& ctx, Simulator& sim) {
  WindowEvaluation ev;
  CubicBSpline spline = ctx.spline;
  spline.set_parameters(x);
  const Window& w = ctx.window;
  ev.targets = spline_targets(spline, *ctx.reference, *ctx.model, w.begin, w.count);
  ev.rollout = sim.rollout(ctx.initial, ev.targets, 0, w.count, ctx.plane);
  const int n = static_cast<int>(ev.rollout.snapshots.size());
  const FrameSeries simulated = simulated_series(ev.rollout.snapshots, *ctx.model);
  ev.terms = trajectory_cost(simulated, ctx.target_series.slice(0, n), ctx.channel_weights, ctx.reference->fps);
  ev.cost = ev.terms.total(ctx.weights);
  if (ev.rollout.diverged)
    ev.cost += ctx.divergence_penalty * (1.0 + static_cast<double>(w.count - n) / w.count);
  if (!std::isfinite(ev.cost)) ev.cost = std::numeric_limits<double>::infinity();
  return ev;
}

double window_cost(const Eigen::VectorXd& x, const WindowContext& ctx, Simulator& sim) {
  return evaluate_window(x, ctx, sim).cost;
}

namespace {

SimState state_from_snapshot(const Simulator& sim, const Snapshot& s) {
  SimState st = sim.make_state(s.q, s.v, s.time);
  st.acceleration = s.acceleration;
  st.contacts = s.contacts;
  st.foot_force = s.foot_force;
  return st;
}

}  // namespace

OptimizationResult optimize_sequence(const KinematicTrajectory& reference, const std::vector<std::array<bool, 2>>& feet,
                                     const HumanoidModel& model, const GroundPlane& plane, const WindowPlan& plan,
                                     const CostWeights& weights, std::uint64_t seed, const SimParams& params) {
  const int T = reference.num_frames();
  const std::vector<Window> windows = plan_windows(T, reference.fps, plan);
  const FrameSeries ref_series = reference_series(reference, model, feet);
  const Eigen::VectorXd channel_weights = weights.channel_weights(model);

  std::vector<std::unique_ptr<Simulator>> sims;
  for (int i = 0; i < plan.threads; ++i) sims.push_back(std::make_unique<Simulator>(model, params));

  OptimizationResult result;
  KinematicTrajectory blend = reference;  // reference with accepted targets written over it
  std::vector<std::optional<Snapshot>> simulated(T);
  SimState state = initial_state(*sims[0], reference, plane, 0);

  for (size_t k = 0; k < windows.size(); ++k) {
    const Window w = windows[k];
    WindowContext ctx;
    ctx.model = &model;
    ctx.reference = &reference;
    ctx.target_series = ref_series.slice(w.begin, w.count);
    ctx.window = w;
    ctx.initial = state;
    ctx.plane = plane;
    ctx.weights = weights;
    ctx.channel_weights = channel_weights;
    ctx.divergence_penalty = plan.divergence_penalty;
    ctx.spline = fit_spline_to_reference(blend, model, w.begin, w.count, plan.knot_spacing).spline;
    const Eigen::VectorXd x0 = ctx.spline.parameters();

    CmaesOptions opt;
    opt.population = plan.population;
    opt.iterations = plan.iterations;
    opt.sigma0 = plan.sigma0;
    opt.seed = seed + k;
    opt.threads = plan.threads;
    const CmaesResult best = cmaes_minimize(
        [&](const Eigen::VectorXd& x, int worker) { return window_cost(x, ctx, *sims[worker]); }, x0, opt);

    WindowEvaluation ev = evaluate_window(best.best_x, ctx, *sims[0]);
    WindowTrace trace;
    trace.window = w;
    trace.history = best.history;
    trace.initial_cost = window_cost(x0, ctx, *sims[0]);
    trace.best_cost = ev.cost;
    trace.terms = ev.terms;
    trace.diverged = ev.rollout.diverged;
    trace.evaluations = best.evaluations;
    result.windows.push_back(trace);

    for (int i = 0; i < w.count; ++i) blend.poses[w.begin + i] = ev.targets.poses[i];
    for (size_t i = 0; i < ev.rollout.snapshots.size(); ++i) simulated[w.begin + i] = ev.rollout.snapshots[i];
    if (ev.rollout.diverged) {
      result.diverged = true;
      result.diverged_frame = w.begin + ev.rollout.diverged_frame;
      for (int t = result.diverged_frame; t < T; ++t) simulated[t].reset();
      break;
    }
    if (k + 1 < windows.size()) state = state_from_snapshot(*sims[0], *simulated[windows[k + 1].begin]);
  }

  result.targets = finite_difference_velocities(std::move(blend), reference.fps);
  for (const auto& s : simulated) {
    if (!s) break;
    result.simulated.push_back(*s);
  }
  return result;
}

OptimizationResult simulate_reference(const KinematicTrajectory& reference, const HumanoidModel& model,
                                      const GroundPlane& plane, const SimParams& params) {
  Simulator sim(model, params);
  OptimizationResult result;
  result.targets = reference;
  Rollout r = sim.rollout(initial_state(sim, reference, plane, 0), reference, 0, reference.num_frames(), plane);
  result.simulated = std::move(r.snapshots);
  result.diverged = r.diverged;
  result.diverged_frame = r.diverged ? r.diverged_frame : -1;
  return result;
}

}  // namespace plausim
