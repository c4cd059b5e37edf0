#include <cmath>
#include <numbers>
#include <random>

#include <doctest.h>

#include "fixtures.hpp"
#include "plausim/errors.hpp"
#include "plausim/traj_opt.hpp"

using namespace plausim;

namespace {

FrameSeries random_series(int n, int channels, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 0.3);
  FrameSeries s;
  for (int t = 0; t < n; ++t) {
    s.com.emplace_back(g(rng), g(rng), 0.9 + g(rng));
    s.com_velocity.emplace_back(g(rng), g(rng), g(rng));
    s.root_orientation.push_back(from_rotation_vector(Vec3(g(rng), g(rng), g(rng))));
    Eigen::VectorXd c(channels);
    for (int i = 0; i < channels; ++i) c[i] = g(rng);
    s.channels.push_back(c);
    s.acceleration.push_back(Eigen::VectorXd::Zero(channels));
    s.feet.push_back({t % 3 != 0, t % 2 == 0});
  }
  return s;
}

const HumanoidModel& model() {
  static const HumanoidModel m = HumanoidModel::default_humanoid();
  return m;
}

}  // namespace

TEST_CASE("identical series cost nothing") {
  const FrameSeries ref = random_series(12, 28, 1);
  FrameSeries sim = ref;
  const CostTerms c = trajectory_cost(sim, ref, Eigen::VectorXd::Ones(28), 25.0);
  CHECK(c.com == 0.0);
  CHECK(c.com_velocity == 0.0);
  CHECK(c.orientation == 0.0);
  CHECK(c.pose == 0.0);
  CHECK(c.velocity == 0.0);
  CHECK(c.acceleration == 0.0);
  CHECK(c.feet == 0.0);
  CHECK(c.total(CostWeights{}) == 0.0);

  // any single perturbed term makes the cost positive
  sim.feet[4][1] = !sim.feet[4][1];
  CHECK(trajectory_cost(sim, ref, Eigen::VectorXd::Ones(28), 25.0).total(CostWeights{}) > 0.0);
}

TEST_CASE("constant 0.1 m CoM offset over 12 frames costs 2.4") {
  const FrameSeries ref = random_series(12, 28, 2);
  FrameSeries sim = ref;
  for (Vec3& c : sim.com) c.x() += 0.1;
  const CostTerms c = trajectory_cost(sim, ref, Eigen::VectorXd::Ones(28), 25.0);
  CHECK(c.total(CostWeights{}) == doctest::Approx(2.4).epsilon(1e-9));
  CHECK(c.com == doctest::Approx(0.12).epsilon(1e-9));
}

TEST_CASE("root orientation 90 degrees off at one frame adds pi/4") {
  const FrameSeries ref = random_series(12, 28, 3);
  FrameSeries sim = ref;
  sim.root_orientation[5] = ref.root_orientation[5] * Quat(Eigen::AngleAxisd(std::numbers::pi / 2, Vec3::UnitY()));
  const CostTerms c = trajectory_cost(sim, ref, Eigen::VectorXd::Ones(28), 25.0);
  CHECK(c.orientation == doctest::Approx(std::numbers::pi / 4).epsilon(1e-9));
  CHECK(c.total(CostWeights{}) == doctest::Approx(std::numbers::pi / 4).epsilon(1e-9));
  // sign of the quaternion does not matter
  sim.root_orientation[5].coeffs() *= -1.0;
  CHECK(trajectory_cost(sim, ref, Eigen::VectorXd::Ones(28), 25.0).orientation ==
        doctest::Approx(std::numbers::pi / 4).epsilon(1e-9));
}

TEST_CASE("pose, velocity, acceleration and feet terms") {
  const FrameSeries ref = random_series(5, 3, 4);
  FrameSeries sim = ref;
  sim.channels[2][1] += 0.2;
  Eigen::VectorXd w(3);
  w << 1.0, 0.5, 2.0;
  CostTerms c = trajectory_cost(sim, ref, w, 25.0);
  CHECK(c.pose == doctest::Approx(0.5 * 0.04));
  // forward differences: frames 1 and 2 see the bump
  CHECK(c.velocity == doctest::Approx(2 * 0.5 * std::pow(0.2 * 25.0, 2)));
  // angle differences wrap
  sim = ref;
  sim.channels[0][0] += 2.0 * std::numbers::pi;
  sim.channels[1][0] += 2.0 * std::numbers::pi;
  c = trajectory_cost(sim, ref, w, 25.0);
  CHECK(c.pose < 1e-20);
  sim = ref;
  sim.acceleration[3] = Eigen::Vector3d(1, 2, 2);
  sim.feet[0] = {!ref.feet[0][0], !ref.feet[0][1]};
  c = trajectory_cost(sim, ref, w, 25.0);
  CHECK(c.acceleration == doctest::Approx(9.0));
  CHECK(c.feet == 2.0);
  CHECK_THROWS_AS(trajectory_cost(sim, ref.slice(0, 4), w, 25.0), InvalidArgument);
}

TEST_CASE("scaling the weights scales the cost and keeps the argmin") {
  const FrameSeries ref = random_series(10, 28, 5);
  std::vector<FrameSeries> candidates;
  for (int i = 0; i < 12; ++i) candidates.push_back(random_series(10, 28, 100 + i));
  CostWeights w;
  CostWeights w3 = w;
  for (double* v : {&w3.com, &w3.com_velocity, &w3.orientation, &w3.pose, &w3.velocity, &w3.acceleration, &w3.feet})
    *v *= 3.0;
  int best = -1, best3 = -1;
  double lo = 1e300, lo3 = 1e300;
  for (int i = 0; i < 12; ++i) {
    const CostTerms c = trajectory_cost(candidates[i], ref, Eigen::VectorXd::Ones(28), 25.0);
    CHECK(c.total(w3) == doctest::Approx(3.0 * c.total(w)).epsilon(1e-12));
    if (c.total(w) < lo) lo = c.total(w), best = i;
    if (c.total(w3) < lo3) lo3 = c.total(w3), best3 = i;
  }
  CHECK(best == best3);
}

TEST_CASE("channel weights zero the ankles without sole observations") {
  const CostWeights w = CostWeights::for_model(model(), true);
  const Eigen::VectorXd cw = w.channel_weights(model());
  REQUIRE(cw.size() == 28);
  for (int li : model().controlled()) {
    const Link& l = model().links[li];
    const double expected = l.foot ? 0.0 : 1.0;
    for (int k = 0; k < l.nv(); ++k) CHECK(cw[l.channel_index + k] == expected);
  }
  CHECK(CostWeights::for_model(model(), false).channel_weights(model()).minCoeff() == 1.0);
  CostWeights bad;
  bad.joint = {1.0, 2.0};
  CHECK_THROWS_AS(bad.validate(model()), InvalidArgument);
  bad = CostWeights{};
  bad.com = -1.0;
  CHECK_THROWS_AS(bad.validate(model()), InvalidArgument);
}

TEST_CASE("plan_windows") {
  WindowPlan p;
  auto covered = [](const std::vector<Window>& ws, int T) {
    std::vector<int> hit(T, 0);
    for (const Window& w : ws)
      for (int i = 0; i < w.count; ++i) ++hit[w.begin + i];
    return std::all_of(hit.begin(), hit.end(), [](int h) { return h > 0; });
  };
  SUBCASE("defaults over 100 frames") {
    const auto ws = plan_windows(100, 25.0, p);
    CHECK(ws.front().begin == 0);
    CHECK(ws.front().count == 14);  // 0.5 s spans 12.5 frame intervals, rounded to 13
    CHECK(ws[1].begin == 7);
    CHECK(ws.back().begin + ws.back().count == 100);
    CHECK(covered(ws, 100));
    for (size_t k = 1; k < ws.size(); ++k) CHECK(ws[k].begin < ws[k - 1].begin + ws[k - 1].count);
  }
  SUBCASE("two windows of one second without overlap share the boundary frame") {
    p.window_length = 1.0;
    p.overlap = 0.0;
    const auto ws = plan_windows(50, 25.0, p);
    REQUIRE(ws.size() == 2);
    CHECK(ws[0].begin == 0);
    CHECK(ws[0].count == 26);
    CHECK(ws[1].begin == 25);
    CHECK(ws[1].count == 25);
  }
  SUBCASE("short sequence gives a single truncated window") {
    const auto ws = plan_windows(7, 25.0, p);
    REQUIRE(ws.size() == 1);
    CHECK(ws[0].count == 7);
  }
  SUBCASE("invalid plans") {
    CHECK_THROWS_AS(plan_windows(1, 25.0, p), InvalidArgument);
    p.overlap = 1.0;
    CHECK_THROWS_AS(plan_windows(50, 25.0, p), InvalidArgument);
    p.overlap = 0.5;
    p.population = 2;
    CHECK_THROWS_AS(plan_windows(50, 25.0, p), InvalidArgument);
    p.population = 10;
    p.window_length = 0.01;
    CHECK_THROWS_AS(plan_windows(50, 25.0, p), InvalidArgument);
  }
}

TEST_CASE("reference series of a standing sequence") {
  const PoseSequence seq = fixtures::standing_sequence(model(), 6, 25.0);
  const KinematicTrajectory traj = initialize_kinematics(seq, model());
  std::vector<std::array<bool, 2>> feet(6, {true, true});
  const FrameSeries s = reference_series(traj, model(), feet);
  REQUIRE(s.num_frames() == 6);
  for (int t = 0; t < 6; ++t) {
    CHECK(s.com_velocity[t].norm() < 1e-12);
    CHECK(s.channels[t].norm() < 1e-9);
  }
  CHECK_THROWS_AS(reference_series(traj, model(), std::vector<std::array<bool, 2>>(3)), InvalidArgument);
}

TEST_CASE("initial state is lifted out of the ground") {
  const PoseSequence seq = fixtures::standing_sequence(model(), 3, 25.0);
  KinematicTrajectory traj = initialize_kinematics(seq, model());
  for (auto& p : traj.poses) p.root_position.z() -= 0.05;
  Simulator sim(model());
  const SimState s = initial_state(sim, traj, GroundPlane{}, 0);
  CHECK(s.q[2] == doctest::Approx(fixtures::standing_root_height(model())).epsilon(1e-9));
  const SimState s2 = initial_state(sim, traj, GroundPlane{}, 2);
  CHECK(s2.time == doctest::Approx(0.08));
}

TEST_CASE("optimize_sequence on a standing reference") {
  const PoseSequence seq = fixtures::standing_sequence(model(), 25, 25.0);
  const KinematicTrajectory traj = initialize_kinematics(seq, model());
  const std::vector<std::array<bool, 2>> feet(25, {true, true});
  WindowPlan plan;
  plan.window_length = 0.5;
  plan.overlap = 0.0;
  plan.population = 6;
  plan.iterations = 2;
  const CostWeights w = CostWeights::for_model(model(), false);
  const OptimizationResult a = optimize_sequence(traj, feet, model(), GroundPlane{}, plan, w, 5);
  REQUIRE(a.windows.size() == 2);
  CHECK_FALSE(a.diverged);
  REQUIRE(a.simulated.size() == 25);
  CHECK(a.targets.num_frames() == 25);
  const FrameSeries ref = reference_series(traj, model(), feet);
  for (int t = 0; t < 25; ++t) CHECK((a.simulated[t].com - ref.com[t]).norm() < 0.1);
  for (const WindowTrace& tr : a.windows) {
    CHECK(tr.best_cost <= tr.initial_cost);
    CHECK(tr.evaluations == 1 + 2 * 6);
    CHECK(tr.history.size() == 2);
  }
  // window 1 starts where window 0 ended
  CHECK(a.windows[1].window.begin == 13);

  SUBCASE("deterministic under a fixed seed, independent of threads") {
    plan.threads = 3;
    const OptimizationResult b = optimize_sequence(traj, feet, model(), GroundPlane{}, plan, w, 5);
    for (size_t k = 0; k < a.windows.size(); ++k) {
      CHECK(a.windows[k].best_cost == b.windows[k].best_cost);
      REQUIRE(a.windows[k].history.size() == b.windows[k].history.size());
      for (size_t g = 0; g < a.windows[k].history.size(); ++g)
        CHECK(a.windows[k].history[g].generation_best == b.windows[k].history[g].generation_best);
    }
    for (int t = 0; t < 25; ++t) CHECK((a.simulated[t].q.array() == b.simulated[t].q.array()).all());
  }
}

TEST_CASE("simulate_reference tracks a standing pose") {
  const PoseSequence seq = fixtures::standing_sequence(model(), 50, 25.0);
  const KinematicTrajectory traj = initialize_kinematics(seq, model());
  const OptimizationResult r = simulate_reference(traj, model(), GroundPlane{});
  CHECK_FALSE(r.diverged);
  REQUIRE(r.simulated.size() == 50);
  const Vec3 c0 = compute_com(model(), to_coordinates(model(), traj.poses[0]));
  for (const Snapshot& s : r.simulated) CHECK((s.com - c0).norm() < 0.1);
}
