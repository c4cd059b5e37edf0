#include <cmath>
#include <random>

#include <doctest.h>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "plausim/errors.hpp"
#include "plausim/metrics.hpp"

using namespace plausim;

namespace {

double rel_dev(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace

TEST_CASE("convex hull") {
  SUBCASE("square with interior and collinear points") {
    const auto h = convex_hull({{0, 0}, {1, 0}, {1, 1}, {0, 1}, {0.5, 0.5}, {0.5, 0}, {1, 1}});
    REQUIRE(h.size() == 4);
    double area = 0.0;
    for (size_t i = 0; i < h.size(); ++i) area += h[i].x() * h[(i + 1) % 4].y() - h[(i + 1) % 4].x() * h[i].y();
    CHECK(area == doctest::Approx(2.0));  // counter-clockwise
  }
  SUBCASE("degenerate") {
    CHECK(convex_hull({}).empty());
    CHECK(convex_hull({{1, 2}, {1, 2}}).size() == 1);
    CHECK(convex_hull({{0, 0}, {1, 1}, {2, 2}}).size() == 2);
  }
}

TEST_CASE("cog_inside") {
  const std::vector<Vec2> sq = convex_hull({{-0.1, -0.1}, {0.1, -0.1}, {0.1, 0.1}, {-0.1, 0.1}});
  CHECK(cog_inside(sq, {0, 0}));
  CHECK_FALSE(cog_inside(sq, {0.2, 0}));
  CHECK(cog_inside(sq, {0.1, 0.0}));
  CHECK(cog_inside(sq, {0.1 + 5e-10, 0.0}));
  CHECK_FALSE(cog_inside(sq, {0.1 + 1e-6, 0.0}));
  CHECK_FALSE(cog_inside({}, {0, 0}));
  CHECK(cog_inside({{0, 0}}, {0, 1e-10}));
  CHECK(cog_inside({{0, 0}, {1, 0}}, {0.5, 1e-10}));
  CHECK_FALSE(cog_inside({{0, 0}, {1, 0}}, {1.5, 0}));
}

TEST_CASE("hull containment matches the brute-force oracle") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1, 1);
  std::uniform_int_distribution<int> count(1, 12);
  for (int i = 0; i < 50; ++i) {
    std::vector<Vec2> pts(count(rng));
    for (auto& p : pts) p = Vec2(u(rng), u(rng));
    const auto hull = convex_hull(pts);
    for (int q = 0; q < 40; ++q) {
      const Vec2 p(u(rng), u(rng));
      CHECK(cog_inside(hull, p) == oracle::hull_contains(pts, p));
    }
    for (const Vec2& p : pts) CHECK(cog_inside(hull, p));  // every input point is inside
  }
}

TEST_CASE("com_distance") {
  std::vector<Vec3> a(7, Vec3(0.1, 0.2, 0.9)), b = a;
  CHECK(com_distance(a, b) == 0.0);
  for (auto& p : b) p += Vec3(0.03, 0, 0);
  CHECK(com_distance(a, b) == doctest::Approx(30.0));
  CHECK_THROWS_AS(com_distance(a, std::vector<Vec3>(3)), InvalidArgument);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  std::vector<Vec3> x(10), y(10);
  for (int t = 0; t < 10; ++t) x[t] = Vec3(g(rng), g(rng), g(rng)), y[t] = Vec3(g(rng), g(rng), g(rng));
  CHECK(rel_dev(com_distance(x, y), oracle::com_distance(x, y)) < 1e-9);
}

TEST_CASE("pose stability duration") {
  const std::vector<Vec2> sq = {{-0.1, -0.1}, {0.1, -0.1}, {0.1, 0.1}, {-0.1, 0.1}};
  auto frame = [&](Vec3 com, bool stationary, bool fall) {
    StabilityFrame f;
    f.com = com;
    f.support.hull = sq;
    f.kinematic_com_velocity = stationary ? Vec3::Zero() : Vec3(1, 0, 0);
    f.non_foot_contact = fall;
    return f;
  };
  SUBCASE("balanced stand") {
    std::vector<StabilityFrame> fs(100, frame({0, 0, 0.9}, true, false));
    const StabilityResult r = pose_stability_duration(fs, 100);
    CHECK(r.psd == 100);
    CHECK(r.unbalanced == 0);
    CHECK(r.fall_frame == 100);
  }
  SUBCASE("torso contact at frame 40 while moving") {
    std::vector<StabilityFrame> fs(100, frame({0.3, 0, 0.9}, false, false));
    for (int t = 40; t < 100; ++t) fs[t].non_foot_contact = true;
    CHECK(pose_stability_duration(fs, 100).psd == 40);
  }
  SUBCASE("stationary with CoG outside for 25 frames") {
    std::vector<StabilityFrame> fs(100, frame({0, 0, 0.9}, true, false));
    for (int t = 10; t < 35; ++t) fs[t].com = Vec3(0.2, 0, 0.9);
    const StabilityResult r = pose_stability_duration(fs, 100);
    CHECK(r.unbalanced == 25);
    CHECK(r.psd == 75);
  }
  SUBCASE("the stationary threshold is strict") {
    std::vector<StabilityFrame> fs(10, frame({0.2, 0, 0.9}, true, false));
    fs[3].kinematic_com_velocity = Vec3(0.25, 0, 0);
    CHECK(pose_stability_duration(fs, 10).unbalanced == 9);
  }
  SUBCASE("missing frames count as a fall") {
    std::vector<StabilityFrame> fs(30, frame({0, 0, 0.9}, true, false));
    const StabilityResult r = pose_stability_duration(fs, 50);
    CHECK(r.fall_frame == 30);
    CHECK(r.psd == 30);
    CHECK(pose_stability_duration({}, 50).psd == 0);
  }
  SUBCASE("scripted fixtures") {
    for (int k = 0; k < 20; ++k) {
      const oracle::PsdFixture f = oracle::psd_fixture(k);
      const StabilityResult r = pose_stability_duration(f.frames, f.num_frames);
      CHECK(r.unbalanced == f.unbalanced);
      CHECK(r.fall_frame == f.fall_frame);
      CHECK(r.psd == std::min(f.num_frames - f.unbalanced, f.fall_frame));
      CHECK(r.psd >= 0);
      CHECK(r.psd <= f.num_frames);
    }
  }
}

TEST_CASE("stability frames from snapshots") {
  const HumanoidModel m = HumanoidModel::default_humanoid();
  Snapshot s;
  s.com = Vec3(0.01, 0.0, 0.9);
  const int lf = *m.foot_link(FootSide::Left), rf = *m.foot_link(FootSide::Right);
  s.ground_points = {{lf, Vec3(-0.1, 0.1, 0)}, {lf, Vec3(0.1, 0.1, 0)}, {rf, Vec3(-0.1, -0.1, 0)}, {rf, Vec3(0.1, -0.1, 0)}};
  auto fs = stability_frames({s}, {Vec3::Zero()}, m, GroundPlane{});
  REQUIRE(fs.size() == 1);
  CHECK(fs[0].support.hull.size() == 4);
  CHECK_FALSE(fs[0].non_foot_contact);
  s.ground_points.push_back({m.link_index("pelvis"), Vec3(0, 0, 0)});
  fs = stability_frames({s}, {Vec3::Zero()}, m, GroundPlane{});
  CHECK(fs[0].non_foot_contact);
  CHECK(fs[0].support.hull.size() == 4);  // non-foot points are not support
}

TEST_CASE("footskate") {
  const HumanoidModel m = HumanoidModel::default_humanoid();
  PoseSequence seq = fixtures::standing_sequence(m, 100, 25.0);
  const GroundPlane plane;
  ContactStates pinned = estimate_contact_states(seq, plane);
  CHECK(footskate(seq, pinned, plane) == 0.0);

  ContactStates none = pinned;
  std::fill(none.flags.begin(), none.flags.end(), 0);
  const int ankle = *seq.skeleton().find("left_ankle");
  for (int t = 0; t < 100; ++t) seq.at(t, ankle).x() += 0.05 * t;
  CHECK(footskate(seq, none, plane) == 0.0);

  // one foot sliding 5 cm per frame during a 10 frame contact span
  ContactStates span = none;
  int col = -1;
  for (int c = 0; c < span.num_columns(); ++c)
    if (span.joints[c] == ankle) col = c;
  REQUIRE(col >= 0);
  for (int t = 30; t < 40; ++t) span.flags[t * span.num_columns() + col] = 1;
  CHECK(footskate(seq, span, plane) == doctest::Approx(10.0));

  std::mt19937_64 rng(5);
  for (int i = 0; i < 20; ++i) {
    const PoseSequence r = oracle::random_sequence(fixtures::marker_skeleton(true), 30, rng, 0.02);
    const ContactStates c = oracle::random_contacts(r, rng);
    CHECK(rel_dev(footskate(r, c, plane), oracle::footskate(r, c, 0.02)) < 1e-9);
  }
  CHECK_THROWS_AS(footskate(oracle::random_sequence(seq.skeleton(), 3, rng), pinned, plane), InvalidArgument);
}

TEST_CASE("ground penetration") {
  const HumanoidModel m = HumanoidModel::default_humanoid();
  PoseSequence seq = fixtures::standing_sequence(m, 10, 25.0);
  CHECK(ground_penetration(seq, GroundPlane{}) == 0.0);
  for (int t = 0; t < 10; ++t)
    for (int j = 0; j < seq.num_joints(); ++j) seq.at(t, j).z() -= 0.012;
  // only the sole joints were at z = 0
  CHECK(ground_penetration(seq, GroundPlane{}) == doctest::Approx(12.0));
  std::mt19937_64 rng(6);
  for (int i = 0; i < 20; ++i) {
    const PoseSequence r = oracle::random_sequence(fixtures::marker_skeleton(true), 12, rng, 0.4);
    GroundPlane p;
    p.height = 0.1 * i - 0.5;
    CHECK(rel_dev(ground_penetration(r, p), oracle::ground_penetration(r, p.height)) < 1e-9);
    CHECK(ground_penetration(r, p) >= 0.0);
  }
}

TEST_CASE("MPJPE family") {
  const HumanoidModel m = HumanoidModel::default_humanoid();
  const PoseSequence gt = fixtures::standing_sequence(m, 5, 25.0);
  SUBCASE("identical") {
    const MpjpeResult r = mpjpe_family(gt, gt, {});
    CHECK(r.mpjpe == 0.0);
    CHECK(r.mpjpe_g == 0.0);
    CHECK_FALSE(r.mpjpe_2d.has_value());
    CHECK(r.joints.size() == static_cast<size_t>(gt.num_joints()));
  }
  SUBCASE("global translation only affects MPJPE-G") {
    PoseSequence p = gt;
    for (int t = 0; t < 5; ++t)
      for (int j = 0; j < p.num_joints(); ++j) p.at(t, j) += Vec3(0.0, 0.04, 0.03);
    const MpjpeResult r = mpjpe_family(p, gt, {});
    CHECK(r.mpjpe < 1e-9);
    CHECK(r.mpjpe_g == doctest::Approx(50.0));
  }
  SUBCASE("random instances match the oracle") {
    std::mt19937_64 rng(12);
    for (int i = 0; i < 20; ++i) {
      const PoseSequence pred = oracle::random_sequence(fixtures::marker_skeleton(true), 8, rng);
      const PoseSequence truth = oracle::perturbed_subset(pred, rng, 0.05);
      const std::vector<Camera> cams = {oracle::random_camera(rng), oracle::random_camera(rng)};
      const MpjpeResult r = mpjpe_family(pred, truth, cams);
      const oracle::Mpjpe o = oracle::mpjpe(pred, truth, cams);
      CHECK(rel_dev(r.mpjpe, o.relative) < 1e-9);
      CHECK(rel_dev(r.mpjpe_g, o.global) < 1e-9);
      REQUIRE(r.mpjpe_2d.has_value());
      CHECK(rel_dev(*r.mpjpe_2d, o.pixels) < 1e-9);
    }
  }
  SUBCASE("errors") {
    PoseSequence shorter = fixtures::standing_sequence(m, 4, 25.0);
    CHECK_THROWS_AS(mpjpe_family(shorter, gt, {}), InvalidArgument);
    Skeleton other;
    other.joint_names = {"nose"};
    other.parent_index = {-1};
    CHECK_THROWS_AS(mpjpe_family(PoseSequence(other, 25.0, 5), gt, {}), SchemaError);
  }
}
