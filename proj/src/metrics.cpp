#include "plausim/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "plausim/errors.hpp"

namespace plausim {

namespace {

double cross2(const Vec2& o, const Vec2& a, const Vec2& b) {
  return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

double segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  const double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return (p - (a + t * ab)).norm();
}

Vec2 in_plane(const Vec3& p) { return p.head<2>(); }

}  // namespace

std::vector<Vec2> convex_hull(std::vector<Vec2> pts) {
  std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;
  // Andrew's monotone chain.
  std::vector<Vec2> hull(2 * pts.size());
  size_t k = 0;
  for (size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && cross2(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
    hull[k++] = pts[i];
  }
  for (size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && cross2(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

bool cog_inside(const std::vector<Vec2>& hull, const Vec2& p, double tolerance) {
  const size_t n = hull.size();
  if (n == 0) return false;
  if (n == 1) return (p - hull[0]).norm() <= tolerance;
  if (n == 2) return segment_distance(p, hull[0], hull[1]) <= tolerance;
  bool inside = true;
  for (size_t i = 0; i < n; ++i) {
    const Vec2& a = hull[i];
    const Vec2& b = hull[(i + 1) % n];
    const Vec2 e = b - a;
    // signed distance to the left of the edge
    if ((e.x() * (p.y() - a.y()) - e.y() * (p.x() - a.x())) / e.norm() < 0.0) {
      inside = false;
      break;
    }
  }
  if (inside) return true;
  for (size_t i = 0; i < n; ++i)
    if (segment_distance(p, hull[i], hull[(i + 1) % n]) <= tolerance) return true;
  return false;
}

BaseOfSupport base_of_support(const std::vector<Vec3>& contact_points, const GroundPlane& plane) {
  (void)plane;  // horizontal plane: projection drops the height
  std::vector<Vec2> pts;
  pts.reserve(contact_points.size());
  for (const Vec3& p : contact_points) pts.push_back(in_plane(p));
  return {convex_hull(std::move(pts))};
}

BaseOfSupport base_of_support(const Snapshot& snapshot, const HumanoidModel& model, const GroundPlane& plane) {
  std::vector<Vec3> pts;
  for (const auto& [link, p] : snapshot.ground_points)
    if (model.links[link].foot) pts.push_back(p);
  return base_of_support(pts, plane);
}

double com_distance(const std::vector<Vec3>& kinematic, const std::vector<Vec3>& simulated) {
  if (kinematic.size() != simulated.size())
    throw InvalidArgument("com_distance: series lengths differ (" + std::to_string(kinematic.size()) + " vs " +
                          std::to_string(simulated.size()) + ")");
  if (kinematic.empty()) return 0.0;
  double sum = 0.0;
  for (size_t t = 0; t < kinematic.size(); ++t) sum += (kinematic[t] - simulated[t]).norm();
  return 1000.0 * sum / static_cast<double>(kinematic.size());
}

StabilityResult pose_stability_duration(const std::vector<StabilityFrame>& frames, int num_frames,
                                        double stationary_speed) {
  StabilityResult r;
  r.num_frames = num_frames;
  r.fall_frame = num_frames;
  const int available = std::min<int>(num_frames, static_cast<int>(frames.size()));
  for (int t = 0; t < available; ++t) {
    const StabilityFrame& f = frames[t];
    if (f.non_foot_contact && r.fall_frame == num_frames) r.fall_frame = t;
    if (f.kinematic_com_velocity.norm() < stationary_speed && !cog_inside(f.support.hull, in_plane(f.com)))
      ++r.unbalanced;
  }
  if (available < num_frames) r.fall_frame = std::min(r.fall_frame, available);
  r.psd = std::clamp(std::min(num_frames - r.unbalanced, r.fall_frame), 0, num_frames);
  return r;
}

std::vector<StabilityFrame> stability_frames(const std::vector<Snapshot>& snapshots,
                                             const std::vector<Vec3>& kinematic_com_velocity,
                                             const HumanoidModel& model, const GroundPlane& plane) {
  std::vector<StabilityFrame> out;
  for (size_t t = 0; t < snapshots.size() && t < kinematic_com_velocity.size(); ++t) {
    StabilityFrame f;
    f.com = snapshots[t].com;
    f.kinematic_com_velocity = kinematic_com_velocity[t];
    f.support = base_of_support(snapshots[t], model, plane);
    for (const auto& gp : snapshots[t].ground_points)
      if (!model.links[gp.first].foot) f.non_foot_contact = true;
    out.push_back(std::move(f));
  }
  return out;
}

double footskate(const PoseSequence& seq, const ContactStates& contacts, const GroundPlane& plane, double threshold) {
  (void)plane;
  const int T = seq.num_frames();
  if (contacts.num_frames != T) throw InvalidArgument("footskate: contact states do not match the sequence length");
  if (T == 0) return 0.0;
  int skating = 0;
  for (int t = 1; t < T; ++t) {
    for (int c = 0; c < contacts.num_columns(); ++c) {
      if (!contacts.at(t, c)) continue;
      const int j = contacts.joints[c];
      if ((in_plane(seq.at(t, j)) - in_plane(seq.at(t - 1, j))).norm() > threshold) {
        ++skating;
        break;
      }
    }
  }
  return 100.0 * skating / T;
}

double ground_penetration(const PoseSequence& seq, const GroundPlane& plane) {
  double sum = 0.0;
  long count = 0;
  for (int t = 0; t < seq.num_frames(); ++t)
    for (int j = 0; j < seq.num_joints(); ++j) {
      const double h = plane.height_of(seq.at(t, j));
      if (h < 0.0) {
        sum -= h;
        ++count;
      }
    }
  return count > 0 ? 1000.0 * sum / count : 0.0;
}

MpjpeResult mpjpe_family(const PoseSequence& pred, const PoseSequence& gt, const std::vector<Camera>& cameras) {
  if (pred.num_frames() != gt.num_frames())
    throw InvalidArgument("prediction and ground truth differ in length (" + std::to_string(pred.num_frames()) +
                          " vs " + std::to_string(gt.num_frames()) + ")");
  MpjpeResult r;
  std::vector<std::pair<int, int>> pairs;
  for (int j = 0; j < pred.num_joints(); ++j) {
    const std::string& name = pred.skeleton().joint_names[j];
    if (auto g = gt.skeleton().find(name)) {
      pairs.emplace_back(j, *g);
      r.joints.push_back(name);
    }
  }
  if (pairs.empty()) throw SchemaError("prediction and ground truth share no joints");
  const int T = pred.num_frames();
  auto root = [](const PoseSequence& s, int t) -> Vec3 {
    if (auto p = s.joint(t, "pelvis")) return *p;
    return s.at(t, s.skeleton().root());
  };
  double rel = 0.0, global = 0.0;
  for (int t = 0; t < T; ++t) {
    const Vec3 rp = root(pred, t), rg = root(gt, t);
    for (auto [a, b] : pairs) {
      rel += ((pred.at(t, a) - rp) - (gt.at(t, b) - rg)).norm();
      global += (pred.at(t, a) - gt.at(t, b)).norm();
    }
  }
  const double n = static_cast<double>(T) * pairs.size();
  r.mpjpe = n > 0 ? 1000.0 * rel / n : 0.0;
  r.mpjpe_g = n > 0 ? 1000.0 * global / n : 0.0;
  if (!cameras.empty()) {
    double px = 0.0;
    for (const Camera& cam : cameras) {
      double sum = 0.0;
      for (int t = 0; t < T; ++t)
        for (auto [a, b] : pairs) sum += (cam.project(pred.at(t, a)) - cam.project(gt.at(t, b))).norm();
      px += n > 0 ? sum / n : 0.0;
    }
    r.mpjpe_2d = px / cameras.size();
  }
  return r;
}

}  // namespace plausim
