#include "plausim/pose_core.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>

#include "plausim/errors.hpp"

namespace plausim {

std::string to_string(SkeletonFormat f) {
  switch (f) {
    case SkeletonFormat::H36M17: return "H36M17";
    case SkeletonFormat::NPC16: return "NPC16";
    case SkeletonFormat::BASE23: return "BASE23";
    case SkeletonFormat::Custom: return "CUSTOM";
  }
  return "CUSTOM";
}

SkeletonFormat skeleton_format_from_string(const std::string& s) {
  if (s == "H36M17") return SkeletonFormat::H36M17;
  if (s == "NPC16") return SkeletonFormat::NPC16;
  if (s == "BASE23") return SkeletonFormat::BASE23;
  if (s == "CUSTOM") return SkeletonFormat::Custom;
  throw SchemaError("unknown format_id '" + s + "'");
}

namespace {

struct FootName {
  FootSide side;
  bool sole;  // toe or heel
};

std::optional<FootName> parse_foot_name(const std::string& name) {
  FootSide side;
  std::string rest;
  if (name.starts_with("left_")) {
    side = FootSide::Left;
    rest = name.substr(5);
  } else if (name.starts_with("right_")) {
    side = FootSide::Right;
    rest = name.substr(6);
  } else {
    return std::nullopt;
  }
  if (rest == "ankle") return FootName{side, false};
  if (rest == "toe" || rest == "big_toe" || rest == "small_toe" || rest == "heel") return FootName{side, true};
  return std::nullopt;
}

}  // namespace

std::optional<int> Skeleton::find(const std::string& name) const {
  auto it = std::find(joint_names.begin(), joint_names.end(), name);
  if (it == joint_names.end()) return std::nullopt;
  return static_cast<int>(it - joint_names.begin());
}

int Skeleton::root() const {
  for (int j = 0; j < num_joints(); ++j)
    if (parent_index[j] < 0) return j;
  throw SchemaError("skeleton has no root joint");
}

std::vector<std::pair<int, int>> Skeleton::bones() const {
  std::vector<std::vector<int>> children(num_joints());
  for (int j = 0; j < num_joints(); ++j)
    if (parent_index[j] >= 0) children[parent_index[j]].push_back(j);
  std::vector<std::pair<int, int>> out;
  std::queue<int> open;
  open.push(root());
  while (!open.empty()) {
    const int p = open.front();
    open.pop();
    for (int c : children[p]) {
      out.emplace_back(p, c);
      open.push(c);
    }
  }
  return out;
}

std::vector<std::pair<int, FootSide>> Skeleton::foot_joints() const {
  std::vector<std::pair<int, FootSide>> out;
  for (int j = 0; j < num_joints(); ++j)
    if (auto f = parse_foot_name(joint_names[j])) out.emplace_back(j, f->side);
  return out;
}

bool Skeleton::has_sole_joints() const {
  return std::any_of(joint_names.begin(), joint_names.end(), [](const std::string& n) {
    auto f = parse_foot_name(n);
    return f && f->sole;
  });
}

void Skeleton::validate() const {
  const int J = num_joints();
  if (J == 0) throw SchemaError("skeleton has no joints");
  if (static_cast<int>(parent_index.size()) != J)
    throw SchemaError("parent_index length " + std::to_string(parent_index.size()) +
                      " does not match joint_names length " + std::to_string(J));
  std::set<std::string> seen;
  for (const auto& n : joint_names)
    if (!seen.insert(n).second) throw SchemaError("duplicate joint name '" + n + "'");
  int roots = 0;
  for (int j = 0; j < J; ++j) {
    const int p = parent_index[j];
    if (p < -1 || p >= J || p == j)
      throw SchemaError("joint '" + joint_names[j] + "' has invalid parent index " + std::to_string(p));
    if (p == -1) ++roots;
  }
  if (roots != 1) throw SchemaError("skeleton must have exactly one root, found " + std::to_string(roots));
  if (static_cast<int>(bones().size()) != J - 1) throw SchemaError("skeleton parent graph is not a single tree");

  const bool sole = has_sole_joints();
  if (format == SkeletonFormat::BASE23) {
    for (const char* side : {"left_", "right_"}) {
      const std::string s(side);
      const bool toe = find(s + "toe") || find(s + "big_toe");
      if (!toe || !find(s + "heel"))
        throw SchemaError("BASE23 skeleton requires " + s + "toe and " + s + "heel joints");
    }
  } else if ((format == SkeletonFormat::H36M17 || format == SkeletonFormat::NPC16) && sole) {
    throw SchemaError(to_string(format) + " skeleton must not contain toe or heel joints");
  }
}

Vec2 Camera::project(const Vec3& p) const {
  const Eigen::Vector3d h = projection * p.homogeneous();
  return h.head<2>() / h.z();
}

PoseSequence::PoseSequence(Skeleton skeleton, double fps, int num_frames)
    : skeleton_(std::move(skeleton)), fps_(fps), num_frames_(num_frames) {
  positions_.assign(static_cast<size_t>(num_frames_) * skeleton_.num_joints(), Vec3::Zero());
}

std::optional<Vec3> PoseSequence::joint(int t, const std::string& name) const {
  if (auto j = skeleton_.find(name)) return at(t, *j);
  auto midpoint = [&](const char* a, const char* b) -> std::optional<Vec3> {
    auto ja = skeleton_.find(a), jb = skeleton_.find(b);
    if (!ja || !jb) return std::nullopt;
    return 0.5 * (at(t, *ja) + at(t, *jb));
  };
  if (name == "pelvis") return midpoint("left_hip", "right_hip");
  if (name == "thorax" || name == "neck") return midpoint("left_shoulder", "right_shoulder");
  return std::nullopt;
}

void PoseSequence::validate() const {
  skeleton_.validate();
  if (num_frames_ < 2) throw SchemaError("pose sequence needs at least 2 frames, got " + std::to_string(num_frames_));
  if (!(fps_ > 0.0) || !std::isfinite(fps_)) throw SchemaError("fps must be positive");
  for (int t = 0; t < num_frames_; ++t)
    for (int j = 0; j < num_joints(); ++j)
      if (!at(t, j).allFinite())
        throw SchemaError("non-finite position at frame " + std::to_string(t) + ", joint '" +
                          skeleton_.joint_names[j] + "'");
}

bool ContactStates::foot(int t, FootSide side) const {
  for (int c = 0; c < num_columns(); ++c)
    if (sides[c] == side && at(t, c)) return true;
  return false;
}

PoseSequence median_filter(const PoseSequence& seq, int window) {
  const int T = seq.num_frames();
  if (window < 1 || window % 2 == 0)
    throw InvalidArgument("median_filter: window must be odd and >= 1, got " + std::to_string(window));
  if (window > T)
    throw InvalidArgument("median_filter: window " + std::to_string(window) + " exceeds sequence length " +
                          std::to_string(T));
  PoseSequence out = seq;
  const int half = window / 2;
  std::vector<double> buf(window);
  for (int j = 0; j < seq.num_joints(); ++j) {
    for (int k = 0; k < 3; ++k) {
      for (int t = 0; t < T; ++t) {
        for (int w = 0; w < window; ++w) {
          const int s = std::clamp(t - half + w, 0, T - 1);
          buf[w] = seq.at(s, j)[k];
        }
        std::nth_element(buf.begin(), buf.begin() + half, buf.end());
        out.at(t, j)[k] = buf[half];
      }
    }
  }
  return out;
}

PoseSequence constrain_bone_lengths(const PoseSequence& seq) {
  const auto bones = seq.skeleton().bones();
  const int T = seq.num_frames();
  std::vector<double> mean_length(bones.size(), 0.0);
  for (size_t b = 0; b < bones.size(); ++b) {
    double sum = 0.0;
    for (int t = 0; t < T; ++t) sum += (seq.at(t, bones[b].second) - seq.at(t, bones[b].first)).norm();
    mean_length[b] = sum / T;
  }
  PoseSequence out = seq;
  for (int t = 0; t < T; ++t) {
    for (size_t b = 0; b < bones.size(); ++b) {
      const auto [p, c] = bones[b];
      const Vec3 d = seq.at(t, c) - seq.at(t, p);
      const double n = d.norm();
      if (n < 1e-12) {
        const auto& names = seq.skeleton().joint_names;
        throw DegenerateGeometry("zero-length bone " + names[p] + "->" + names[c] + " at frame " +
                                 std::to_string(t));
      }
      out.at(t, c) = out.at(t, p) + d * (mean_length[b] / n);
    }
  }
  return out;
}

GroundPlane estimate_ground_plane(const PoseSequence& seq) {
  const int T = seq.num_frames();
  std::vector<double> heights;
  heights.reserve(static_cast<size_t>(T) * seq.num_joints());
  for (int t = 0; t < T; ++t)
    for (int j = 0; j < seq.num_joints(); ++j) heights.push_back(seq.at(t, j).z());
  const size_t k = std::max<size_t>(1, static_cast<size_t>(std::floor(0.05 * T)));
  std::partial_sort(heights.begin(), heights.begin() + k, heights.end());
  double sum = 0.0;
  for (size_t i = 0; i < k; ++i) sum += heights[i];
  GroundPlane plane;
  plane.height = sum / static_cast<double>(k);
  plane.low_confidence = T < 20;
  return plane;
}

ContactStates estimate_contact_states(const PoseSequence& seq, const GroundPlane& plane,
                                      const ContactThresholds& thresholds) {
  ContactStates cs;
  for (auto [j, side] : seq.skeleton().foot_joints()) {
    cs.joints.push_back(j);
    cs.sides.push_back(side);
  }
  const int T = seq.num_frames();
  cs.num_frames = T;
  cs.flags.assign(static_cast<size_t>(T) * cs.joints.size(), 0);
  for (int c = 0; c < cs.num_columns(); ++c) {
    const int j = cs.joints[c];
    for (int t = 0; t < T; ++t) {
      const int a = (t + 1 < T) ? t : t - 1;  // last frame copies the previous speed
      const double speed = (seq.at(a + 1, j) - seq.at(a, j)).norm() * seq.fps();
      const bool contact = plane.height_of(seq.at(t, j)) < thresholds.height && speed < thresholds.speed;
      cs.flags[static_cast<size_t>(t) * cs.joints.size() + c] = contact ? 1 : 0;
    }
  }
  return cs;
}

}  // namespace plausim
