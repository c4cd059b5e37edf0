#include "plausim/pose_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "plausim/errors.hpp"

namespace plausim {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const json& field(const json& j, const std::string& key, const std::string& where) {
  if (!j.is_object()) throw SchemaError(where + ": expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw SchemaError(where + ": missing field '" + key + "'");
  return *it;
}

double number(const json& v, const std::string& where) {
  if (!v.is_number()) throw SchemaError(where + ": expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw SchemaError(where + ": non-finite number");
  return d;
}

double number_field(const json& j, const std::string& key, const std::string& where) {
  return number(field(j, key, where), where + "." + key);
}

double number_or(const json& j, const std::string& key, double fallback, const std::string& where) {
  auto it = j.find(key);
  return it == j.end() ? fallback : number(*it, where + "." + key);
}

std::string string_field(const json& j, const std::string& key, const std::string& where) {
  const json& v = field(j, key, where);
  if (!v.is_string()) throw SchemaError(where + "." + key + ": expected a string");
  return v.get<std::string>();
}

Vec3 vec3(const json& v, const std::string& where) {
  if (!v.is_array() || v.size() != 3) throw SchemaError(where + ": expected an array of 3 numbers");
  return {number(v[0], where + "[0]"), number(v[1], where + "[1]"), number(v[2], where + "[2]")};
}

Mat3 mat3(const json& v, const std::string& where) {
  if (!v.is_array() || v.size() != 3) throw SchemaError(where + ": expected a 3x3 array");
  Mat3 m;
  for (int r = 0; r < 3; ++r) m.row(r) = vec3(v[r], where + "[" + std::to_string(r) + "]").transpose();
  return m;
}

json to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

json to_json(const Mat3& m) { return json::array({to_json(Vec3(m.row(0))), to_json(Vec3(m.row(1))), to_json(Vec3(m.row(2)))}); }

JointType joint_type_from_string(const std::string& s, const std::string& where) {
  if (s == "free") return JointType::Free;
  if (s == "fixed") return JointType::Fixed;
  if (s == "spherical") return JointType::Spherical;
  if (s == "revolute") return JointType::Revolute;
  throw SchemaError(where + ": unknown joint type '" + s + "'");
}

Camera camera_from_json(const json& c, const std::string& where) {
  Camera cam;
  cam.name = c.contains("name") ? string_field(c, "name", where) : std::string();
  const json& p = field(c, "projection", where);
  if (!p.is_array() || p.size() != 3) throw SchemaError(where + ".projection: expected a 3x4 array");
  for (int r = 0; r < 3; ++r) {
    const json& row = p[r];
    if (!row.is_array() || row.size() != 4) throw SchemaError(where + ".projection: expected a 3x4 array");
    for (int k = 0; k < 4; ++k) cam.projection(r, k) = number(row[k], where + ".projection");
  }
  return cam;
}

json camera_to_json(const Camera& c) {
  json rows = json::array();
  for (int r = 0; r < 3; ++r)
    rows.push_back(json::array({c.projection(r, 0), c.projection(r, 1), c.projection(r, 2), c.projection(r, 3)}));
  return {{"name", c.name}, {"projection", rows}};
}

}  // namespace

json read_json_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("cannot read '" + path.string() + "'");
  try {
    return json::parse(buf.str());
  } catch (const json::parse_error& e) {
    throw SchemaError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

void write_file_atomic(const fs::path& path, const std::string& content) {
  const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
  const fs::path tmp = dir / ("." + path.filename().string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) throw IoError("failed writing '" + tmp.string() + "'");
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw IoError("cannot move '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
  }
}

void check_header(const json& j, const std::string& kind) {
  if (!j.is_object()) throw SchemaError(kind + ": top level must be an object");
  if (j.contains("kind")) {
    const std::string k = string_field(j, "kind", kind);
    if (k != kind) throw SchemaError("expected a '" + kind + "' document, found '" + k + "'");
  }
  const json& v = field(j, "schema_version", kind);
  if (!v.is_number_integer()) throw SchemaError(kind + ".schema_version: expected an integer");
  if (v.get<int>() != kSchemaVersion)
    throw SchemaError(kind + ": unsupported schema_version " + std::to_string(v.get<int>()) + " (expected " +
                      std::to_string(kSchemaVersion) + ")");
}

PoseSequence pose_from_json(const json& j) {
  const std::string where = "pose";
  check_header(j, "plausim.pose");
  Skeleton sk;
  sk.format = skeleton_format_from_string(string_field(j, "format_id", where));
  const json& names = field(j, "joint_names", where);
  if (!names.is_array()) throw SchemaError("pose.joint_names: expected an array of strings");
  for (const json& n : names) {
    if (!n.is_string()) throw SchemaError("pose.joint_names: expected an array of strings");
    sk.joint_names.push_back(n.get<std::string>());
  }
  const json& parents = field(j, "parent_index", where);
  if (!parents.is_array()) throw SchemaError("pose.parent_index: expected an array of integers");
  for (const json& p : parents) {
    if (!p.is_number_integer()) throw SchemaError("pose.parent_index: expected an array of integers");
    sk.parent_index.push_back(p.get<int>());
  }
  sk.validate();
  const double fps = number_field(j, "fps", where);
  const json& pos = field(j, "positions", where);
  if (!pos.is_array()) throw SchemaError("pose.positions: expected a T x J x 3 array");
  const int T = static_cast<int>(pos.size());
  const int J = sk.num_joints();
  PoseSequence seq(sk, fps, T);
  for (int t = 0; t < T; ++t) {
    const json& frame = pos[t];
    if (!frame.is_array() || static_cast<int>(frame.size()) != J)
      throw SchemaError("pose.positions[" + std::to_string(t) + "]: expected " + std::to_string(J) + " joints");
    for (int k = 0; k < J; ++k)
      seq.at(t, k) = vec3(frame[k], "pose.positions[" + std::to_string(t) + "][" + std::to_string(k) + "]");
  }
  if (j.contains("cameras")) seq.cameras() = cameras_from_json(j);
  seq.validate();
  return seq;
}

json pose_to_json(const PoseSequence& seq) {
  json j;
  j["kind"] = "plausim.pose";
  j["schema_version"] = kSchemaVersion;
  j["format_id"] = to_string(seq.skeleton().format);
  j["fps"] = seq.fps();
  j["joint_names"] = seq.skeleton().joint_names;
  j["parent_index"] = seq.skeleton().parent_index;
  json pos = json::array();
  for (int t = 0; t < seq.num_frames(); ++t) {
    json frame = json::array();
    for (int k = 0; k < seq.num_joints(); ++k) frame.push_back(to_json(seq.at(t, k)));
    pos.push_back(std::move(frame));
  }
  j["positions"] = std::move(pos);
  if (!seq.cameras().empty()) j["cameras"] = cameras_to_json(seq.cameras())["cameras"];
  return j;
}

PoseSequence load_pose_file(const fs::path& path) {
  const json j = read_json_file(path);
  try {
    return pose_from_json(j);
  } catch (const SchemaError& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

void save_pose_file(const PoseSequence& seq, const fs::path& path) { write_file_atomic(path, pose_to_json(seq).dump(1) + "\n"); }

std::vector<Camera> cameras_from_json(const json& j) {
  const json& list = field(j, "cameras", "cameras");
  if (!list.is_array()) throw SchemaError("cameras: expected an array");
  std::vector<Camera> out;
  for (size_t i = 0; i < list.size(); ++i) out.push_back(camera_from_json(list[i], "cameras[" + std::to_string(i) + "]"));
  return out;
}

json cameras_to_json(const std::vector<Camera>& cameras) {
  json list = json::array();
  for (const Camera& c : cameras) list.push_back(camera_to_json(c));
  return {{"kind", "plausim.cameras"}, {"schema_version", kSchemaVersion}, {"cameras", list}};
}

std::vector<Camera> load_camera_file(const fs::path& path) {
  const json j = read_json_file(path);
  try {
    check_header(j, "plausim.cameras");
    return cameras_from_json(j);
  } catch (const SchemaError& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

HumanoidModel model_from_json(const json& j) {
  check_header(j, "plausim.model");
  HumanoidModel m;
  if (j.contains("name")) m.name = string_field(j, "name", "model");
  const json& links = field(j, "links", "model");
  if (!links.is_array() || links.empty()) throw SchemaError("model.links: expected a non-empty array");
  for (size_t i = 0; i < links.size(); ++i) {
    const json& lj = links[i];
    const std::string where = "model.links[" + std::to_string(i) + "]";
    Link l;
    l.name = string_field(lj, "name", where);
    const json& parent = field(lj, "parent", where);
    if (parent.is_null()) {
      l.parent = -1;
    } else if (parent.is_string()) {
      auto p = m.find_link(parent.get<std::string>());
      if (!p) throw SchemaError(where + ": parent '" + parent.get<std::string>() + "' must be defined before its child");
      l.parent = *p;
    } else {
      throw SchemaError(where + ".parent: expected a link name or null");
    }
    l.mass = number_field(lj, "mass", where);
    l.com = vec3(field(lj, "com", where), where + ".com");
    l.inertia = mat3(field(lj, "inertia", where), where + ".inertia");
    const json& jj = field(lj, "joint", where);
    const std::string jw = where + ".joint";
    l.joint.name = string_field(jj, "name", jw);
    l.joint.type = joint_type_from_string(string_field(jj, "type", jw), jw);
    l.joint.origin = jj.contains("origin") ? vec3(jj["origin"], jw + ".origin") : Vec3::Zero();
    if (l.joint.type == JointType::Revolute) l.joint.axis = vec3(field(jj, "axis", jw), jw + ".axis");
    l.joint.lower = number_or(jj, "lower", l.joint.lower, jw);
    l.joint.upper = number_or(jj, "upper", l.joint.upper, jw);
    l.joint.kp = number_or(jj, "kp", 0.0, jw);
    l.joint.kd = number_or(jj, "kd", 0.0, jw);
    l.joint.torque_limit = number_or(jj, "torque_limit", 0.0, jw);
    if (lj.contains("geometry")) {
      const json& geoms = lj["geometry"];
      if (!geoms.is_array()) throw SchemaError(where + ".geometry: expected an array");
      for (size_t g = 0; g < geoms.size(); ++g) {
        const std::string gw = where + ".geometry[" + std::to_string(g) + "]";
        Geometry geom;
        const std::string type = string_field(geoms[g], "type", gw);
        if (type == "capsule") {
          geom.kind = Geometry::Kind::Capsule;
          geom.a = vec3(field(geoms[g], "a", gw), gw + ".a");
          geom.b = vec3(field(geoms[g], "b", gw), gw + ".b");
          geom.radius = number_field(geoms[g], "radius", gw);
          if (!(geom.radius > 0.0)) throw SchemaError(gw + ".radius: must be positive");
        } else if (type == "box") {
          geom.kind = Geometry::Kind::Box;
          geom.center = vec3(field(geoms[g], "center", gw), gw + ".center");
          geom.half_extents = vec3(field(geoms[g], "half_extents", gw), gw + ".half_extents");
          if (!(geom.half_extents.minCoeff() > 0.0)) throw SchemaError(gw + ".half_extents: must be positive");
        } else {
          throw SchemaError(gw + ": unknown geometry type '" + type + "'");
        }
        l.geometry.push_back(geom);
      }
    }
    if (lj.contains("foot") && !lj["foot"].is_null()) {
      const std::string side = string_field(lj, "foot", where);
      if (side == "left")
        l.foot = FootSide::Left;
      else if (side == "right")
        l.foot = FootSide::Right;
      else
        throw SchemaError(where + ".foot: expected 'left', 'right' or null");
    }
    m.links.push_back(std::move(l));
  }
  if (j.contains("markers")) {
    const json& markers = j["markers"];
    if (!markers.is_object()) throw SchemaError("model.markers: expected an object");
    for (const auto& [name, mj] : markers.items()) {
      const std::string where = "model.markers." + name;
      m.markers[name] = {string_field(mj, "link", where), vec3(field(mj, "offset", where), where + ".offset")};
    }
  }
  m.finalize();
  m.validate();
  return m;
}

json model_to_json(const HumanoidModel& m) {
  json links = json::array();
  for (const Link& l : m.links) {
    json lj;
    lj["name"] = l.name;
    lj["parent"] = l.parent >= 0 ? json(m.links[l.parent].name) : json(nullptr);
    lj["mass"] = l.mass;
    lj["com"] = to_json(l.com);
    lj["inertia"] = to_json(l.inertia);
    json jj;
    jj["name"] = l.joint.name;
    jj["type"] = to_string(l.joint.type);
    jj["origin"] = to_json(l.joint.origin);
    if (l.joint.type == JointType::Revolute) jj["axis"] = to_json(l.joint.axis);
    jj["lower"] = l.joint.lower;
    jj["upper"] = l.joint.upper;
    jj["kp"] = l.joint.kp;
    jj["kd"] = l.joint.kd;
    jj["torque_limit"] = l.joint.torque_limit;
    lj["joint"] = jj;
    json geoms = json::array();
    for (const Geometry& g : l.geometry) {
      if (g.kind == Geometry::Kind::Capsule)
        geoms.push_back({{"type", "capsule"}, {"a", to_json(g.a)}, {"b", to_json(g.b)}, {"radius", g.radius}});
      else
        geoms.push_back({{"type", "box"}, {"center", to_json(g.center)}, {"half_extents", to_json(g.half_extents)}});
    }
    lj["geometry"] = geoms;
    lj["foot"] = l.foot ? json(*l.foot == FootSide::Left ? "left" : "right") : json(nullptr);
    links.push_back(std::move(lj));
  }
  json markers = json::object();
  for (const auto& [name, mk] : m.markers) markers[name] = {{"link", mk.link}, {"offset", to_json(mk.offset)}};
  return {{"kind", "plausim.model"}, {"schema_version", kSchemaVersion}, {"name", m.name}, {"links", links},
          {"markers", markers}};
}

HumanoidModel load_model_file(const fs::path& path) {
  const json j = read_json_file(path);
  try {
    return model_from_json(j);
  } catch (const SchemaError& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

void save_model_file(const HumanoidModel& model, const fs::path& path) {
  write_file_atomic(path, model_to_json(model).dump(2) + "\n");
}

}  // namespace plausim
