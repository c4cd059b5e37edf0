#include "plausim/report.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "plausim/errors.hpp"
#include "plausim/kinematics.hpp"
#include "plausim/pose_io.hpp"

namespace plausim {

using nlohmann::json;

namespace {

template <class T>
json optional_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

template <class T>
std::optional<T> optional_field(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw SchemaError(std::string("report.") + key + ": wrong type");
  }
}

template <class T>
T required(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw SchemaError(std::string("report: missing field '") + key + "'");
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw SchemaError(std::string("report.") + key + ": wrong type");
  }
}

std::string optional_cell(const std::optional<double>& v) { return v ? format_number(*v) : std::string(); }

std::string optional_cell(const std::optional<int>& v) { return v ? std::to_string(*v) : std::string(); }

// CSV field quoting for sequence names.
std::string csv_text(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string format_number(double x) {
  if (!std::isfinite(x)) return std::isnan(x) ? "nan" : (x > 0 ? "inf" : "-inf");
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

bool WindowSummary::operator==(const WindowSummary& o) const {
  if (history.size() != o.history.size()) return false;
  for (size_t i = 0; i < history.size(); ++i) {
    const auto &a = history[i], &b = o.history[i];
    if (a.generation != b.generation || a.best_so_far != b.best_so_far || a.generation_best != b.generation_best ||
        a.sigma != b.sigma)
      return false;
  }
  return index == o.index && begin == o.begin && count == o.count && initial_cost == o.initial_cost &&
         best_cost == o.best_cost && diverged == o.diverged && evaluations == o.evaluations;
}

bool PlausibilityReport::operator==(const PlausibilityReport& o) const {
  return sequence == o.sequence && mode == o.mode && frames == o.frames && fps == o.fps &&
         ground_height == o.ground_height && cd_mm == o.cd_mm && psd == o.psd && unbalanced == o.unbalanced &&
         fall_frame == o.fall_frame && fs_percent == o.fs_percent && gp_mm == o.gp_mm && mpjpe_mm == o.mpjpe_mm &&
         mpjpe_g_mm == o.mpjpe_g_mm && mpjpe_2d_px == o.mpjpe_2d_px && diverged == o.diverged &&
         diverged_frame == o.diverged_frame && simulated_frames == o.simulated_frames && flags == o.flags &&
         windows == o.windows && contact_forces == o.contact_forces && config == o.config;
}

json report_to_json(const PlausibilityReport& r) {
  json j;
  j["kind"] = "plausim.report";
  j["schema_version"] = kSchemaVersion;
  j["sequence"] = r.sequence;
  j["mode"] = r.mode;
  j["frames"] = r.frames;
  j["fps"] = r.fps;
  j["ground_height"] = r.ground_height;
  j["metrics"] = {{"cd_mm", optional_json(r.cd_mm)},
                  {"psd", optional_json(r.psd)},
                  {"N", optional_json(r.unbalanced)},
                  {"t_F", optional_json(r.fall_frame)},
                  {"fs_percent", r.fs_percent},
                  {"gp_mm", r.gp_mm},
                  {"mpjpe_mm", optional_json(r.mpjpe_mm)},
                  {"mpjpe_g_mm", optional_json(r.mpjpe_g_mm)},
                  {"mpjpe_2d_px", optional_json(r.mpjpe_2d_px)}};
  j["simulation"] = {{"diverged", r.diverged},
                     {"diverged_frame", r.diverged_frame},
                     {"simulated_frames", r.simulated_frames}};
  j["flags"] = r.flags;
  json windows = json::array();
  for (const WindowSummary& w : r.windows) {
    json hist = json::array();
    for (const CmaesGeneration& g : w.history)
      hist.push_back(json::array({g.generation, g.best_so_far, g.generation_best, g.sigma}));
    windows.push_back({{"index", w.index},
                       {"begin", w.begin},
                       {"count", w.count},
                       {"initial_cost", w.initial_cost},
                       {"best_cost", w.best_cost},
                       {"diverged", w.diverged},
                       {"evaluations", w.evaluations},
                       {"history", hist}});
  }
  j["windows"] = windows;
  json forces = json::array();
  for (const auto& f : r.contact_forces) forces.push_back(json::array({f[0], f[1]}));
  j["contact_forces"] = forces;
  j["config"] = r.config;
  return j;
}

PlausibilityReport report_from_json(const json& j) {
  check_header(j, "plausim.report");
  PlausibilityReport r;
  r.sequence = required<std::string>(j, "sequence");
  r.mode = required<std::string>(j, "mode");
  r.frames = required<int>(j, "frames");
  r.fps = required<double>(j, "fps");
  r.ground_height = required<double>(j, "ground_height");
  const json m = required<json>(j, "metrics");
  r.cd_mm = optional_field<double>(m, "cd_mm");
  r.psd = optional_field<int>(m, "psd");
  r.unbalanced = optional_field<int>(m, "N");
  r.fall_frame = optional_field<int>(m, "t_F");
  r.fs_percent = required<double>(m, "fs_percent");
  r.gp_mm = required<double>(m, "gp_mm");
  r.mpjpe_mm = optional_field<double>(m, "mpjpe_mm");
  r.mpjpe_g_mm = optional_field<double>(m, "mpjpe_g_mm");
  r.mpjpe_2d_px = optional_field<double>(m, "mpjpe_2d_px");
  const json s = required<json>(j, "simulation");
  r.diverged = required<bool>(s, "diverged");
  r.diverged_frame = required<int>(s, "diverged_frame");
  r.simulated_frames = required<int>(s, "simulated_frames");
  r.flags = required<std::vector<std::string>>(j, "flags");
  for (const json& w : required<json>(j, "windows")) {
    WindowSummary ws;
    ws.index = required<int>(w, "index");
    ws.begin = required<int>(w, "begin");
    ws.count = required<int>(w, "count");
    ws.initial_cost = required<double>(w, "initial_cost");
    ws.best_cost = required<double>(w, "best_cost");
    ws.diverged = required<bool>(w, "diverged");
    ws.evaluations = required<int>(w, "evaluations");
    for (const json& g : required<json>(w, "history")) {
      if (!g.is_array() || g.size() != 4) throw SchemaError("report.windows.history: expected 4-element rows");
      ws.history.push_back({g[0].get<int>(), g[1].get<double>(), g[2].get<double>(), g[3].get<double>()});
    }
    r.windows.push_back(std::move(ws));
  }
  for (const json& f : required<json>(j, "contact_forces")) {
    if (!f.is_array() || f.size() != 2) throw SchemaError("report.contact_forces: expected [left, right] rows");
    r.contact_forces.push_back({f[0].get<double>(), f[1].get<double>()});
  }
  r.config = required<json>(j, "config");

  if (r.psd && (*r.psd < 0 || *r.psd > r.frames)) throw SchemaError("report.metrics.psd: outside [0, frames]");
  if (r.fs_percent < 0.0 || r.fs_percent > 100.0) throw SchemaError("report.metrics.fs_percent: outside [0, 100]");
  if (r.gp_mm < 0.0) throw SchemaError("report.metrics.gp_mm: negative");
  return r;
}

PlausibilityReport load_report_file(const std::filesystem::path& path) {
  const json j = read_json_file(path);
  try {
    return report_from_json(j);
  } catch (const SchemaError& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

std::string serialize_report(const PlausibilityReport& r) { return report_to_json(r).dump(2) + "\n"; }

std::vector<WindowSummary> summarize_windows(const std::vector<WindowTrace>& traces) {
  std::vector<WindowSummary> out;
  for (size_t i = 0; i < traces.size(); ++i) {
    const WindowTrace& t = traces[i];
    out.push_back({static_cast<int>(i), t.window.begin, t.window.count, t.initial_cost, t.best_cost, t.diverged,
                   t.evaluations, t.history});
  }
  return out;
}

std::string summary_csv_header() {
  return "sequence,frames,fps,cd_mm,psd,psd_T,N,t_F,fs_percent,gp_mm,mpjpe_mm,mpjpe_g_mm,mpjpe_2d_px,diverged\n";
}

std::string summary_csv_row(const PlausibilityReport& r) {
  std::ostringstream o;
  o << csv_text(r.sequence) << ',' << r.frames << ',' << format_number(r.fps) << ',' << optional_cell(r.cd_mm) << ','
    << optional_cell(r.psd) << ',' << r.frames << ',' << optional_cell(r.unbalanced) << ','
    << optional_cell(r.fall_frame) << ',' << format_number(r.fs_percent) << ',' << format_number(r.gp_mm) << ','
    << optional_cell(r.mpjpe_mm) << ',' << optional_cell(r.mpjpe_g_mm) << ',' << optional_cell(r.mpjpe_2d_px) << ','
    << (r.diverged ? 1 : 0) << '\n';
  return o.str();
}

std::string contact_forces_csv(const PlausibilityReport& r) {
  std::ostringstream o;
  o << "frame,time,left_N,right_N\n";
  for (size_t t = 0; t < r.contact_forces.size(); ++t)
    o << t << ',' << format_number(static_cast<double>(t) / r.fps) << ',' << format_number(r.contact_forces[t][0])
      << ',' << format_number(r.contact_forces[t][1]) << '\n';
  return o.str();
}

std::string cost_traces_csv(const PlausibilityReport& r) {
  std::ostringstream o;
  o << "window,generation,best_so_far,generation_best,sigma\n";
  for (const WindowSummary& w : r.windows)
    for (const CmaesGeneration& g : w.history)
      o << w.index << ',' << g.generation << ',' << format_number(g.best_so_far) << ','
        << format_number(g.generation_best) << ',' << format_number(g.sigma) << '\n';
  return o.str();
}

json trajectory_to_json(const HumanoidModel& model, const OptimizationResult& result) {
  json targets = json::array();
  for (const KinematicPose& p : result.targets.poses) {
    const Eigen::VectorXd q = to_coordinates(model, p);
    targets.push_back(std::vector<double>(q.data(), q.data() + q.size()));
  }
  json simulated = json::array();
  json com = json::array();
  for (const Snapshot& s : result.simulated) {
    simulated.push_back(std::vector<double>(s.q.data(), s.q.data() + s.q.size()));
    com.push_back(json::array({s.com.x(), s.com.y(), s.com.z()}));
  }
  json layout = json::array();
  for (const Link& l : model.links)
    if (l.nq() > 0) layout.push_back({{"joint", l.joint.name}, {"type", to_string(l.joint.type)}, {"q_index", l.q_index}});
  return {{"kind", "plausim.trajectory"}, {"schema_version", kSchemaVersion}, {"fps", result.targets.fps},
          {"coordinates", layout}, {"targets", targets}, {"simulated", simulated}, {"simulated_com", com}};
}

}  // namespace plausim
