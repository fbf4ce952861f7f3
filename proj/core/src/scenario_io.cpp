#include <algorithm>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "drivelearn/error.hpp"
#include "drivelearn/scenario.hpp"

namespace drivelearn {

namespace {

std::ifstream open_input(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ValidationError("cannot open file '" + file.string() + "'");
  return in;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_real(const std::string& text, const std::string& source, int line, const char* field) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size() || !std::isfinite(v)) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ParseError(source, line, std::string("invalid number for ") + field + ": '" + text + "'");
  }
}

AgentId parse_id(const std::string& text, const std::string& source, int line) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ParseError(source, line, "invalid agent_id '" + text + "'");
  }
}

struct PendingCorridor {
  std::string id;
  int line = 0;
  std::vector<Point2> center, left, right;
  std::vector<std::string> successors;
  bool goal = false;
};

ArcPath make_path(std::vector<Point2> pts, const PendingCorridor& c, const char* which) {
  try {
    return ArcPath(std::move(pts));
  } catch (const std::invalid_argument& e) {
    throw ValidationError("corridor '" + c.id + "': " + which + " polyline invalid: " + e.what());
  }
}

}  // namespace

RoadMap parse_map(std::istream& in, const std::string& source) {
  std::vector<PendingCorridor> pending;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string keyword;
    ls >> keyword;
    if (keyword == "corridor") {
      PendingCorridor c;
      c.line = line_no;
      if (!(ls >> c.id)) throw ParseError(source, line_no, "corridor needs an id");
      pending.push_back(std::move(c));
      continue;
    }
    if (pending.empty()) throw ParseError(source, line_no, "'" + keyword + "' outside a corridor block");
    PendingCorridor& c = pending.back();
    if (keyword == "center" || keyword == "left" || keyword == "right") {
      std::string xs, ys, extra;
      if (!(ls >> xs >> ys) || (ls >> extra)) {
        throw ParseError(source, line_no, "'" + keyword + "' expects exactly two coordinates");
      }
      const Point2 p{parse_real(xs, source, line_no, "x"), parse_real(ys, source, line_no, "y")};
      (keyword == "center" ? c.center : keyword == "left" ? c.left : c.right).push_back(p);
    } else if (keyword == "succ") {
      std::string id;
      while (ls >> id) c.successors.push_back(id);
    } else if (keyword == "goal") {
      c.goal = true;
    } else {
      throw ParseError(source, line_no, "unknown keyword '" + keyword + "'");
    }
  }

  std::vector<Corridor> corridors;
  std::vector<std::string> goals;
  for (PendingCorridor& c : pending) {
    if (c.center.size() != c.left.size() || c.center.size() != c.right.size()) {
      throw ValidationError("corridor '" + c.id + "': center/left/right point counts differ");
    }
    Corridor out;
    out.id = c.id;
    out.centerline = make_path(std::move(c.center), c, "center");
    out.left_bound = make_path(std::move(c.left), c, "left");
    out.right_bound = make_path(std::move(c.right), c, "right");
    out.successors = std::move(c.successors);
    if (c.goal) goals.push_back(c.id);
    corridors.push_back(std::move(out));
  }
  return RoadMap(std::move(corridors), std::move(goals));
}

RoadMap load_map(const std::filesystem::path& file) {
  auto in = open_input(file);
  return parse_map(in, file.string());
}

void save_map(const RoadMap& map, std::ostream& out) {
  out << "# drivelearn road map\n" << std::fixed << std::setprecision(6);
  for (const Corridor& c : map.corridors()) {
    out << "corridor " << c.id << "\n";
    for (const Point2& p : c.centerline.points()) out << "center " << p.x << " " << p.y << "\n";
    for (const Point2& p : c.left_bound.points()) out << "left " << p.x << " " << p.y << "\n";
    for (const Point2& p : c.right_bound.points()) out << "right " << p.x << " " << p.y << "\n";
    if (!c.successors.empty()) {
      out << "succ";
      for (const std::string& s : c.successors) out << " " << s;
      out << "\n";
    }
    if (map.is_goal(c.id)) out << "goal\n";
  }
}

std::vector<TrackLog> parse_tracks(std::istream& in, const std::string& source) {
  static const std::vector<std::string> kHeader = {"agent_id", "t", "x", "y", "vx", "vy", "heading", "length", "width"};
  std::string raw;
  int line_no = 0;
  if (!std::getline(in, raw)) throw ParseError(source, 1, "missing header");
  ++line_no;
  if (split_csv(trim(raw)) != kHeader) {
    throw ParseError(source, line_no, "header must be agent_id,t,x,y,vx,vy,heading,length,width");
  }

  std::map<AgentId, std::vector<std::pair<TrackFrame, int>>> rows;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != kHeader.size()) {
      throw ParseError(source, line_no, "expected 9 fields, got " + std::to_string(cells.size()));
    }
    TrackFrame f;
    const AgentId id = parse_id(cells[0], source, line_no);
    f.t = parse_real(cells[1], source, line_no, "t");
    f.x = parse_real(cells[2], source, line_no, "x");
    f.y = parse_real(cells[3], source, line_no, "y");
    f.vx = parse_real(cells[4], source, line_no, "vx");
    f.vy = parse_real(cells[5], source, line_no, "vy");
    f.heading = parse_real(cells[6], source, line_no, "heading");
    f.length = parse_real(cells[7], source, line_no, "length");
    f.width = parse_real(cells[8], source, line_no, "width");
    if (f.length <= 0.0 || f.width <= 0.0) throw ParseError(source, line_no, "length and width must be positive");
    rows[id].emplace_back(f, line_no);
  }

  std::vector<TrackLog> tracks;
  for (auto& [id, frames] : rows) {
    std::stable_sort(frames.begin(), frames.end(),
                     [](const auto& a, const auto& b) { return a.first.t < b.first.t; });
    TrackLog log;
    log.agent_id = id;
    log.first_step = time_to_step(frames.front().first.t);
    for (std::size_t k = 0; k < frames.size(); ++k) {
      const auto& [f, line] = frames[k];
      if (std::abs(f.t - step_to_time(log.first_step + static_cast<int>(k))) > 1e-6) {
        throw ParseError(source, line, "non-uniform timestep for agent " + std::to_string(id) + " at t=" +
                                           std::to_string(f.t) + " (expected 0.1 s step)");
      }
      if (f.length != frames.front().first.length || f.width != frames.front().first.width) {
        throw ParseError(source, line, "length/width change for agent " + std::to_string(id));
      }
      log.frames.push_back(f);
    }
    tracks.push_back(std::move(log));
  }
  return tracks;
}

std::vector<TrackLog> load_tracks(const std::filesystem::path& file) {
  auto in = open_input(file);
  return parse_tracks(in, file.string());
}

void save_tracks(std::span<const TrackLog> tracks, std::ostream& out) {
  out << "agent_id,t,x,y,vx,vy,heading,length,width\n" << std::fixed << std::setprecision(6);
  for (const TrackLog& t : tracks) {
    for (std::size_t k = 0; k < t.frames.size(); ++k) {
      const TrackFrame& f = t.frames[k];
      out << t.agent_id << "," << std::setprecision(1) << step_to_time(t.first_step + static_cast<int>(k))
          << std::setprecision(6) << "," << f.x << "," << f.y << "," << f.vx << "," << f.vy << "," << f.heading
          << "," << f.length << "," << f.width << "\n";
    }
  }
}

std::vector<ManifestRow> load_manifest(const std::filesystem::path& file) {
  auto in = open_input(file);
  const std::string source = file.string();
  std::string raw;
  int line_no = 1;
  if (!std::getline(in, raw) ||
      split_csv(trim(raw)) != std::vector<std::string>{"scenario_id", "actor_id", "initial_time", "horizon_steps"}) {
    throw ParseError(source, 1, "header must be scenario_id,actor_id,initial_time,horizon_steps");
  }
  std::vector<ManifestRow> rows;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != 4) throw ParseError(source, line_no, "expected 4 fields");
    ManifestRow r;
    r.scenario_id = cells[0];
    r.actor_id = parse_id(cells[1], source, line_no);
    r.initial_time = parse_real(cells[2], source, line_no, "initial_time");
    const double h = parse_real(cells[3], source, line_no, "horizon_steps");
    r.horizon_steps = static_cast<int>(h);
    if (r.horizon_steps != h) throw ParseError(source, line_no, "horizon_steps must be an integer");
    rows.push_back(std::move(r));
  }
  return rows;
}

void save_manifest(std::span<const Scenario> scenarios, std::ostream& out) {
  out << "scenario_id,actor_id,initial_time,horizon_steps\n";
  for (const Scenario& s : scenarios) {
    out << s.id << "," << s.actor_id << "," << std::fixed << std::setprecision(1) << s.initial_time() << ","
        << s.horizon_steps << "\n";
  }
}

}  // namespace drivelearn
