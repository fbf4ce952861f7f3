#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>

#include "drivelearn/checkpoint.hpp"
#include "drivelearn/config.hpp"
#include "drivelearn/error.hpp"
#include "drivelearn/eval.hpp"
#include "drivelearn/policy.hpp"
#include "drivelearn/rollout.hpp"
#include "drivelearn/scenario.hpp"
#include "drivelearn/synthetic.hpp"
#include "drivelearn/trainer.hpp"

namespace drivelearn::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "drivelearn 0.1.0";

struct Common {
  std::string config;
  std::uint64_t seed = 1;
  std::string out;
  int workers = 1;
  bool force = false;
};

void add_common(CLI::App* cmd, Common& c, bool out_required = true) {
  cmd->add_option("--config", c.config, "key = value configuration file");
  cmd->add_option("--seed", c.seed, "master random seed");
  auto* o = cmd->add_option("--out", c.out, "output directory");
  if (out_required) o->required();
  cmd->add_option("--workers", c.workers, "parallel rollout threads")->check(CLI::PositiveNumber);
  cmd->add_flag("--force", c.force, "allow writing into a non-empty output directory");
}

void prepare_out(const Common& c) {
  const fs::path dir(c.out);
  if (fs::exists(dir)) {
    if (!fs::is_directory(dir)) throw ValidationError("--out: '" + c.out + "' is not a directory");
    if (!fs::is_empty(dir) && !c.force) throw ValidationError("--out: '" + c.out + "' is not empty (use --force)");
  } else {
    fs::create_directories(dir);
  }
}

void write_manifest(const Common& c, const std::string& command, const std::vector<std::pair<std::string, std::string>>& extra) {
  std::ofstream m(fs::path(c.out) / "run_manifest.txt");
  m << "command = " << command << "\nconfig = " << c.config << "\nseed = " << c.seed << "\nout = " << c.out
    << "\nversion = " << kVersion << '\n';
  for (const auto& [k, v] : extra) m << k << " = " << v << '\n';
}

std::ofstream open_output(const fs::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  return out;
}

// --- generator configuration ------------------------------------------------

SyntheticConfig load_synthetic_config(const std::string& path) {
  SyntheticConfig cfg;
  if (path.empty()) return cfg;
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config " + path);
  const std::map<std::string, std::function<void(const std::string&)>> keys = {
      {"radius", [&](const std::string& v) { cfg.geometry.radius = std::stod(v); }},
      {"entries", [&](const std::string& v) { cfg.geometry.entries = std::stoi(v); }},
      {"min_agents", [&](const std::string& v) { cfg.min_agents = std::stoi(v); }},
      {"max_agents", [&](const std::string& v) { cfg.max_agents = std::stoi(v); }},
      {"episodes", [&](const std::string& v) { cfg.episodes = std::stoi(v); }},
      {"episode_seconds", [&](const std::string& v) { cfg.episode_seconds = std::stod(v); }},
      {"per_horizon", [&](const std::string& v) { cfg.per_horizon = std::stoi(v); }},
      {"validation_episodes", [&](const std::string& v) { cfg.validation_episodes = std::stoi(v); }},
      {"validation_count", [&](const std::string& v) { cfg.validation_count = std::stoi(v); }},
  };
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw.substr(0, raw.find('#'));
    line.erase(0, line.find_first_not_of(" \t\r"));
    line.erase(line.find_last_not_of(" \t\r") + 1);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(path, line_no, "expected 'key = value'");
    std::string key = line.substr(0, eq);
    key.erase(key.find_last_not_of(" \t") + 1);
    std::string value = line.substr(eq + 1);
    value.erase(0, value.find_first_not_of(" \t"));
    const auto it = keys.find(key);
    if (it == keys.end()) throw ParseError(path, line_no, "unknown key '" + key + "'");
    try {
      it->second(value);
    } catch (const std::logic_error&) {
      throw ParseError(path, line_no, "invalid value for " + key + ": '" + value + "'");
    }
  }
  try {
    cfg.validate();
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
  return cfg;
}

// --- data sets ---------------------------------------------------------------

struct DataSet {
  std::shared_ptr<const RoadMap> map;
  std::vector<TrackLog> tracks;
  std::vector<Scenario> train;
  std::vector<Scenario> validation;
};

DataSet load_data(const std::string& dir) {
  if (dir.empty()) throw ValidationError("--data is required");
  const fs::path d(dir);
  DataSet data;
  data.map = std::make_shared<const RoadMap>(load_map(d / "map.txt"));
  data.tracks = load_tracks(d / "tracks.csv");
  data.train = scenarios_from_manifest(load_manifest(d / "train.csv"), data.tracks, data.map);
  if (fs::exists(d / "val.csv")) {
    data.validation = scenarios_from_manifest(load_manifest(d / "val.csv"), data.tracks, data.map);
  }
  return data;
}

const std::vector<Scenario>& pick_split(const DataSet& data, const std::string& split) {
  if (split == "train") return data.train;
  if (split == "val") return data.validation;
  throw ValidationError("--split: expected train or val, got '" + split + "'");
}

std::unique_ptr<Policy> load_policy(const std::string& path, const NetworkLayout& layout) {
  if (path.empty()) throw ValidationError("--checkpoint is required");
  return make_policy(load_checkpoint(path), layout);
}

// --- SVG -----------------------------------------------------------------------

class SvgCanvas {
 public:
  void extend(Point2 p) {
    lo_ = {std::min(lo_.x, p.x), std::min(lo_.y, p.y)};
    hi_ = {std::max(hi_.x, p.x), std::max(hi_.y, p.y)};
  }
  void polyline(const std::vector<Point2>& pts, const char* color, double width, const char* dash = nullptr) {
    std::ostringstream s;
    s << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"" << width << '"';
    if (dash != nullptr) s << " stroke-dasharray=\"" << dash << '"';
    s << " points=\"";
    for (const Point2& p : pts) s << p.x << ',' << -p.y << ' ';
    s << "\"/>\n";
    body_ += s.str();
  }
  void circle(Point2 c, double r, const char* color) {
    std::ostringstream s;
    s << "<circle cx=\"" << c.x << "\" cy=\"" << -c.y << "\" r=\"" << r << "\" fill=\"" << color << "\"/>\n";
    body_ += s.str();
  }
  void write(std::ostream& out) const {
    const double m = 5.0;
    out << std::fixed << std::setprecision(3);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"" << lo_.x - m << ' ' << -hi_.y - m << ' '
        << hi_.x - lo_.x + 2 * m << ' ' << hi_.y - lo_.y + 2 * m << "\" width=\"800\" height=\"800\">\n"
        << "<rect x=\"" << lo_.x - m << "\" y=\"" << -hi_.y - m << "\" width=\"" << hi_.x - lo_.x + 2 * m
        << "\" height=\"" << hi_.y - lo_.y + 2 * m << "\" fill=\"white\"/>\n"
        << body_ << "</svg>\n";
  }

 private:
  Point2 lo_{1e300, 1e300};
  Point2 hi_{-1e300, -1e300};
  std::string body_;
};

void render_svg(const Scenario& sc, const Trajectory& traj, const std::vector<TraceRow>& trace, std::ostream& out) {
  SvgCanvas canvas;
  std::vector<Point2> expert;
  for (const TrackFrame& f : sc.expert_track.frames) expert.push_back(f.position());
  for (const Point2& p : expert) canvas.extend(p);
  for (const Point2& p : traj.positions) canvas.extend(p);
  for (const Point2& p : sc.route.left_bound.points()) canvas.extend(p);
  for (const Point2& p : sc.route.right_bound.points()) canvas.extend(p);
  for (const Corridor& c : sc.map->corridors()) {
    canvas.polyline(c.left_bound.points(), "#cccccc", 0.15);
    canvas.polyline(c.right_bound.points(), "#cccccc", 0.15);
  }
  std::map<AgentId, std::vector<Point2>> workers;
  for (const TraceRow& r : trace) {
    if (r.agent_id != sc.actor_id) workers[r.agent_id].push_back({r.x, r.y});
  }
  for (const auto& [id, pts] : workers) {
    if (pts.size() >= 2) canvas.polyline(pts, "#999999", 0.3, "1,1");
  }
  canvas.polyline(expert, "#1f77b4", 0.5);
  canvas.polyline(traj.positions, "#d62728", 0.5);
  for (const CollisionEvent& e : traj.events) {
    canvas.circle(traj.positions[static_cast<std::size_t>(e.step)], 1.0, e.front ? "#ff7f0e" : "#9467bd");
  }
  canvas.write(out);
}

// --- subcommands -----------------------------------------------------------------

int cmd_gen(const Common& c, std::ostream& log) {
  const SyntheticConfig cfg = load_synthetic_config(c.config);
  prepare_out(c);
  const SyntheticSet set = generate_synthetic(cfg, c.seed);
  const fs::path d(c.out);
  {
    auto f = open_output(d / "map.txt");
    save_map(*set.map, f);
  }
  {
    auto f = open_output(d / "tracks.csv");
    save_tracks(set.tracks, f);
  }
  {
    auto f = open_output(d / "train.csv");
    save_manifest(set.scenarios, f);
  }
  {
    auto f = open_output(d / "val.csv");
    save_manifest(set.validation, f);
  }
  write_manifest(c, "gen", {});
  log << "wrote " << set.scenarios.size() << " training and " << set.validation.size() << " validation scenarios to "
      << c.out << '\n';
  return 0;
}

struct TrainArgs {
  std::string data;
  std::string algo;
  std::string variant;
  long budget = -1;
};

int cmd_train(const Common& c, const TrainArgs& a, std::ostream& log) {
  TrainConfig cfg = c.config.empty() ? TrainConfig{} : load_config(c.config);
  const bool expert_stub = a.algo == "expert";
  if (!a.algo.empty() && !expert_stub) cfg.algorithm = parse_algorithm(a.algo);
  if (!a.variant.empty()) cfg.variant = parse_variant(a.variant);
  if (a.budget >= 0) cfg.budget = a.budget;
  cfg.validate();
  const DataSet data = load_data(a.data);
  prepare_out(c);
  const fs::path d(c.out);

  Checkpoint ckpt;
  auto log_file = open_output(d / "training_log.csv");
  write_log_header(log_file);
  if (expert_stub) {
    ckpt.kind = CheckpointKind::expert_replay;
  } else {
    const TrainResult result = train(cfg, data.train, c.seed, c.workers, [&](const IterationMetrics& m) {
      write_log_row(log_file, m);
      log_file.flush();
      log << "iter " << m.iter << " steps " << m.steps << " tier " << m.curriculum_tier << " R_S " << m.mean_return_S
          << " R_D " << m.mean_return_D << '\n';
    });
    ckpt.kind = CheckpointKind::network;
    ckpt.layout_hash = result.layout_hash;
    ckpt.params = result.params;
  }
  save_checkpoint(ckpt, d / "checkpoint.bin");
  {
    auto f = open_output(d / "config.txt");
    write_config(cfg, f);
  }
  write_manifest(c, "train", {{"data", a.data}, {"algo", expert_stub ? "expert" : to_string(cfg.algorithm)}});
  return 0;
}

struct EvalArgs {
  std::string data;
  std::string checkpoint;
  std::string setting = "NI";
  std::string split = "val";
  std::string label = "policy";
};

int cmd_eval(const Common& c, const EvalArgs& a, std::ostream& log) {
  const EvalSetting setting = parse_setting(a.setting);
  const DataSet data = load_data(a.data);
  const NetworkLayout layout;
  const auto policy = load_policy(a.checkpoint, layout);
  const auto& scenarios = pick_split(data, a.split);
  if (scenarios.empty()) throw ValidationError("--split: no scenarios in '" + a.split + "'");
  prepare_out(c);
  const EvalReport report = evaluate(*policy, scenarios, setting, c.seed, c.workers);
  auto f = open_output(fs::path(c.out) / "report.csv");
  write_report_header(f);
  write_report_row(f, a.label, report);
  write_manifest(c, "eval", {{"data", a.data}, {"checkpoint", a.checkpoint}, {"setting", to_string(setting)}});
  write_report_row(log, a.label, report);
  return 0;
}

struct RenderArgs {
  std::string data;
  std::string checkpoint;
  std::string scenario;
  std::string setting = "NI";
  std::string split = "val";
};

int cmd_render(const Common& c, const RenderArgs& a, std::ostream& log) {
  const EvalSetting setting = parse_setting(a.setting);
  const DataSet data = load_data(a.data);
  const NetworkLayout layout;
  const auto policy = load_policy(a.checkpoint, layout);
  const auto& scenarios = pick_split(data, a.split);
  if (scenarios.empty()) throw ValidationError("--split: no scenarios in '" + a.split + "'");
  const Scenario* sc = &scenarios.front();
  if (!a.scenario.empty()) {
    const auto it = std::find_if(scenarios.begin(), scenarios.end(), [&](const Scenario& s) { return s.id == a.scenario; });
    if (it == scenarios.end()) throw ValidationError("--scenario: unknown id '" + a.scenario + "'");
    sc = &*it;
  }
  prepare_out(c);
  Rng rng(split_seed(c.seed, 0, 0));
  RolloutOptions options;
  options.stochastic = false;
  options.record_obs = false;
  std::vector<TraceRow> trace;
  const Trajectory traj =
      rollout(*policy, *sc, setting == EvalSetting::NI ? WorkerMode::replay : WorkerMode::idm, rng, options, &trace);
  {
    auto f = open_output(fs::path(c.out) / "trace.csv");
    write_trace(trace, f);
  }
  {
    auto f = open_output(fs::path(c.out) / "render.svg");
    render_svg(*sc, traj, trace, f);
  }
  write_manifest(c, "render", {{"data", a.data}, {"checkpoint", a.checkpoint}, {"scenario", sc->id}});
  log << "rendered " << sc->id << " (" << traj.events.size() << " collisions)\n";
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Traffic simulation and driving-policy learning", "drivelearn"};
  app.require_subcommand(1);

  Common gen_c, train_c, eval_c, render_c;
  TrainArgs train_a;
  EvalArgs eval_a;
  RenderArgs render_a;

  auto* gen = app.add_subcommand("gen", "generate a synthetic roundabout data set");
  add_common(gen, gen_c);

  auto* tr = app.add_subcommand("train", "train a policy");
  add_common(tr, train_c);
  tr->add_option("--data", train_a.data, "data set directory")->required();
  tr->add_option("--algo", train_a.algo, "bc, gail, bcgail, sgail, ppo, moppo, or expert (replay stub)");
  tr->add_option("--variant", train_a.variant, "worker variant: M, I, or mix");
  tr->add_option("--budget", train_a.budget, "environment steps");

  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint");
  add_common(ev, eval_c);
  ev->add_option("--data", eval_a.data, "data set directory")->required();
  ev->add_option("--checkpoint", eval_a.checkpoint, "checkpoint file")->required();
  ev->add_option("--setting", eval_a.setting, "NI (replay workers) or I (IDM workers)");
  ev->add_option("--split", eval_a.split, "train or val");
  ev->add_option("--label", eval_a.label, "algorithm column of the report");

  auto* rd = app.add_subcommand("render", "render one episode as SVG plus a trace CSV");
  add_common(rd, render_c);
  rd->add_option("--data", render_a.data, "data set directory")->required();
  rd->add_option("--checkpoint", render_a.checkpoint, "checkpoint file")->required();
  rd->add_option("--scenario", render_a.scenario, "scenario id (default: first of the split)");
  rd->add_option("--setting", render_a.setting, "NI or I");
  rd->add_option("--split", render_a.split, "train or val");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();  // program name
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }

  try {
    if (gen->parsed()) return cmd_gen(gen_c, err);
    if (tr->parsed()) return cmd_train(train_c, train_a, err);
    if (ev->parsed()) return cmd_eval(eval_c, eval_a, err);
    if (rd->parsed()) return cmd_render(render_c, render_a, err);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "runtime error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}

}  // namespace drivelearn::cli
