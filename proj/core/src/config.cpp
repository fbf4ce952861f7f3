#include "drivelearn/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "drivelearn/error.hpp"

namespace drivelearn {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ValidationError("invalid value for " + key + ": '" + text + "'");
  }
  return value;
}

using Setter = std::function<void(TrainConfig&, const std::string& key, const std::string& value)>;

template <typename T>
Setter number(T TrainConfig::*field) {
  return [field](TrainConfig& c, const std::string& k, const std::string& v) { c.*field = parse_number<T>(k, v); };
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"algo", [](TrainConfig& c, const std::string&, const std::string& v) { c.algorithm = parse_algorithm(v); }},
      {"variant", [](TrainConfig& c, const std::string&, const std::string& v) { c.variant = parse_variant(v); }},
      {"budget", number(&TrainConfig::budget)},
      {"gamma", number(&TrainConfig::gamma)},
      {"lambda", number(&TrainConfig::lambda)},
      {"clip_eps", number(&TrainConfig::clip_eps)},
      {"value_clip_eps", number(&TrainConfig::value_clip_eps)},
      {"entropy_coef", number(&TrainConfig::entropy_coef)},
      {"lr_policy", number(&TrainConfig::lr_policy)},
      {"lr_value", number(&TrainConfig::lr_value)},
      {"lr_disc", number(&TrainConfig::lr_disc)},
      {"rollout_steps", number(&TrainConfig::rollout_steps)},
      {"ppo_epochs", number(&TrainConfig::ppo_epochs)},
      {"minibatch", number(&TrainConfig::minibatch)},
      {"disc_epochs", number(&TrainConfig::disc_epochs)},
      {"alpha", number(&TrainConfig::alpha)},
      {"r_col", number(&TrainConfig::r_col)},
      {"ds_max_step", number(&TrainConfig::ds_max_step)},
      {"rd_clip", number(&TrainConfig::rd_clip)},
      {"sgail_weight_s", number(&TrainConfig::sgail_weight_s)},
      {"bc_anneal_fraction", number(&TrainConfig::bc_anneal_fraction)},
      {"curriculum_threshold", number(&TrainConfig::curriculum_threshold)},
      {"curriculum_window", number(&TrainConfig::curriculum_window)},
      {"curriculum_eval_episodes", number(&TrainConfig::curriculum_eval_episodes)},
  };
  return table;
}

void require(bool ok, const char* key, const char* rule) {
  if (!ok) throw ValidationError(std::string(key) + " " + rule);
}

}  // namespace

const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::BC: return "BC";
    case Algorithm::GAIL: return "GAIL";
    case Algorithm::BCGAIL: return "BCGAIL";
    case Algorithm::SGAIL: return "SGAIL";
    case Algorithm::PPO: return "PPO";
    case Algorithm::MOPPO: return "MOPPO";
  }
  return "?";
}

const char* to_string(WorkerVariant v) {
  switch (v) {
    case WorkerVariant::M: return "M";
    case WorkerVariant::I: return "I";
    case WorkerVariant::mix: return "mix";
  }
  return "?";
}

Algorithm parse_algorithm(const std::string& text) {
  const std::string t = lower(text);
  for (Algorithm a : {Algorithm::BC, Algorithm::GAIL, Algorithm::BCGAIL, Algorithm::SGAIL, Algorithm::PPO,
                      Algorithm::MOPPO}) {
    if (t == lower(to_string(a))) return a;
  }
  throw ValidationError("algo: unknown algorithm '" + text + "'");
}

WorkerVariant parse_variant(const std::string& text) {
  const std::string t = lower(text);
  for (WorkerVariant v : {WorkerVariant::M, WorkerVariant::I, WorkerVariant::mix}) {
    if (t == lower(to_string(v))) return v;
  }
  throw ValidationError("variant: unknown worker variant '" + text + "'");
}

void TrainConfig::validate() const {
  require(budget >= 0, "budget", "must be >= 0");
  require(gamma > 0 && gamma <= 1, "gamma", "must lie in (0, 1]");
  require(lambda > 0 && lambda <= 1, "lambda", "must lie in (0, 1]");
  require(clip_eps > 0, "clip_eps", "must be positive");
  require(value_clip_eps > 0, "value_clip_eps", "must be positive");
  require(entropy_coef >= 0, "entropy_coef", "must be >= 0");
  require(lr_policy > 0, "lr_policy", "must be positive");
  require(lr_value > 0, "lr_value", "must be positive");
  require(lr_disc > 0, "lr_disc", "must be positive");
  require(rollout_steps > 0, "rollout_steps", "must be positive");
  require(ppo_epochs > 0, "ppo_epochs", "must be positive");
  require(minibatch > 0, "minibatch", "must be positive");
  require(disc_epochs >= 0, "disc_epochs", "must be >= 0");
  require(alpha >= 0, "alpha", "must be >= 0");
  require(r_col <= 0, "r_col", "must be <= 0");
  require(ds_max_step > 0, "ds_max_step", "must be positive");
  require(rd_clip > 0, "rd_clip", "must be positive");
  require(sgail_weight_s >= 0 && sgail_weight_s <= 1, "sgail_weight_s", "must lie in [0, 1]");
  require(bc_anneal_fraction > 0 && bc_anneal_fraction <= 1, "bc_anneal_fraction", "must lie in (0, 1]");
  require(curriculum_threshold > 0, "curriculum_threshold", "must be positive");
  require(curriculum_window > 0, "curriculum_window", "must be positive");
  require(curriculum_eval_episodes >= 0, "curriculum_eval_episodes", "must be >= 0");
}

TrainConfig parse_config(std::istream& in, const std::string& source) {
  TrainConfig cfg;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(source, line_no, "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) throw ParseError(source, line_no, "unknown key '" + key + "'");
    if (value.empty()) throw ParseError(source, line_no, "missing value for " + key);
    try {
      it->second(cfg, key, value);
      cfg.validate();
    } catch (const ValidationError& e) {
      throw ParseError(source, line_no, e.what());
    }
  }
  return cfg;
}

TrainConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ValidationError("cannot open config " + file.string());
  return parse_config(in, file.string());
}

void write_config(const TrainConfig& c, std::ostream& out) {
  std::ostringstream s;
  s.precision(17);
  s << "algo = " << to_string(c.algorithm) << "\nvariant = " << to_string(c.variant) << "\nbudget = " << c.budget
    << "\ngamma = " << c.gamma << "\nlambda = " << c.lambda << "\nclip_eps = " << c.clip_eps
    << "\nvalue_clip_eps = " << c.value_clip_eps << "\nentropy_coef = " << c.entropy_coef
    << "\nlr_policy = " << c.lr_policy << "\nlr_value = " << c.lr_value << "\nlr_disc = " << c.lr_disc
    << "\nrollout_steps = " << c.rollout_steps << "\nppo_epochs = " << c.ppo_epochs << "\nminibatch = " << c.minibatch
    << "\ndisc_epochs = " << c.disc_epochs << "\nalpha = " << c.alpha << "\nr_col = " << c.r_col
    << "\nds_max_step = " << c.ds_max_step << "\nrd_clip = " << c.rd_clip << "\nsgail_weight_s = " << c.sgail_weight_s
    << "\nbc_anneal_fraction = " << c.bc_anneal_fraction << "\ncurriculum_threshold = " << c.curriculum_threshold
    << "\ncurriculum_window = " << c.curriculum_window << "\ncurriculum_eval_episodes = " << c.curriculum_eval_episodes
    << '\n';
  out << s.str();
}

}  // namespace drivelearn
