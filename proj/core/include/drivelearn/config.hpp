#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

namespace drivelearn {

enum class Algorithm { BC, GAIL, BCGAIL, SGAIL, PPO, MOPPO };
enum class WorkerVariant { M, I, mix };

struct TrainConfig {
  Algorithm algorithm = Algorithm::MOPPO;
  WorkerVariant variant = WorkerVariant::M;
  long budget = 100000;  // environment steps (expert samples for BC)

  double gamma = 0.99;
  double lambda = 0.95;
  double clip_eps = 0.2;
  double value_clip_eps = 0.2;
  double entropy_coef = 0.01;  // annealed linearly to 0 over the budget
  double lr_policy = 3e-4;
  double lr_value = 1e-3;
  double lr_disc = 3e-4;
  int rollout_steps = 4096;
  int ppo_epochs = 4;
  int minibatch = 256;
  int disc_epochs = 2;

  double alpha = 0.1;
  double r_col = -2.0;
  double ds_max_step = 1.389;
  double rd_clip = 10.0;
  double sgail_weight_s = 0.5;  // the data-driven weight is 1 - this
  double bc_anneal_fraction = 0.5;

  double curriculum_threshold = 3.0;
  int curriculum_window = 20;
  int curriculum_eval_episodes = 4;

  /// Throws ValidationError naming the first offending key.
  void validate() const;
};

const char* to_string(Algorithm a);
const char* to_string(WorkerVariant v);
/// Case-insensitive; throws ValidationError.
Algorithm parse_algorithm(const std::string& text);
WorkerVariant parse_variant(const std::string& text);

/// Flat `key = value` file, `#` starts a comment. Unknown keys, malformed
/// lines, and out-of-range values are ParseErrors carrying the line number.
TrainConfig parse_config(std::istream& in, const std::string& source);
TrainConfig load_config(const std::filesystem::path& file);
void write_config(const TrainConfig& cfg, std::ostream& out);

}  // namespace drivelearn
