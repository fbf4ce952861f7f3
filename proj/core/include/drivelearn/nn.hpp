#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "drivelearn/observation.hpp"
#include "drivelearn/simulator.hpp"

namespace drivelearn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kSigmaMin = 1e-3;
inline constexpr double kSigmaMax = 1.0;
inline constexpr double kActionScale = 2.0;

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct BackboneSpec {
  std::array<int, 4> encoder_widths{64, 64, 64, 64};  // route, corridor, neighbours, ego
  int fusion_width = 256;
  int core_width1 = 128;
  int core_width2 = 128;

  void validate() const;
};

/// Weights (out x in, row-major) followed by the bias, at `offset`.
struct DenseLayer {
  int in = 0;
  int out = 0;
  std::size_t offset = 0;

  std::size_t size() const { return static_cast<std::size_t>(out) * (static_cast<std::size_t>(in) + 1); }
};

struct ParamRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  bool contains(std::size_t i) const { return i >= begin && i < end; }
};

/// Per-component encoders on slices of the input, concatenated and fused.
struct Backbone {
  std::array<int, 4> input_offsets{};
  std::array<int, 4> input_widths{};
  std::array<DenseLayer, 4> encoders{};
  DenseLayer fusion;
  ParamRange range;

  int input_dim() const { return input_offsets[3] + input_widths[3]; }
};

/// Dense layers with tanh between them; the last layer is affine.
struct Stack {
  std::vector<DenseLayer> layers;
  ParamRange range;
};

enum class ValueHead { S, D };

/// Index table of every network in one flat parameter vector:
/// policy backbone, policy core, log_std, value head S, value head D,
/// discriminator backbone, discriminator core.
class NetworkLayout {
 public:
  explicit NetworkLayout(BackboneSpec spec = {});

  const BackboneSpec& spec() const { return spec_; }
  std::size_t size() const { return size_; }

  const Backbone& policy_backbone() const { return policy_backbone_; }
  const Stack& policy_core() const { return policy_core_; }
  std::size_t log_std_index() const { return log_std_; }
  const Stack& value_head(ValueHead head) const { return head == ValueHead::S ? value_s_ : value_d_; }
  const Backbone& disc_backbone() const { return disc_backbone_; }
  const Stack& disc_core() const { return disc_core_; }

  /// Backbone, core, and log_std of the policy (contiguous).
  ParamRange policy_range() const { return {policy_backbone_.range.begin, log_std_ + 1}; }
  ParamRange value_range(ValueHead head) const { return value_head(head).range; }
  ParamRange disc_range() const { return {disc_backbone_.range.begin, disc_core_.range.end}; }

  /// Named blocks in order; they tile [0, size()).
  std::vector<std::pair<std::string, ParamRange>> blocks() const;
  std::uint64_t hash() const;

 private:
  BackboneSpec spec_;
  Backbone policy_backbone_;
  Stack policy_core_;
  std::size_t log_std_ = 0;
  Stack value_s_;
  Stack value_d_;
  Backbone disc_backbone_;
  Stack disc_core_;
  std::size_t size_ = 0;
};

/// Glorot-uniform weights, zero biases, small policy-head weights so the
/// initial mean action sits near the middle of the action range.
std::vector<double> init_params(const NetworkLayout& layout, std::uint64_t seed);
/// All weights and biases zero, log_std = ln 0.5.
std::vector<double> zero_params(const NetworkLayout& layout);

struct BackboneCache {
  Matrix input;
  Matrix hidden;  // concatenated encoder activations
  Matrix fused;
};

struct StackCache {
  std::vector<Matrix> acts;  // acts[0] is the input, acts[i + 1] the output of layer i
};

/// Rows of `obs` are normalized observations. Each pass records what its
/// backward needs; backward before forward throws std::logic_error.
class PolicyPass {
 public:
  void forward(const NetworkLayout& layout, std::span<const double> params, const Matrix& obs);
  const Vector& mu() const { return mu_; }
  double sigma() const { return sigma_; }
  double log_sigma() const { return log_sigma_; }

  /// Accumulates d(loss)/d(params) into `grad` given d(loss)/d(mu) per row
  /// and d(loss)/d(log sigma) summed over the batch.
  void backward(std::span<const double> params, const Vector& d_mu, double d_log_sigma,
                std::span<double> grad) const;

 private:
  const NetworkLayout* layout_ = nullptr;
  BackboneCache backbone_;
  StackCache core_;
  Vector mu_;
  double sigma_ = 0.0;
  double log_sigma_ = 0.0;
  bool sigma_clamped_ = false;
};

/// Value head on the policy backbone output. The backbone is treated as a
/// constant: backward only writes into the head's own parameters.
class ValuePass {
 public:
  void forward(const NetworkLayout& layout, std::span<const double> params, const Matrix& obs, ValueHead head);
  const Vector& values() const { return values_; }
  void backward(std::span<const double> params, const Vector& d_values, std::span<double> grad) const;

 private:
  const NetworkLayout* layout_ = nullptr;
  ValueHead head_ = ValueHead::S;
  StackCache stack_;
  Vector values_;
};

class DiscriminatorPass {
 public:
  /// `actions` in meters; they are divided by kActionScale and appended to
  /// the ego block of the input.
  void forward(const NetworkLayout& layout, std::span<const double> params, const Matrix& obs,
               const Vector& actions);
  const Vector& logits() const { return logits_; }
  void backward(std::span<const double> params, const Vector& d_logits, std::span<double> grad) const;

 private:
  const NetworkLayout* layout_ = nullptr;
  BackboneCache backbone_;
  StackCache core_;
  Vector logits_;
};

/// Single-observation conveniences.
std::pair<double, double> forward_policy(const NetworkLayout& layout, std::span<const double> params,
                                         std::span<const double> obs);
double forward_value(const NetworkLayout& layout, std::span<const double> params, std::span<const double> obs,
                     ValueHead head);
double forward_discriminator(const NetworkLayout& layout, std::span<const double> params,
                             std::span<const double> obs, double action);

/// Copies row-major observation storage into a batch matrix.
Matrix rows_to_matrix(std::span<const double> flat, std::size_t rows, std::size_t cols);

double gaussian_logpdf(double x, double mu, double sigma);
/// Draws from N(mu, sigma); returns the raw sample and its log-density.
std::pair<double, double> sample_and_logprob(double mu, double sigma, Rng& rng);

/// Adam over one parameter range with its own moments and step count.
class Adam {
 public:
  Adam() = default;
  Adam(ParamRange range, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  /// Descends along `grad` (full-length, only the range is read). Throws
  /// NumericalError on a non-finite gradient entry, leaving params untouched.
  void apply_update(std::span<double> params, std::span<const double> grad);

  ParamRange range() const { return range_; }
  double lr() const { return lr_; }
  long steps() const { return t_; }

 private:
  ParamRange range_;
  double lr_ = 0.0;
  double beta1_ = 0.9;
  double beta2_ = 0.999;
  double eps_ = 1e-8;
  long t_ = 0;
  std::vector<double> m_;
  std::vector<double> v_;
};

}  // namespace drivelearn
