#include "drivelearn/nn.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "drivelearn/error.hpp"

namespace drivelearn {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstWeights = Eigen::Map<const RowMatrix>;
using Weights = Eigen::Map<RowMatrix>;
using ConstBias = Eigen::Map<const Vector>;
using Bias = Eigen::Map<Vector>;

ConstWeights weights(const DenseLayer& l, std::span<const double> p) { return {p.data() + l.offset, l.out, l.in}; }
ConstBias bias(const DenseLayer& l, std::span<const double> p) {
  return {p.data() + l.offset + static_cast<std::size_t>(l.out) * l.in, l.out};
}
Weights weights(const DenseLayer& l, std::span<double> g) { return {g.data() + l.offset, l.out, l.in}; }
Bias bias(const DenseLayer& l, std::span<double> g) {
  return {g.data() + l.offset + static_cast<std::size_t>(l.out) * l.in, l.out};
}

Matrix affine(const DenseLayer& l, std::span<const double> p, const Eigen::Ref<const Matrix>& x) {
  Matrix z = x * weights(l, p).transpose();
  z.rowwise() += bias(l, p).transpose();
  return z;
}

// Accumulates weight and bias gradients for d(loss)/d(z) and returns the
// gradient with respect to the layer input when asked.
void affine_backward(const DenseLayer& l, const Eigen::Ref<const Matrix>& x, const Matrix& dz,
                     std::span<double> grad) {
  weights(l, grad).noalias() += dz.transpose() * x;
  bias(l, grad) += dz.colwise().sum().transpose();
}

class Allocator {
 public:
  DenseLayer dense(int in, int out) {
    DenseLayer l{in, out, next_};
    next_ += l.size();
    return l;
  }
  std::size_t scalar() { return next_++; }
  std::size_t next() const { return next_; }

 private:
  std::size_t next_ = 0;
};

Backbone make_backbone(Allocator& alloc, const BackboneSpec& spec, int extra_ego_inputs) {
  Backbone b;
  b.input_widths = {kRouteDim, kCorridorDim, kNeighborDim, kEgoDim + extra_ego_inputs};
  b.input_offsets = {0, kRouteDim, kRouteDim + kCorridorDim, kRouteDim + kCorridorDim + kNeighborDim};
  b.range.begin = alloc.next();
  int concat = 0;
  for (int c = 0; c < 4; ++c) {
    b.encoders[c] = alloc.dense(b.input_widths[c], spec.encoder_widths[c]);
    concat += spec.encoder_widths[c];
  }
  b.fusion = alloc.dense(concat, spec.fusion_width);
  b.range.end = alloc.next();
  return b;
}

Stack make_stack(Allocator& alloc, const BackboneSpec& spec) {
  Stack s;
  s.range.begin = alloc.next();
  s.layers.push_back(alloc.dense(spec.fusion_width, spec.core_width1));
  s.layers.push_back(alloc.dense(spec.core_width1, spec.core_width2));
  s.layers.push_back(alloc.dense(spec.core_width2, 1));
  s.range.end = alloc.next();
  return s;
}

void backbone_forward(const Backbone& b, std::span<const double> p, const Matrix& x, BackboneCache& cache) {
  if (x.cols() != b.input_dim()) {
    throw std::invalid_argument("network input has " + std::to_string(x.cols()) + " columns, expected " +
                                std::to_string(b.input_dim()));
  }
  cache.input = x;
  int concat = 0;
  for (const DenseLayer& e : b.encoders) concat += e.out;
  cache.hidden.resize(x.rows(), concat);
  int col = 0;
  for (int c = 0; c < 4; ++c) {
    const DenseLayer& e = b.encoders[c];
    cache.hidden.middleCols(col, e.out) = affine(e, p, x.middleCols(b.input_offsets[c], b.input_widths[c])).array().tanh();
    col += e.out;
  }
  cache.fused = affine(b.fusion, p, cache.hidden).array().tanh();
}

void backbone_backward(const Backbone& b, std::span<const double> p, const BackboneCache& cache,
                       const Matrix& d_fused, std::span<double> grad) {
  const Matrix dz = d_fused.array() * (1.0 - cache.fused.array().square());
  affine_backward(b.fusion, cache.hidden, dz, grad);
  const Matrix d_hidden = dz * weights(b.fusion, p);
  int col = 0;
  for (int c = 0; c < 4; ++c) {
    const DenseLayer& e = b.encoders[c];
    const Matrix dze = d_hidden.middleCols(col, e.out).array() * (1.0 - cache.hidden.middleCols(col, e.out).array().square());
    affine_backward(e, cache.input.middleCols(b.input_offsets[c], b.input_widths[c]), dze, grad);
    col += e.out;
  }
}

void stack_forward(const Stack& s, std::span<const double> p, const Matrix& x, StackCache& cache) {
  cache.acts.resize(s.layers.size() + 1);
  cache.acts[0] = x;
  for (std::size_t i = 0; i < s.layers.size(); ++i) {
    cache.acts[i + 1] = affine(s.layers[i], p, cache.acts[i]);
    if (i + 1 < s.layers.size()) cache.acts[i + 1] = cache.acts[i + 1].array().tanh();
  }
}

// Returns d(loss)/d(input) when `want_input_grad`, else an empty matrix.
Matrix stack_backward(const Stack& s, std::span<const double> p, const StackCache& cache, const Matrix& d_out,
                      std::span<double> grad, bool want_input_grad) {
  Matrix d = d_out;
  for (std::size_t k = s.layers.size(); k-- > 0;) {
    if (k + 1 < s.layers.size()) d = d.array() * (1.0 - cache.acts[k + 1].array().square());
    affine_backward(s.layers[k], cache.acts[k], d, grad);
    if (k > 0 || want_input_grad) d = d * weights(s.layers[k], p);
  }
  return want_input_grad ? d : Matrix();
}

void check_params(const NetworkLayout& layout, std::span<const double> params) {
  if (params.size() != layout.size()) {
    throw std::invalid_argument("parameter vector has " + std::to_string(params.size()) + " entries, expected " +
                                std::to_string(layout.size()));
  }
}

void require_recorded(const NetworkLayout* layout, const char* what) {
  if (layout == nullptr) throw std::logic_error(std::string(what) + ": backward called before forward");
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

void BackboneSpec::validate() const {
  for (int w : encoder_widths) {
    if (w <= 0) throw ValidationError("encoder widths must be positive");
  }
  if (fusion_width <= 0 || core_width1 <= 0 || core_width2 <= 0) throw ValidationError("layer widths must be positive");
}

NetworkLayout::NetworkLayout(BackboneSpec spec) : spec_(spec) {
  spec_.validate();
  Allocator alloc;
  policy_backbone_ = make_backbone(alloc, spec_, 0);
  policy_core_ = make_stack(alloc, spec_);
  log_std_ = alloc.scalar();
  value_s_ = make_stack(alloc, spec_);
  value_d_ = make_stack(alloc, spec_);
  disc_backbone_ = make_backbone(alloc, spec_, 1);
  disc_core_ = make_stack(alloc, spec_);
  size_ = alloc.next();
}

std::vector<std::pair<std::string, ParamRange>> NetworkLayout::blocks() const {
  return {{"policy_backbone", policy_backbone_.range},
          {"policy_core", policy_core_.range},
          {"log_std", {log_std_, log_std_ + 1}},
          {"value_s", value_s_.range},
          {"value_d", value_d_.range},
          {"disc_backbone", disc_backbone_.range},
          {"disc_core", disc_core_.range}};
}

std::uint64_t NetworkLayout::hash() const {
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  const auto mix = [&h](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xffU;
      h *= 1099511628211ULL;
    }
  };
  for (const auto& [name, range] : blocks()) {
    for (char c : name) mix(static_cast<unsigned char>(c));
    mix(range.begin);
    mix(range.end);
  }
  for (int w : spec_.encoder_widths) mix(static_cast<std::uint64_t>(w));
  mix(static_cast<std::uint64_t>(spec_.fusion_width));
  mix(static_cast<std::uint64_t>(spec_.core_width1));
  mix(static_cast<std::uint64_t>(spec_.core_width2));
  return h;
}

std::vector<double> zero_params(const NetworkLayout& layout) {
  std::vector<double> p(layout.size(), 0.0);
  p[layout.log_std_index()] = std::log(0.5);
  return p;
}

std::vector<double> init_params(const NetworkLayout& layout, std::uint64_t seed) {
  std::vector<double> p = zero_params(layout);
  Rng rng(seed);
  const auto fill = [&](const DenseLayer& l, double gain) {
    const double limit = gain * std::sqrt(6.0 / (l.in + l.out));
    std::uniform_real_distribution<double> u(-limit, limit);
    for (std::size_t i = 0; i < static_cast<std::size_t>(l.out) * l.in; ++i) p[l.offset + i] = u(rng);
  };
  const auto fill_backbone = [&](const Backbone& b) {
    for (const DenseLayer& e : b.encoders) fill(e, 1.0);
    fill(b.fusion, 1.0);
  };
  const auto fill_stack = [&](const Stack& s, double head_gain) {
    for (std::size_t i = 0; i < s.layers.size(); ++i) fill(s.layers[i], i + 1 == s.layers.size() ? head_gain : 1.0);
  };
  fill_backbone(layout.policy_backbone());
  fill_stack(layout.policy_core(), 0.01);
  fill_stack(layout.value_head(ValueHead::S), 1.0);
  fill_stack(layout.value_head(ValueHead::D), 1.0);
  fill_backbone(layout.disc_backbone());
  fill_stack(layout.disc_core(), 0.1);
  return p;
}

void PolicyPass::forward(const NetworkLayout& layout, std::span<const double> params, const Matrix& obs) {
  check_params(layout, params);
  layout_ = nullptr;
  backbone_forward(layout.policy_backbone(), params, obs, backbone_);
  stack_forward(layout.policy_core(), params, backbone_.fused, core_);
  const Matrix& z = core_.acts.back();
  mu_.resize(z.rows());
  for (Eigen::Index i = 0; i < z.rows(); ++i) mu_[i] = kDsCap * sigmoid(z(i, 0));
  const double raw = params[layout.log_std_index()];
  log_sigma_ = std::clamp(raw, std::log(kSigmaMin), std::log(kSigmaMax));
  sigma_clamped_ = log_sigma_ != raw;
  sigma_ = std::exp(log_sigma_);
  layout_ = &layout;
}

void PolicyPass::backward(std::span<const double> params, const Vector& d_mu, double d_log_sigma,
                          std::span<double> grad) const {
  require_recorded(layout_, "PolicyPass");
  if (d_mu.size() != mu_.size()) throw std::invalid_argument("PolicyPass: gradient batch size mismatch");
  Matrix dz(mu_.size(), 1);
  for (Eigen::Index i = 0; i < mu_.size(); ++i) {
    const double sg = mu_[i] / kDsCap;
    dz(i, 0) = d_mu[i] * kDsCap * sg * (1.0 - sg);
  }
  const Matrix d_fused = stack_backward(layout_->policy_core(), params, core_, dz, grad, true);
  backbone_backward(layout_->policy_backbone(), params, backbone_, d_fused, grad);
  if (!sigma_clamped_) grad[layout_->log_std_index()] += d_log_sigma;
}

void ValuePass::forward(const NetworkLayout& layout, std::span<const double> params, const Matrix& obs,
                        ValueHead head) {
  check_params(layout, params);
  layout_ = nullptr;
  BackboneCache backbone;
  backbone_forward(layout.policy_backbone(), params, obs, backbone);
  stack_forward(layout.value_head(head), params, backbone.fused, stack_);
  values_ = stack_.acts.back().col(0);
  head_ = head;
  layout_ = &layout;
}

void ValuePass::backward(std::span<const double> params, const Vector& d_values, std::span<double> grad) const {
  require_recorded(layout_, "ValuePass");
  if (d_values.size() != values_.size()) throw std::invalid_argument("ValuePass: gradient batch size mismatch");
  stack_backward(layout_->value_head(head_), params, stack_, Matrix(d_values), grad, false);
}

void DiscriminatorPass::forward(const NetworkLayout& layout, std::span<const double> params, const Matrix& obs,
                                const Vector& actions) {
  check_params(layout, params);
  if (obs.cols() != kObsDim || actions.size() != obs.rows()) {
    throw std::invalid_argument("discriminator input must be (N x 262, N actions)");
  }
  layout_ = nullptr;
  Matrix x(obs.rows(), kObsDim + 1);
  x.leftCols(kObsDim) = obs;
  x.col(kObsDim) = actions / kActionScale;
  backbone_forward(layout.disc_backbone(), params, x, backbone_);
  stack_forward(layout.disc_core(), params, backbone_.fused, core_);
  logits_ = core_.acts.back().col(0);
  layout_ = &layout;
}

void DiscriminatorPass::backward(std::span<const double> params, const Vector& d_logits,
                                 std::span<double> grad) const {
  require_recorded(layout_, "DiscriminatorPass");
  if (d_logits.size() != logits_.size()) throw std::invalid_argument("DiscriminatorPass: gradient batch size mismatch");
  const Matrix d_fused = stack_backward(layout_->disc_core(), params, core_, Matrix(d_logits), grad, true);
  backbone_backward(layout_->disc_backbone(), params, backbone_, d_fused, grad);
}

Matrix rows_to_matrix(std::span<const double> flat, std::size_t rows, std::size_t cols) {
  if (flat.size() < rows * cols) throw std::invalid_argument("rows_to_matrix: storage too small");
  return Eigen::Map<const RowMatrix>(flat.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

std::pair<double, double> forward_policy(const NetworkLayout& layout, std::span<const double> params,
                                         std::span<const double> obs) {
  PolicyPass pass;
  pass.forward(layout, params, rows_to_matrix(obs, 1, obs.size()));
  return {pass.mu()[0], pass.sigma()};
}

double forward_value(const NetworkLayout& layout, std::span<const double> params, std::span<const double> obs,
                     ValueHead head) {
  ValuePass pass;
  pass.forward(layout, params, rows_to_matrix(obs, 1, obs.size()), head);
  return pass.values()[0];
}

double forward_discriminator(const NetworkLayout& layout, std::span<const double> params,
                             std::span<const double> obs, double action) {
  DiscriminatorPass pass;
  Vector a(1);
  a[0] = action;
  pass.forward(layout, params, rows_to_matrix(obs, 1, obs.size()), a);
  return pass.logits()[0];
}

double gaussian_logpdf(double x, double mu, double sigma) {
  const double z = (x - mu) / sigma;
  return -0.5 * z * z - std::log(sigma) - 0.5 * std::log(2.0 * std::numbers::pi);
}

std::pair<double, double> sample_and_logprob(double mu, double sigma, Rng& rng) {
  std::normal_distribution<double> dist(mu, sigma);
  const double x = dist(rng);
  return {x, gaussian_logpdf(x, mu, sigma)};
}

Adam::Adam(ParamRange range, double lr, double beta1, double beta2, double eps)
    : range_(range), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), m_(range.size(), 0.0), v_(range.size(), 0.0) {
  if (!(lr > 0)) throw ValidationError("learning rate must be positive");
}

void Adam::apply_update(std::span<double> params, std::span<const double> grad) {
  if (params.size() < range_.end || grad.size() < range_.end) throw std::invalid_argument("Adam: range outside vectors");
  for (std::size_t i = range_.begin; i < range_.end; ++i) {
    if (!std::isfinite(grad[i])) throw NumericalError("non-finite gradient at parameter " + std::to_string(i));
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t k = 0; k < range_.size(); ++k) {
    const double g = grad[range_.begin + k];
    m_[k] = beta1_ * m_[k] + (1.0 - beta1_) * g;
    v_[k] = beta2_ * v_[k] + (1.0 - beta2_) * g * g;
    params[range_.begin + k] -= lr_ * (m_[k] / c1) / (std::sqrt(v_[k] / c2) + eps_);
  }
}

}  // namespace drivelearn
