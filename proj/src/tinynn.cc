#include "fishmpc/tinynn.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

#include <fmt/format.h>

#include "fishmpc/simd_kernels.h"

namespace fishmpc::nn {

Mlp::Mlp(std::vector<int> layer_dims) : dims_(std::move(layer_dims)) {
  if (dims_.size() < 2) {
    throw std::invalid_argument("Mlp: need at least input and output dims");
  }
  for (int d : dims_) {
    if (d < 1) throw std::invalid_argument("Mlp: layer dims must be >= 1");
  }
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
    weight_offset_.push_back(offset);
    offset += static_cast<std::size_t>(dims_[l]) * dims_[l + 1];
    bias_offset_.push_back(offset);
    offset += static_cast<std::size_t>(dims_[l + 1]);
  }
  params_.assign(offset, 0.0);
}

std::span<double> Mlp::mutable_params() {
  ++revision_;
  return params_;
}

std::span<const double> Mlp::weights(int layer) const {
  return std::span<const double>(params_).subspan(
      weight_offset_.at(layer),
      static_cast<std::size_t>(dims_[layer]) * dims_[layer + 1]);
}

std::span<const double> Mlp::biases(int layer) const {
  return std::span<const double>(params_).subspan(bias_offset_.at(layer),
                                                  dims_[layer + 1]);
}

std::span<double> Mlp::mutable_weights(int layer) {
  ++revision_;
  return std::span<double>(params_).subspan(
      weight_offset_.at(layer),
      static_cast<std::size_t>(dims_[layer]) * dims_[layer + 1]);
}

std::span<double> Mlp::mutable_biases(int layer) {
  ++revision_;
  return std::span<double>(params_).subspan(bias_offset_.at(layer),
                                            dims_[layer + 1]);
}

bool Mlp::all_finite() const {
  return std::all_of(params_.begin(), params_.end(),
                     [](double p) { return std::isfinite(p); });
}

Mlp mlp_init(const std::vector<int>& layer_dims, std::uint64_t seed) {
  Mlp net(layer_dims);
  std::mt19937_64 rng(seed);
  for (int l = 0; l < net.num_layers(); ++l) {
    const double bound = std::sqrt(6.0 / layer_dims[l]);
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& w : net.mutable_weights(l)) w = dist(rng);
  }
  return net;
}

void forward(const Mlp& net, std::span<const double> x, ForwardCache& cache) {
  if (net.empty()) throw std::invalid_argument("forward: empty network");
  if (static_cast<int>(x.size()) != net.input_dim()) {
    throw std::invalid_argument(fmt::format(
        "forward: input has {} entries, network expects {}", x.size(),
        net.input_dim()));
  }
  const auto& dims = net.layer_dims();
  const int layers = net.num_layers();
  cache.net = &net;
  cache.revision = net.revision();
  cache.pre.resize(layers);
  cache.act.resize(layers + 1);
  cache.act[0].assign(x.begin(), x.end());

  const simd::KernelTable& k = simd::kernels();
  for (int l = 0; l < layers; ++l) {
    auto& z = cache.pre[l];
    auto& a = cache.act[l + 1];
    z.resize(dims[l + 1]);
    a.resize(dims[l + 1]);
    k.affine(net.weights(l), net.biases(l), cache.act[l], z);
    if (l + 1 < layers) {
      for (std::size_t i = 0; i < z.size(); ++i) a[i] = z[i] > 0.0 ? z[i] : 0.0;
    } else {
      a = z;
    }
  }
}

ForwardResult forward(const Mlp& net, std::span<const double> x) {
  ForwardResult r;
  forward(net, x, r.cache);
  r.y.assign(r.cache.output().begin(), r.cache.output().end());
  return r;
}

void backward(const Mlp& net, const ForwardCache& cache,
              std::span<const double> dy, std::span<double> param_grads,
              std::span<double> dx) {
  if (cache.net != &net || cache.revision != net.revision() ||
      static_cast<int>(cache.pre.size()) != net.num_layers()) {
    throw std::logic_error("backward: cache does not match network state");
  }
  if (static_cast<int>(dy.size()) != net.output_dim()) {
    throw std::invalid_argument("backward: dy has wrong dimension");
  }
  if (!param_grads.empty() && param_grads.size() != net.params().size()) {
    throw std::invalid_argument("backward: param_grads has wrong size");
  }
  if (!dx.empty() && static_cast<int>(dx.size()) != net.input_dim()) {
    throw std::invalid_argument("backward: dx has wrong dimension");
  }

  const simd::KernelTable& k = simd::kernels();
  const auto& dims = net.layer_dims();
  const int layers = net.num_layers();

  // Gradient w.r.t. the pre-activation of the current layer.
  std::vector<double> delta(dy.begin(), dy.end());
  std::vector<double> upstream;
  for (int l = layers - 1; l >= 0; --l) {
    if (!param_grads.empty()) {
      const auto w = net.weights(l);
      const auto b = net.biases(l);
      const std::size_t w_off = static_cast<std::size_t>(w.data() - net.params().data());
      const std::size_t b_off = static_cast<std::size_t>(b.data() - net.params().data());
      k.outer_accumulate(delta, cache.act[l], param_grads.subspan(w_off, w.size()));
      auto gb = param_grads.subspan(b_off, b.size());
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += delta[i];
    }
    if (l == 0 && dx.empty()) break;
    upstream.resize(dims[l]);
    k.affine_transpose(net.weights(l), delta, upstream);
    if (l > 0) {
      const auto& z = cache.pre[l - 1];
      for (std::size_t i = 0; i < upstream.size(); ++i) {
        if (!(z[i] > 0.0)) upstream[i] = 0.0;
      }
    }
    delta.swap(upstream);
  }
  if (!dx.empty()) std::copy(delta.begin(), delta.end(), dx.begin());
}

void adamw_step(std::span<double> params, std::span<const double> grads,
                AdamWState& state, double lr) {
  if (grads.size() != params.size() || state.m.size() != params.size() ||
      state.v.size() != params.size()) {
    throw std::invalid_argument(fmt::format(
        "adamw_step: shape mismatch (params {}, grads {}, moments {}/{})",
        params.size(), grads.size(), state.m.size(), state.v.size()));
  }
  ++state.step_count;
  const auto t = static_cast<double>(state.step_count);
  simd::AdamWCoeffs c;
  c.lr = lr;
  c.beta1 = state.config.beta1;
  c.beta2 = state.config.beta2;
  c.epsilon = state.config.epsilon;
  c.weight_decay = state.config.weight_decay;
  c.bias_correction1 = 1.0 - std::pow(state.config.beta1, t);
  c.bias_correction2 = 1.0 - std::pow(state.config.beta2, t);
  simd::kernels().adamw_update(params, grads, state.m, state.v, c);
}

namespace {

void validate(const Mlp& net, const RegressionDataset& data) {
  if (data.inputs.empty()) {
    throw std::invalid_argument("train_regression: empty dataset");
  }
  if (data.inputs.size() != data.targets.size()) {
    throw std::invalid_argument("train_regression: inputs/targets count mismatch");
  }
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (static_cast<int>(data.inputs[i].size()) != net.input_dim() ||
        static_cast<int>(data.targets[i].size()) != net.output_dim()) {
      throw std::invalid_argument(
          fmt::format("train_regression: sample {} has wrong dimensions", i));
    }
  }
}

}  // namespace

TrainResult train_regression(Mlp net, const RegressionDataset& data,
                             const TrainConfig& cfg, std::uint64_t seed) {
  validate(net, data);
  if (cfg.epochs < 0 || cfg.batch_size < 1 || !(cfg.lr > 0.0)) {
    throw std::invalid_argument("train_regression: invalid configuration");
  }
  const std::size_t n = data.size();
  const auto out_dim = static_cast<std::size_t>(net.output_dim());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);

  AdamWState opt(net.params().size(), cfg.adamw);
  std::vector<double> grads(net.params().size());
  std::vector<double> dy(out_dim);
  ForwardCache cache;
  TrainResult result;
  result.loss_history.reserve(cfg.epochs);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t end = std::min(n, start + cfg.batch_size);
      const double scale = 2.0 / static_cast<double>((end - start) * out_dim);
      std::fill(grads.begin(), grads.end(), 0.0);
      for (std::size_t b = start; b < end; ++b) {
        const std::size_t idx = order[b];
        forward(net, data.inputs[idx], cache);
        const auto y = cache.output();
        const auto& t = data.targets[idx];
        double sample_loss = 0.0;
        for (std::size_t i = 0; i < out_dim; ++i) {
          const double r = y[i] - t[i];
          sample_loss += r * r;
          dy[i] = scale * r;
        }
        epoch_loss += sample_loss / static_cast<double>(out_dim);
        backward(net, cache, dy, grads, {});
      }
      adamw_step(net.mutable_params(), grads, opt, cfg.lr);
    }
    if (!net.all_finite()) {
      throw std::runtime_error(
          fmt::format("train_regression: non-finite parameters after epoch {}",
                      epoch + 1));
    }
    result.loss_history.push_back(epoch_loss / static_cast<double>(n));
  }
  result.net = std::move(net);
  return result;
}

double mse(const Mlp& net, const RegressionDataset& data) {
  validate(net, data);
  ForwardCache cache;
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    forward(net, data.inputs[i], cache);
    const auto y = cache.output();
    for (std::size_t j = 0; j < y.size(); ++j) {
      const double r = y[j] - data.targets[i][j];
      total += r * r;
    }
  }
  return total / static_cast<double>(data.size() * net.output_dim());
}

nlohmann::json to_json(const Mlp& net) {
  nlohmann::json j;
  j["layer_dims"] = net.layer_dims();
  j["hidden_activation"] = "relu";
  j["output_activation"] = "identity";
  auto& weights = j["weights"] = nlohmann::json::array();
  auto& biases = j["biases"] = nlohmann::json::array();
  for (int l = 0; l < net.num_layers(); ++l) {
    const auto w = net.weights(l);
    const auto b = net.biases(l);
    weights.push_back(std::vector<double>(w.begin(), w.end()));
    biases.push_back(std::vector<double>(b.begin(), b.end()));
  }
  return j;
}

Mlp mlp_from_json(const nlohmann::json& j) {
  if (j.at("hidden_activation") != "relu" ||
      j.at("output_activation") != "identity") {
    throw std::runtime_error("mlp json: unsupported activation tags");
  }
  Mlp net(j.at("layer_dims").get<std::vector<int>>());
  const auto& weights = j.at("weights");
  const auto& biases = j.at("biases");
  if (weights.size() != static_cast<std::size_t>(net.num_layers()) ||
      biases.size() != static_cast<std::size_t>(net.num_layers())) {
    throw std::runtime_error("mlp json: layer count mismatch");
  }
  for (int l = 0; l < net.num_layers(); ++l) {
    const auto w = weights[l].get<std::vector<double>>();
    const auto b = biases[l].get<std::vector<double>>();
    auto dst_w = net.mutable_weights(l);
    auto dst_b = net.mutable_biases(l);
    if (w.size() != dst_w.size() || b.size() != dst_b.size()) {
      throw std::runtime_error(
          fmt::format("mlp json: layer {} parameter shape mismatch", l));
    }
    std::copy(w.begin(), w.end(), dst_w.begin());
    std::copy(b.begin(), b.end(), dst_b.begin());
  }
  if (!net.all_finite()) throw std::runtime_error("mlp json: non-finite parameter");
  return net;
}

}  // namespace fishmpc::nn
