#ifndef FISHMPC_TINYNN_H_
#define FISHMPC_TINYNN_H_

// Small fully connected network in double precision: ReLU hidden layers,
// identity output, exact reverse-mode gradients with respect to parameters
// and inputs, and an AdamW optimizer over the flat parameter vector.

#include <cstdint>
#include <span>
#include <vector>

#include "json.hpp"

namespace fishmpc::nn {

// Parameters live in one flat buffer laid out layer by layer as
// [W_0 (row-major out x in), b_0, W_1, b_1, ...].
class Mlp {
 public:
  Mlp() = default;
  // All parameters zero. Requires >= 2 dims, each >= 1.
  explicit Mlp(std::vector<int> layer_dims);

  const std::vector<int>& layer_dims() const { return dims_; }
  int num_layers() const { return static_cast<int>(dims_.size()) - 1; }
  int input_dim() const { return dims_.front(); }
  int output_dim() const { return dims_.back(); }
  bool empty() const { return dims_.empty(); }

  std::span<const double> params() const { return params_; }
  std::span<double> mutable_params();

  std::span<const double> weights(int layer) const;
  std::span<const double> biases(int layer) const;
  std::span<double> mutable_weights(int layer);
  std::span<double> mutable_biases(int layer);

  // Bumped on every mutable access; lets backward() reject caches taken
  // before the parameters changed.
  std::uint64_t revision() const { return revision_; }

  bool all_finite() const;

 private:
  std::vector<int> dims_;
  std::vector<double> params_;
  std::vector<std::size_t> weight_offset_;
  std::vector<std::size_t> bias_offset_;
  std::uint64_t revision_ = 0;
};

// Uniform weights in +-sqrt(6/fan_in), zero biases.
Mlp mlp_init(const std::vector<int>& layer_dims, std::uint64_t seed);

// Activations recorded by forward() for use by backward(). Reusable across
// calls to avoid reallocating.
struct ForwardCache {
  const Mlp* net = nullptr;
  std::uint64_t revision = 0;
  std::vector<std::vector<double>> pre;  // pre-activation of each layer
  std::vector<std::vector<double>> act;  // act[0] = input, act[l+1] = output of layer l

  std::span<const double> output() const { return act.back(); }
};

void forward(const Mlp& net, std::span<const double> x, ForwardCache& cache);

struct ForwardResult {
  std::vector<double> y;
  ForwardCache cache;
};
ForwardResult forward(const Mlp& net, std::span<const double> x);

// Reverse pass for the scalar y^T dy. Adds parameter gradients into
// `param_grads` (same layout as Mlp::params) unless it is empty, and writes
// the input gradient into `dx` unless it is empty.
void backward(const Mlp& net, const ForwardCache& cache,
              std::span<const double> dy, std::span<double> param_grads,
              std::span<double> dx);

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.01;
};

struct AdamWState {
  AdamWConfig config;
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t step_count = 0;

  AdamWState() = default;
  AdamWState(std::size_t n, AdamWConfig cfg)
      : config(cfg), m(n, 0.0), v(n, 0.0) {}
};

void adamw_step(std::span<double> params, std::span<const double> grads,
                AdamWState& state, double lr);

struct RegressionDataset {
  std::vector<std::vector<double>> inputs;
  std::vector<std::vector<double>> targets;

  std::size_t size() const { return inputs.size(); }
};

struct TrainConfig {
  int epochs = 100;
  int batch_size = 8;
  double lr = 1e-3;
  AdamWConfig adamw;
};

struct TrainResult {
  Mlp net;
  std::vector<double> loss_history;  // mean per-sample MSE of each epoch
};

// Mini-batch MSE training; the sample order is reshuffled every epoch from
// `seed`. Throws on empty or inconsistent data and if parameters ever
// become non-finite.
TrainResult train_regression(Mlp net, const RegressionDataset& data,
                             const TrainConfig& cfg, std::uint64_t seed);

double mse(const Mlp& net, const RegressionDataset& data);

nlohmann::json to_json(const Mlp& net);
Mlp mlp_from_json(const nlohmann::json& j);

}  // namespace fishmpc::nn

#endif  // FISHMPC_TINYNN_H_
