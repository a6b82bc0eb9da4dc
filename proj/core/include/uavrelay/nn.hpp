#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "uavrelay/rng.hpp"

namespace uavrelay {

/// Dense feed-forward network with rectifier hidden layers and an
/// identity output layer, 64-bit floats throughout. Parameters live in
/// one flat vector (per layer: row-major weights, then biases) so the
/// optimizer, checkpoints and the finite-difference check all address
/// them uniformly.
class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(std::vector<int> sizes); // zero-initialized

  /// Uniform init in +-sqrt(6 / (fan_in + fan_out)), biases zero.
  static Mlp glorot(std::vector<int> sizes, Rng& rng);

  const std::vector<int>& sizes() const { return sizes_; }
  int input_size() const { return sizes_.front(); }
  int output_size() const { return sizes_.back(); }
  std::size_t parameter_count() const { return params_.size(); }

  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }

  std::vector<double> forward(std::span<const double> x) const;

  bool finite() const;

  bool operator==(const Mlp&) const = default;

 private:
  friend struct MlpBackprop;
  struct LayerRef {
    int in = 0, out = 0;
    std::size_t w_off = 0, b_off = 0;
    bool operator==(const LayerRef&) const = default;
  };
  std::vector<int> sizes_;
  std::vector<LayerRef> layers_;
  std::vector<double> params_;
};

/// One squared-error regression item: push q(x)[action] towards target.
struct QSample {
  std::vector<double> x;
  int action = 0;
  double target = 0.0;
};

/// Mean over the batch of (target - q(x)[action])^2; only the taken
/// action's output contributes.
double q_loss(const Mlp& net, std::span<const QSample> batch);

/// Analytic gradient of q_loss w.r.t. every parameter. Returns the loss.
double q_loss_gradient(const Mlp& net, std::span<const QSample> batch,
                       std::vector<double>& grad);

struct AdamConfig {
  double base_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double decay_rate = 0.95;     // staircase factor
  std::int64_t decay_steps = 10000;

  bool operator==(const AdamConfig&) const = default;
};

class AdamState {
 public:
  AdamState() = default;
  AdamState(std::size_t parameter_count, AdamConfig config);

  /// base_rate * decay_rate^floor(steps / decay_steps).
  double effective_rate() const;
  std::int64_t steps() const { return steps_; }
  const AdamConfig& config() const { return config_; }

  /// One bias-corrected update of the flat parameter vector.
  void apply(std::span<double> params, std::span<const double> grad);

  bool operator==(const AdamState&) const = default;

 private:
  friend struct CheckpointIo;
  AdamConfig config_;
  std::vector<double> m_, v_;
  std::int64_t steps_ = 0;
};

/// Computes gradients, rejects non-finite ones with std::domain_error,
/// and applies one Adam step. Returns the batch loss.
double backward_and_step(Mlp& net, AdamState& adam, std::span<const QSample> batch);

/// Max relative error between analytic and central finite-difference
/// gradients (h = 1e-5). Meant for small nets.
double gradient_check(const Mlp& net, std::span<const QSample> batch);

/// Versioned binary checkpoint: layer sizes, parameters, optimizer
/// moments and step counter, plus caller key-value metadata. Round-trips
/// bit-exactly.
struct Checkpoint {
  Mlp net;
  AdamState adam;
  std::map<std::string, std::string> metadata;
};

void save_checkpoint(std::ostream& out, const Checkpoint& ckpt);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(std::istream& in);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace uavrelay
