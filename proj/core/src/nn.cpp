#include "uavrelay/nn.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace uavrelay {

Mlp::Mlp(std::vector<int> sizes) : sizes_(std::move(sizes)) {
  if (sizes_.size() < 2)
    throw std::invalid_argument("network needs at least input and output layers");
  for (int s : sizes_)
    if (s < 1) throw std::invalid_argument("layer sizes must be positive");
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    LayerRef ref;
    ref.in = sizes_[l];
    ref.out = sizes_[l + 1];
    ref.w_off = offset;
    offset += static_cast<std::size_t>(ref.in) * static_cast<std::size_t>(ref.out);
    ref.b_off = offset;
    offset += static_cast<std::size_t>(ref.out);
    layers_.push_back(ref);
  }
  params_.assign(offset, 0.0);
}

Mlp Mlp::glorot(std::vector<int> sizes, Rng& rng) {
  Mlp net(std::move(sizes));
  for (const auto& layer : net.layers_) {
    const double bound = std::sqrt(6.0 / (layer.in + layer.out));
    const std::size_t count =
        static_cast<std::size_t>(layer.in) * static_cast<std::size_t>(layer.out);
    for (std::size_t i = 0; i < count; ++i)
      net.params_[layer.w_off + i] = (2.0 * rng.uniform01() - 1.0) * bound;
    // biases stay zero
  }
  return net;
}

std::vector<double> Mlp::forward(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != input_size())
    throw std::invalid_argument("input length " + std::to_string(x.size()) +
                                " does not match network input " +
                                std::to_string(input_size()));
  std::vector<double> a(x.begin(), x.end());
  std::vector<double> z;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    z.assign(static_cast<std::size_t>(layer.out), 0.0);
    const double* w = params_.data() + layer.w_off;
    for (int o = 0; o < layer.out; ++o) {
      const double* row = w + static_cast<std::size_t>(o) * layer.in;
      double acc = params_[layer.b_off + static_cast<std::size_t>(o)];
      for (int i = 0; i < layer.in; ++i) acc += row[i] * a[static_cast<std::size_t>(i)];
      z[static_cast<std::size_t>(o)] = acc;
    }
    const bool hidden = l + 1 < layers_.size();
    if (hidden)
      for (double& v : z) v = v > 0.0 ? v : 0.0;
    a.swap(z);
  }
  return a;
}

bool Mlp::finite() const {
  for (double p : params_)
    if (!std::isfinite(p)) return false;
  return true;
}

// Forward pass keeping every layer's input activation, then reverse
// accumulation. Shared by loss, gradient and the training step.
struct MlpBackprop {
  static double loss_and_grad(const Mlp& net, std::span<const QSample> batch,
                              std::vector<double>* grad) {
    if (batch.empty()) throw std::invalid_argument("empty batch");
    if (grad) grad->assign(net.params_.size(), 0.0);
    double loss = 0.0;
    const double inv_b = 1.0 / static_cast<double>(batch.size());

    std::vector<std::vector<double>> acts(net.layers_.size() + 1);
    std::vector<double> delta, delta_prev;
    for (const QSample& sample : batch) {
      if (sample.action < 0 || sample.action >= net.output_size())
        throw std::out_of_range("action index " + std::to_string(sample.action) +
                                " outside network output");
      // forward, keeping post-activation values per layer
      acts[0].assign(sample.x.begin(), sample.x.end());
      if (static_cast<int>(acts[0].size()) != net.input_size())
        throw std::invalid_argument("input length does not match network input");
      for (std::size_t l = 0; l < net.layers_.size(); ++l) {
        const auto& layer = net.layers_[l];
        auto& out = acts[l + 1];
        out.assign(static_cast<std::size_t>(layer.out), 0.0);
        const double* w = net.params_.data() + layer.w_off;
        for (int o = 0; o < layer.out; ++o) {
          const double* row = w + static_cast<std::size_t>(o) * layer.in;
          double acc = net.params_[layer.b_off + static_cast<std::size_t>(o)];
          for (int i = 0; i < layer.in; ++i)
            acc += row[i] * acts[l][static_cast<std::size_t>(i)];
          out[static_cast<std::size_t>(o)] = acc;
        }
        if (l + 1 < net.layers_.size())
          for (double& v : out) v = v > 0.0 ? v : 0.0;
      }
      const double q = acts.back()[static_cast<std::size_t>(sample.action)];
      const double residual = sample.target - q;
      loss += residual * residual * inv_b;
      if (!grad) continue;

      // d(loss)/d(output) is nonzero only at the taken action
      delta.assign(static_cast<std::size_t>(net.output_size()), 0.0);
      delta[static_cast<std::size_t>(sample.action)] = -2.0 * inv_b * residual;
      for (std::size_t l = net.layers_.size(); l-- > 0;) {
        const auto& layer = net.layers_[l];
        double* gw = grad->data() + layer.w_off;
        double* gb = grad->data() + layer.b_off;
        const auto& input = acts[l];
        for (int o = 0; o < layer.out; ++o) {
          const double d = delta[static_cast<std::size_t>(o)];
          if (d == 0.0) continue;
          gb[o] += d;
          double* grow = gw + static_cast<std::size_t>(o) * layer.in;
          for (int i = 0; i < layer.in; ++i)
            grow[i] += d * input[static_cast<std::size_t>(i)];
        }
        if (l == 0) break;
        delta_prev.assign(static_cast<std::size_t>(layer.in), 0.0);
        const double* w = net.params_.data() + layer.w_off;
        for (int o = 0; o < layer.out; ++o) {
          const double d = delta[static_cast<std::size_t>(o)];
          if (d == 0.0) continue;
          const double* row = w + static_cast<std::size_t>(o) * layer.in;
          for (int i = 0; i < layer.in; ++i)
            delta_prev[static_cast<std::size_t>(i)] += d * row[i];
        }
        // rectifier gate: activation zero means the unit was clamped
        for (int i = 0; i < layer.in; ++i)
          if (acts[l][static_cast<std::size_t>(i)] <= 0.0)
            delta_prev[static_cast<std::size_t>(i)] = 0.0;
        delta.swap(delta_prev);
      }
    }
    return loss;
  }
};

double q_loss(const Mlp& net, std::span<const QSample> batch) {
  return MlpBackprop::loss_and_grad(net, batch, nullptr);
}

double q_loss_gradient(const Mlp& net, std::span<const QSample> batch,
                       std::vector<double>& grad) {
  return MlpBackprop::loss_and_grad(net, batch, &grad);
}

AdamState::AdamState(std::size_t parameter_count, AdamConfig config)
    : config_(config), m_(parameter_count, 0.0), v_(parameter_count, 0.0) {}

double AdamState::effective_rate() const {
  const auto stairs = static_cast<double>(steps_ / config_.decay_steps);
  return config_.base_rate * std::pow(config_.decay_rate, stairs);
}

void AdamState::apply(std::span<double> params, std::span<const double> grad) {
  if (params.size() != m_.size() || grad.size() != m_.size())
    throw std::invalid_argument("optimizer state does not match parameter count");
  const double rate = effective_rate();
  steps_ += 1;
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(steps_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(steps_));
  for (std::size_t i = 0; i < m_.size(); ++i) {
    m_[i] = config_.beta1 * m_[i] + (1.0 - config_.beta1) * grad[i];
    v_[i] = config_.beta2 * v_[i] + (1.0 - config_.beta2) * grad[i] * grad[i];
    const double mhat = m_[i] / bc1;
    const double vhat = v_[i] / bc2;
    params[i] -= rate * mhat / (std::sqrt(vhat) + config_.epsilon);
  }
}

double backward_and_step(Mlp& net, AdamState& adam, std::span<const QSample> batch) {
  std::vector<double> grad;
  const double loss = q_loss_gradient(net, batch, grad);
  for (double g : grad)
    if (!std::isfinite(g))
      throw std::domain_error("non-finite gradient in training step");
  adam.apply(net.params(), grad);
  return loss;
}

double gradient_check(const Mlp& net, std::span<const QSample> batch) {
  std::vector<double> analytic;
  q_loss_gradient(net, batch, analytic);

  Mlp probe = net;
  const double h = 1e-5;
  double worst = 0.0;
  auto params = probe.params();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = params[i];
    params[i] = saved + h;
    const double plus = q_loss(probe, batch);
    params[i] = saved - h;
    const double minus = q_loss(probe, batch);
    params[i] = saved;
    const double fd = (plus - minus) / (2.0 * h);
    const double denom = std::max({std::abs(analytic[i]), std::abs(fd), 1e-4});
    worst = std::max(worst, std::abs(analytic[i] - fd) / denom);
  }
  return worst;
}

// ---- checkpoint io ----

namespace {

constexpr char kMagic[8] = {'U', 'R', 'L', 'Y', 'N', 'N', 'C', '1'};

void put_u64(std::ostream& out, std::uint64_t v) {
  char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(buf, 8);
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char buf[8];
  in.read(reinterpret_cast<char*>(buf), 8);
  if (!in) throw std::runtime_error("truncated checkpoint");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return v;
}

void put_f64(std::ostream& out, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, 8);
  put_u64(out, bits);
}

double get_f64(std::istream& in) {
  const std::uint64_t bits = get_u64(in);
  double d;
  std::memcpy(&d, &bits, 8);
  return d;
}

void put_doubles(std::ostream& out, std::span<const double> v) {
  put_u64(out, v.size());
  for (double d : v) put_f64(out, d);
}

std::vector<double> get_doubles(std::istream& in) {
  const std::uint64_t n = get_u64(in);
  std::vector<double> v(n);
  for (auto& d : v) d = get_f64(in);
  return v;
}

void put_string(std::ostream& out, const std::string& s) {
  put_u64(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& in) {
  const std::uint64_t n = get_u64(in);
  std::string s(n, '\0');
  in.read(s.data(), static_cast<std::streamsize>(n));
  if (!in) throw std::runtime_error("truncated checkpoint");
  return s;
}

}  // namespace

struct CheckpointIo {
  static void save(std::ostream& out, const Checkpoint& ckpt) {
    out.write(kMagic, 8);
    put_u64(out, ckpt.net.sizes().size());
    for (int s : ckpt.net.sizes()) put_u64(out, static_cast<std::uint64_t>(s));
    put_doubles(out, ckpt.net.params());

    const AdamState& adam = ckpt.adam;
    put_u64(out, static_cast<std::uint64_t>(adam.steps_));
    put_f64(out, adam.config_.base_rate);
    put_f64(out, adam.config_.beta1);
    put_f64(out, adam.config_.beta2);
    put_f64(out, adam.config_.epsilon);
    put_f64(out, adam.config_.decay_rate);
    put_u64(out, static_cast<std::uint64_t>(adam.config_.decay_steps));
    put_doubles(out, adam.m_);
    put_doubles(out, adam.v_);

    put_u64(out, ckpt.metadata.size());
    for (const auto& [k, v] : ckpt.metadata) {
      put_string(out, k);
      put_string(out, v);
    }
  }

  static Checkpoint load(std::istream& in) {
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0)
      throw std::runtime_error("not a recognized checkpoint file");
    const std::uint64_t n_sizes = get_u64(in);
    std::vector<int> sizes(n_sizes);
    for (auto& s : sizes) s = static_cast<int>(get_u64(in));
    Checkpoint ckpt;
    ckpt.net = Mlp(sizes);
    const auto params = get_doubles(in);
    if (params.size() != ckpt.net.parameter_count())
      throw std::runtime_error("checkpoint parameter count mismatch");
    std::copy(params.begin(), params.end(), ckpt.net.params().begin());

    AdamState adam;
    adam.steps_ = static_cast<std::int64_t>(get_u64(in));
    adam.config_.base_rate = get_f64(in);
    adam.config_.beta1 = get_f64(in);
    adam.config_.beta2 = get_f64(in);
    adam.config_.epsilon = get_f64(in);
    adam.config_.decay_rate = get_f64(in);
    adam.config_.decay_steps = static_cast<std::int64_t>(get_u64(in));
    adam.m_ = get_doubles(in);
    adam.v_ = get_doubles(in);
    if (adam.m_.size() != params.size() || adam.v_.size() != params.size())
      throw std::runtime_error("checkpoint optimizer state mismatch");
    ckpt.adam = std::move(adam);

    const std::uint64_t n_meta = get_u64(in);
    for (std::uint64_t i = 0; i < n_meta; ++i) {
      std::string k = get_string(in);
      ckpt.metadata[k] = get_string(in);
    }
    return ckpt;
  }
};

void save_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
  CheckpointIo::save(out, ckpt);
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path.string());
  save_checkpoint(out, ckpt);
}

Checkpoint load_checkpoint(std::istream& in) { return CheckpointIo::load(in); }

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path.string());
  return load_checkpoint(in);
}

}  // namespace uavrelay
