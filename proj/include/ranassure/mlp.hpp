// Small dense feed-forward network with bounded-nonlinearity hidden layers
// (tanh or softsign), a linear output and an optional input->output linear
// skip connection, trained by plain gradient descent on mean squared error.
// The skip lets the net keep a well-behaved linear response outside the
// training range while the bounded hidden path fits local structure.
// Training is fully deterministic: fixed initialization from a seed, fixed
// mini-batch slicing, no shuffling.
#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ranassure/digest.hpp"
#include "ranassure/rng.hpp"

namespace ranassure {

struct MlpLayer {
  int in = 0;
  int out = 0;
  std::vector<double> w;  // out x in, row-major
  std::vector<double> b;  // out
};

enum class Activation { Tanh, Softsign };

inline const char* activation_name(Activation a) {
  return a == Activation::Tanh ? "tanh" : "softsign";
}

inline Activation activation_from_name(const std::string& s) {
  if (s == "tanh") return Activation::Tanh;
  if (s == "softsign") return Activation::Softsign;
  throw std::invalid_argument("unknown activation: " + s);
}

inline double act_eval(Activation a, double x) {
  return a == Activation::Tanh ? std::tanh(x) : x / (1.0 + std::abs(x));
}

// Derivative expressed through the activation output y = act(x).
inline double act_deriv_from_output(Activation a, double y) {
  if (a == Activation::Tanh) return 1.0 - y * y;
  const double d = 1.0 - std::abs(y);  // softsign: y = x/(1+|x|), dy/dx = (1-|y|)^2
  return d * d;
}

class Mlp {
 public:
  Mlp() = default;

  Mlp(const std::vector<int>& dims, std::uint64_t seed, Activation act = Activation::Tanh,
      bool with_skip = false)
      : dims_(dims), act_(act) {
    if (dims.size() < 2) throw std::invalid_argument("Mlp: need at least input and output dims");
    DetRng rng(hash_combine(seed, 0x6d6c70ull));
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
      MlpLayer layer;
      layer.in = dims[l];
      layer.out = dims[l + 1];
      layer.w.resize(static_cast<std::size_t>(layer.in) * layer.out);
      layer.b.assign(layer.out, 0.0);
      const double a = std::sqrt(6.0 / (layer.in + layer.out));
      for (auto& w : layer.w) w = rng.next_symmetric(a);
      layers_.push_back(std::move(layer));
    }
    if (with_skip) skip_.assign(static_cast<std::size_t>(dims.front()) * dims.back(), 0.0);
  }

  const std::vector<int>& dims() const { return dims_; }
  Activation activation() const { return act_; }
  bool has_skip() const { return !skip_.empty(); }
  int input_size() const { return dims_.front(); }
  int output_size() const { return dims_.back(); }
  std::vector<MlpLayer>& layers() { return layers_; }
  const std::vector<MlpLayer>& layers() const { return layers_; }

  std::vector<double> forward(const std::vector<double>& x) const {
    if (static_cast<int>(x.size()) != input_size())
      throw std::invalid_argument("Mlp::forward: input size mismatch");
    std::vector<double> a = x;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      a = affine(layers_[l], a);
      if (l + 1 < layers_.size())
        for (auto& v : a) v = act_eval(act_, v);
    }
    if (!skip_.empty()) {
      const int in = input_size(), out = output_size();
      for (int o = 0; o < out; ++o) {
        double acc = 0.0;
        const double* row = skip_.data() + static_cast<std::size_t>(o) * in;
        for (int i = 0; i < in; ++i) acc += row[i] * x[i];
        a[o] += acc;
      }
    }
    return a;
  }

  // Mean squared error over outputs, averaged over the batch.
  double loss(const std::vector<std::vector<double>>& xs,
              const std::vector<std::vector<double>>& ys) const {
    double total = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      auto y = forward(xs[i]);
      for (int k = 0; k < output_size(); ++k) {
        const double d = y[k] - ys[i][k];
        total += d * d;
      }
    }
    return total / (static_cast<double>(xs.size()) * output_size());
  }

  // Analytic gradient of the batch MSE with respect to all parameters,
  // flattened in (layer, weights, biases) order. Also returns the loss.
  double gradient(const std::vector<std::vector<double>>& xs,
                  const std::vector<std::vector<double>>& ys,
                  std::vector<double>& grad) const {
    grad.assign(parameter_count(), 0.0);
    double total = 0.0;
    const double scale = 1.0 / (static_cast<double>(xs.size()) * output_size());
    std::vector<std::vector<double>> acts(layers_.size() + 1);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      acts[0] = xs[i];
      for (std::size_t l = 0; l < layers_.size(); ++l) {
        acts[l + 1] = affine(layers_[l], acts[l]);
        if (l + 1 < layers_.size())
          for (auto& v : acts[l + 1]) v = act_eval(act_, v);
      }
      std::vector<double> out = acts.back();
      if (!skip_.empty()) {
        const int in = input_size(), no = output_size();
        for (int o = 0; o < no; ++o) {
          double acc = 0.0;
          const double* row = skip_.data() + static_cast<std::size_t>(o) * in;
          for (int ii = 0; ii < in; ++ii) acc += row[ii] * xs[i][ii];
          out[o] += acc;
        }
      }
      std::vector<double> delta(output_size());
      for (int k = 0; k < output_size(); ++k) {
        const double d = out[k] - ys[i][k];
        total += d * d;
        delta[k] = 2.0 * d * scale;
      }
      if (!skip_.empty()) {
        const int in = input_size(), no = output_size();
        double* gs = grad.data() + parameter_count() - skip_.size();
        for (int o = 0; o < no; ++o)
          for (int ii = 0; ii < in; ++ii) gs[o * in + ii] += delta[o] * xs[i][ii];
      }
      // Backpropagate through the layers.
      std::size_t offset = parameter_count() - skip_.size();
      for (std::size_t li = layers_.size(); li-- > 0;) {
        const MlpLayer& layer = layers_[li];
        offset -= layer.w.size() + layer.b.size();
        double* gw = grad.data() + offset;
        double* gb = gw + layer.w.size();
        const auto& a_in = acts[li];
        for (int o = 0; o < layer.out; ++o) {
          gb[o] += delta[o];
          for (int in = 0; in < layer.in; ++in) gw[o * layer.in + in] += delta[o] * a_in[in];
        }
        if (li == 0) break;
        std::vector<double> prev(layer.in, 0.0);
        for (int in = 0; in < layer.in; ++in) {
          double acc = 0.0;
          for (int o = 0; o < layer.out; ++o) acc += delta[o] * layer.w[o * layer.in + in];
          prev[in] = acc * act_deriv_from_output(act_, a_in[in]);
        }
        delta = std::move(prev);
      }
    }
    return total * scale;  // mean squared error
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += l.w.size() + l.b.size();
    return n + skip_.size();
  }

  std::vector<double> parameters() const {
    std::vector<double> out;
    out.reserve(parameter_count());
    for (const auto& l : layers_) {
      out.insert(out.end(), l.w.begin(), l.w.end());
      out.insert(out.end(), l.b.begin(), l.b.end());
    }
    out.insert(out.end(), skip_.begin(), skip_.end());
    return out;
  }

  void set_parameters(const std::vector<double>& p) {
    if (p.size() != parameter_count()) throw std::invalid_argument("Mlp: parameter size mismatch");
    std::size_t off = 0;
    for (auto& l : layers_) {
      std::copy(p.begin() + off, p.begin() + off + l.w.size(), l.w.begin());
      off += l.w.size();
      std::copy(p.begin() + off, p.begin() + off + l.b.size(), l.b.begin());
      off += l.b.size();
    }
    std::copy(p.begin() + off, p.end(), skip_.begin());
  }

  void apply_gradient(const std::vector<double>& grad, double lr) {
    std::size_t off = 0;
    for (auto& l : layers_) {
      for (auto& w : l.w) w -= lr * grad[off++];
      for (auto& b : l.b) b -= lr * grad[off++];
    }
    for (auto& w : skip_) w -= lr * grad[off++];
  }

  // Hex digest over the exact parameter bytes; identical training runs yield
  // identical digests.
  std::string weight_digest() const {
    Sha256 h;
    for (const auto& l : layers_) {
      h.update(l.w.data(), l.w.size() * sizeof(double));
      h.update(l.b.data(), l.b.size() * sizeof(double));
    }
    if (!skip_.empty()) h.update(skip_.data(), skip_.size() * sizeof(double));
    return to_hex(h.finish());
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json layers = nlohmann::ordered_json::array();
    for (const auto& l : layers_)
      layers.push_back(nlohmann::ordered_json{{"in", l.in}, {"out", l.out}, {"w", l.w}, {"b", l.b}});
    nlohmann::ordered_json j{
        {"dims", dims_}, {"activation", activation_name(act_)}, {"layers", layers}};
    if (!skip_.empty()) j["skip"] = skip_;
    return j;
  }

  static Mlp from_json(const nlohmann::ordered_json& j) {
    Mlp net;
    net.dims_ = j.at("dims").get<std::vector<int>>();
    net.act_ = activation_from_name(j.value("activation", "tanh"));
    if (j.contains("skip")) net.skip_ = j.at("skip").get<std::vector<double>>();
    for (const auto& lj : j.at("layers")) {
      MlpLayer l;
      l.in = lj.at("in").get<int>();
      l.out = lj.at("out").get<int>();
      l.w = lj.at("w").get<std::vector<double>>();
      l.b = lj.at("b").get<std::vector<double>>();
      if (l.w.size() != static_cast<std::size_t>(l.in) * l.out ||
          l.b.size() != static_cast<std::size_t>(l.out))
        throw std::invalid_argument("Mlp::from_json: inconsistent layer shapes");
      net.layers_.push_back(std::move(l));
    }
    return net;
  }

 private:
  static std::vector<double> affine(const MlpLayer& l, const std::vector<double>& x) {
    std::vector<double> y(l.out);
    for (int o = 0; o < l.out; ++o) {
      double acc = l.b[o];
      const double* row = l.w.data() + static_cast<std::size_t>(o) * l.in;
      for (int in = 0; in < l.in; ++in) acc += row[in] * x[in];
      y[o] = acc;
    }
    return y;
  }

  std::vector<int> dims_;
  Activation act_ = Activation::Tanh;
  std::vector<MlpLayer> layers_;
  std::vector<double> skip_;  // output_size x input_size, row-major; empty = no skip
};

struct GdConfig {
  double learning_rate = 0.01;
  int epochs = 1000;
  int batch_size = 16;  // fixed contiguous slices, no shuffle
  int checkpoint_every = 200;
  double weight_decay = 0.0;  // L2 coefficient
};

struct GdCheckpoint {
  int epoch = 0;
  std::vector<double> parameters;
};

struct GdResult {
  bool diverged = false;
  int epochs_run = 0;
  double final_loss = 0.0;
  std::vector<GdCheckpoint> checkpoints;
};

// Plain gradient descent. On non-finite loss the last checkpoint is restored
// and the result is flagged as diverged.
inline GdResult train_gd(Mlp& net, const std::vector<std::vector<double>>& xs,
                         const std::vector<std::vector<double>>& ys, const GdConfig& cfg) {
  if (xs.empty() || xs.size() != ys.size())
    throw std::invalid_argument("train_gd: bad training data");
  GdResult res;
  res.checkpoints.push_back({0, net.parameters()});
  std::vector<double> grad;
  const std::size_t n = xs.size();
  const std::size_t bs = cfg.batch_size > 0 ? static_cast<std::size_t>(cfg.batch_size) : n;
  std::vector<std::vector<double>> bx, by;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < n; start += bs) {
      const std::size_t end = std::min(n, start + bs);
      bx.assign(xs.begin() + start, xs.begin() + end);
      by.assign(ys.begin() + start, ys.begin() + end);
      epoch_loss += net.gradient(bx, by, grad);
      ++batches;
      if (cfg.weight_decay > 0.0) {
        const auto params = net.parameters();
        for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += cfg.weight_decay * params[i];
      }
      net.apply_gradient(grad, cfg.learning_rate);
    }
    epoch_loss /= static_cast<double>(batches);
    if (!std::isfinite(epoch_loss)) {
      net.set_parameters(res.checkpoints.back().parameters);
      res.diverged = true;
      res.epochs_run = epoch;
      res.final_loss = net.loss(xs, ys);
      return res;
    }
    if (cfg.checkpoint_every > 0 && epoch % cfg.checkpoint_every == 0) {
      res.checkpoints.push_back({epoch, net.parameters()});
      if (res.checkpoints.size() > 4) res.checkpoints.erase(res.checkpoints.begin());
    }
    res.final_loss = epoch_loss;
    res.epochs_run = epoch;
  }
  return res;
}

}  // namespace ranassure
