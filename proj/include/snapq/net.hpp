// Copyright (c) 2026 the snapq authors
//
// This code is released under the
// Apache License Version 2.0 http://www.apache.org/licenses/.
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace snapq {

enum class Activation : std::uint8_t { identity = 0, relu = 1 };

// One dense layer, y = act(W x + b). Weights are row-major out_dim x in_dim.
// Parameters are kept in double; checkpoints store them as f32.
struct DenseLayer {
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  Activation activation = Activation::identity;
  std::vector<double> weights;
  std::vector<double> bias;
};

// Per-layer inputs and pre-activations captured by a forward pass, consumed
// by the backward pass.
struct ForwardTrace {
  std::size_t batch = 0;
  std::vector<std::vector<double>> inputs;   // layer l's input, batch x in_dim
  std::vector<std::vector<double>> preacts;  // W x + b before activation
};

struct ParamGrads {
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> bias;
};

class EmbeddingNet {
 public:
  EmbeddingNet() = default;
  explicit EmbeddingNet(std::vector<DenseLayer> layers);

  // hidden relu layers followed by a linear embedding layer; Glorot-uniform
  // weights, zero bias, deterministic per seed.
  static EmbeddingNet make(std::size_t in_dim, const std::vector<std::size_t>& hidden_dims,
                           std::size_t embed_dim, std::uint64_t seed);

  std::size_t in_dim() const { return layers_.empty() ? 0 : layers_.front().in_dim; }
  std::size_t out_dim() const { return layers_.empty() ? 0 : layers_.back().out_dim; }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& layers() { return layers_; }

  // batch is flat row-major, batch_size x in_dim. Throws on dimension
  // mismatch or non-finite input.
  std::vector<double> forward(std::span<const double> batch, std::size_t batch_size,
                              ForwardTrace* trace = nullptr) const;

  // Gradients of a scalar loss w.r.t. all parameters given the loss gradient
  // at the output, summed over the batch. `out_grads` is batch x out_dim.
  ParamGrads backward(const ForwardTrace& trace, std::span<const double> out_grads) const;

 private:
  std::vector<DenseLayer> layers_;
};

// SGD with classical momentum: v <- mu * v + g + wd * p, p <- p - lr * v.
// Weight decay applies to weights only, never biases.
class SgdMomentum {
 public:
  SgdMomentum(double lr, double momentum, double weight_decay = 0.0)
      : lr_(lr), momentum_(momentum), weight_decay_(weight_decay) {}
  void apply(EmbeddingNet& net, const ParamGrads& grads);
  double lr() const { return lr_; }
  double momentum() const { return momentum_; }

 private:
  double lr_;
  double momentum_;
  double weight_decay_;
  std::vector<std::vector<double>> vel_w_;
  std::vector<std::vector<double>> vel_b_;
};

// Full training step: forward, backward from the given per-sample
// representation gradients, momentum update. Throws NumericError on
// non-finite gradients.
void backward_apply(EmbeddingNet& net, std::span<const double> inputs, std::size_t batch_size,
                    std::span<const double> representation_grads, SgdMomentum& opt);

// Binary container, little-endian: magic "SQNN", format version u32, layer
// count u32, then per layer in u32 / out u32 / activation u8 and f32
// parameters (weights row-major, then bias); finally a u32-length-prefixed
// UTF-8 JSON metadata blob (seed, hyperparameters, free-form).
void save_checkpoint(const EmbeddingNet& net, const std::string& path,
                     const std::string& metadata_json);
EmbeddingNet load_checkpoint(const std::string& path, std::string* metadata_json = nullptr);

}  // namespace snapq
