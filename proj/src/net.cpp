// Copyright (c) 2026 the snapq authors
//
// This code is released under the
// Apache License Version 2.0 http://www.apache.org/licenses/.
#include "snapq/net.hpp"

#include <cmath>
#include <fstream>

#include "snapq/binary_io.hpp"
#include "snapq/common.hpp"
#include "snapq/rng.hpp"

namespace snapq {

namespace {
constexpr std::uint32_t kNetMagic = 0x4e4e5153;  // "SQNN" little-endian
constexpr std::uint32_t kNetFormatVersion = 1;
}  // namespace

EmbeddingNet::EmbeddingNet(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const DenseLayer& layer = layers_[l];
    if (layer.weights.size() != layer.in_dim * layer.out_dim ||
        layer.bias.size() != layer.out_dim) {
      throw InvalidArgument("layer " + std::to_string(l) + " parameter sizes do not match dims");
    }
    if (l > 0 && layers_[l - 1].out_dim != layer.in_dim) {
      throw InvalidArgument("layer dimensions do not chain at layer " + std::to_string(l));
    }
    for (double w : layer.weights) {
      if (!std::isfinite(w)) throw InvalidArgument("non-finite weight");
    }
    for (double b : layer.bias) {
      if (!std::isfinite(b)) throw InvalidArgument("non-finite bias");
    }
  }
}

EmbeddingNet EmbeddingNet::make(std::size_t in_dim, const std::vector<std::size_t>& hidden_dims,
                                std::size_t embed_dim, std::uint64_t seed) {
  Rng rng(mix_seed(seed, 0x6e6574));
  std::vector<DenseLayer> layers;
  std::size_t prev = in_dim;
  auto add_layer = [&](std::size_t out, Activation act) {
    DenseLayer layer;
    layer.in_dim = prev;
    layer.out_dim = out;
    layer.activation = act;
    layer.weights.resize(prev * out);
    layer.bias.assign(out, 0.0);
    const double limit = std::sqrt(6.0 / static_cast<double>(prev + out));
    for (double& w : layer.weights) w = rng.uniform(-limit, limit);
    layers.push_back(std::move(layer));
    prev = out;
  };
  for (std::size_t h : hidden_dims) add_layer(h, Activation::relu);
  add_layer(embed_dim, Activation::identity);
  return EmbeddingNet(std::move(layers));
}

std::vector<double> EmbeddingNet::forward(std::span<const double> batch, std::size_t batch_size,
                                          ForwardTrace* trace) const {
  if (layers_.empty()) throw InvalidArgument("forward: empty network");
  if (batch.size() != batch_size * in_dim()) {
    throw InvalidArgument("forward: batch size does not match in_dim");
  }
  for (double v : batch) {
    if (!std::isfinite(v)) throw InvalidArgument("forward: non-finite input");
  }
  if (trace) {
    trace->batch = batch_size;
    trace->inputs.assign(layers_.size(), {});
    trace->preacts.assign(layers_.size(), {});
  }

  std::vector<double> cur(batch.begin(), batch.end());
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const DenseLayer& layer = layers_[l];
    if (trace) trace->inputs[l] = cur;
    std::vector<double> next(batch_size * layer.out_dim);
    for (std::size_t i = 0; i < batch_size; ++i) {
      const double* x = cur.data() + i * layer.in_dim;
      double* y = next.data() + i * layer.out_dim;
      for (std::size_t o = 0; o < layer.out_dim; ++o) {
        const double* w = layer.weights.data() + o * layer.in_dim;
        double acc = layer.bias[o];
        for (std::size_t j = 0; j < layer.in_dim; ++j) acc += w[j] * x[j];
        y[o] = acc;
      }
    }
    if (trace) trace->preacts[l] = next;
    if (layer.activation == Activation::relu) {
      for (double& v : next) v = v > 0.0 ? v : 0.0;
    }
    cur = std::move(next);
  }
  return cur;
}

ParamGrads EmbeddingNet::backward(const ForwardTrace& trace,
                                  std::span<const double> out_grads) const {
  if (trace.inputs.size() != layers_.size()) {
    throw InvalidArgument("backward: trace does not match network");
  }
  if (out_grads.size() != trace.batch * out_dim()) {
    throw InvalidArgument("backward: gradient size does not match out_dim");
  }

  ParamGrads grads;
  grads.weights.resize(layers_.size());
  grads.bias.resize(layers_.size());

  std::vector<double> delta(out_grads.begin(), out_grads.end());
  for (std::size_t li = layers_.size(); li-- > 0;) {
    const DenseLayer& layer = layers_[li];
    const std::vector<double>& x = trace.inputs[li];
    const std::vector<double>& z = trace.preacts[li];

    // relu' at exactly zero is taken as zero
    if (layer.activation == Activation::relu) {
      for (std::size_t i = 0; i < delta.size(); ++i) {
        if (z[i] <= 0.0) delta[i] = 0.0;
      }
    }

    auto& gw = grads.weights[li];
    auto& gb = grads.bias[li];
    gw.assign(layer.in_dim * layer.out_dim, 0.0);
    gb.assign(layer.out_dim, 0.0);
    std::vector<double> prev_delta(trace.batch * layer.in_dim, 0.0);

    for (std::size_t i = 0; i < trace.batch; ++i) {
      const double* d = delta.data() + i * layer.out_dim;
      const double* xi = x.data() + i * layer.in_dim;
      double* pd = prev_delta.data() + i * layer.in_dim;
      for (std::size_t o = 0; o < layer.out_dim; ++o) {
        const double dv = d[o];
        if (dv == 0.0) continue;
        gb[o] += dv;
        double* gwrow = gw.data() + o * layer.in_dim;
        const double* wrow = layer.weights.data() + o * layer.in_dim;
        for (std::size_t j = 0; j < layer.in_dim; ++j) {
          gwrow[j] += dv * xi[j];
          pd[j] += dv * wrow[j];
        }
      }
    }
    delta = std::move(prev_delta);
  }
  return grads;
}

void SgdMomentum::apply(EmbeddingNet& net, const ParamGrads& grads) {
  auto& layers = net.layers();
  if (grads.weights.size() != layers.size()) {
    throw InvalidArgument("optimizer: gradient layout does not match network");
  }
  if (vel_w_.empty()) {
    vel_w_.resize(layers.size());
    vel_b_.resize(layers.size());
    for (std::size_t l = 0; l < layers.size(); ++l) {
      vel_w_[l].assign(layers[l].weights.size(), 0.0);
      vel_b_[l].assign(layers[l].bias.size(), 0.0);
    }
  }
  for (std::size_t l = 0; l < layers.size(); ++l) {
    for (std::size_t i = 0; i < layers[l].weights.size(); ++i) {
      vel_w_[l][i] =
          momentum_ * vel_w_[l][i] + grads.weights[l][i] + weight_decay_ * layers[l].weights[i];
      layers[l].weights[i] -= lr_ * vel_w_[l][i];
    }
    for (std::size_t i = 0; i < layers[l].bias.size(); ++i) {
      vel_b_[l][i] = momentum_ * vel_b_[l][i] + grads.bias[l][i];
      layers[l].bias[i] -= lr_ * vel_b_[l][i];
    }
  }
}

void backward_apply(EmbeddingNet& net, std::span<const double> inputs, std::size_t batch_size,
                    std::span<const double> representation_grads, SgdMomentum& opt) {
  for (double g : representation_grads) {
    if (!std::isfinite(g)) throw NumericError("backward_apply: non-finite gradient");
  }
  ForwardTrace trace;
  net.forward(inputs, batch_size, &trace);
  ParamGrads grads = net.backward(trace, representation_grads);
  opt.apply(net, grads);
}

void save_checkpoint(const EmbeddingNet& net, const std::string& path,
                     const std::string& metadata_json) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ParseError("cannot open for writing: " + path);
  io::write_u32(os, kNetMagic);
  io::write_u32(os, kNetFormatVersion);
  io::write_u32(os, static_cast<std::uint32_t>(net.layers().size()));
  for (const DenseLayer& layer : net.layers()) {
    io::write_u32(os, static_cast<std::uint32_t>(layer.in_dim));
    io::write_u32(os, static_cast<std::uint32_t>(layer.out_dim));
    io::write_u8(os, static_cast<std::uint8_t>(layer.activation));
    for (double w : layer.weights) io::write_f32(os, static_cast<float>(w));
    for (double b : layer.bias) io::write_f32(os, static_cast<float>(b));
  }
  io::write_u32(os, static_cast<std::uint32_t>(metadata_json.size()));
  os.write(metadata_json.data(), static_cast<std::streamsize>(metadata_json.size()));
  if (!os) throw ParseError("write failed: " + path);
}

EmbeddingNet load_checkpoint(const std::string& path, std::string* metadata_json) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ParseError("cannot open: " + path);
  std::uint32_t magic = 0, format = 0, layer_count = 0;
  if (!io::read_u32(is, magic) || magic != kNetMagic) {
    throw ParseError("not a checkpoint file (bad magic): " + path, 0);
  }
  if (!io::read_u32(is, format) || format != kNetFormatVersion) {
    throw ParseError("unsupported checkpoint format version in " + path, 4);
  }
  if (!io::read_u32(is, layer_count)) throw ParseError("truncated checkpoint header", 8);

  std::vector<DenseLayer> layers(layer_count);
  for (std::uint32_t l = 0; l < layer_count; ++l) {
    std::uint32_t in = 0, out = 0;
    std::uint8_t act = 0;
    if (!io::read_u32(is, in) || !io::read_u32(is, out) || !io::read_u8(is, act)) {
      throw ParseError("truncated layer header in " + path, is.tellg());
    }
    DenseLayer& layer = layers[l];
    layer.in_dim = in;
    layer.out_dim = out;
    layer.activation = static_cast<Activation>(act);
    layer.weights.resize(static_cast<std::size_t>(in) * out);
    layer.bias.resize(out);
    for (double& w : layer.weights) {
      float f = 0;
      if (!io::read_f32(is, f)) throw ParseError("truncated weights in " + path, is.tellg());
      w = f;
    }
    for (double& b : layer.bias) {
      float f = 0;
      if (!io::read_f32(is, f)) throw ParseError("truncated bias in " + path, is.tellg());
      b = f;
    }
  }
  if (metadata_json) {
    std::uint32_t len = 0;
    if (io::read_u32(is, len)) {
      metadata_json->resize(len);
      is.read(metadata_json->data(), len);
      if (!is) throw ParseError("truncated metadata in " + path, is.tellg());
    } else {
      metadata_json->clear();
    }
  }
  return EmbeddingNet(std::move(layers));
}

}  // namespace snapq
