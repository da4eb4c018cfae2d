// Copyright (c) 2026 the snapq authors
//
// This code is released under the
// Apache License Version 2.0 http://www.apache.org/licenses/.
#include "snapq/gsl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "snapq/common.hpp"

namespace snapq {

namespace {

constexpr double kDegenerateDist = 1e-12;
// Below this the weighted direction is numerically a zero vector (its
// squared norm underflows), so the codeword cannot be snapped toward.
constexpr double kMinWeight = 1e-150;

double norm(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

}  // namespace

void GslConfig::validate() const {
  if (!(lambda > 0.0)) throw InvalidArgument("gsl: lambda must be positive");
  if (neighbors < 1) throw InvalidArgument("gsl: neighbor count must be >= 1");
  if (update_interval < 1) throw InvalidArgument("gsl: update_interval must be >= 1");
}

std::optional<std::vector<double>> snap_direction(std::span<const float> codeword_vec,
                                                  std::span<const float> y, double sigma,
                                                  SnapWeighting variant) {
  if (codeword_vec.size() != y.size()) throw InvalidArgument("snap_direction: dim mismatch");
  if (!(sigma > 0.0)) throw InvalidArgument("snap_direction: sigma must be positive");

  const std::size_t d = y.size();
  std::vector<double> dir(d);
  double d2 = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    dir[j] = static_cast<double>(codeword_vec[j]) - static_cast<double>(y[j]);
    d2 += dir[j] * dir[j];
  }
  const double dist = std::sqrt(d2);
  if (dist < kDegenerateDist) return std::nullopt;

  const double f = variant == SnapWeighting::gaussian_sqdist ? std::exp(-d2 / sigma)
                                                             : std::exp(-(d2 * d2) / sigma);
  if (!(f > kMinWeight)) return std::nullopt;  // weight underflow: no usable direction
  for (double& x : dir) x *= f / dist;
  return dir;
}

double compute_sigma(std::span<const NeighborCodeword> neighbors) {
  if (neighbors.empty()) throw InvalidArgument("compute_sigma: empty neighbor list");
  double acc = 0.0;
  for (const NeighborCodeword& n : neighbors) acc += std::sqrt(n.distance_sq);
  return acc / static_cast<double>(neighbors.size());
}

SelectResult select_codeword(std::span<const double> grad, std::span<const float> y,
                             std::span<const NeighborCodeword> neighbors, const Codebook& cb,
                             double sigma, const GslConfig& cfg) {
  if (neighbors.empty()) throw InvalidArgument("select_codeword: empty neighbor list");
  const double grad_norm = norm(grad);
  if (!(grad_norm > 0.0)) throw InvalidArgument("select_codeword: zero gradient");

  const double sign = cfg.selection_sign == SelectionSign::paper_literal ? 1.0 : -1.0;

  SelectResult result;
  double best_score = -std::numeric_limits<double>::infinity();
  // Neighbors come ordered by (distance, code); strict improvement keeps the
  // first of any score tie, which is the required tie-break.
  for (std::size_t i = 0; i < neighbors.size(); ++i) {
    std::vector<float> rec = decode(cb, neighbors[i].code);
    auto dc = snap_direction(rec, y, sigma, cfg.f_variant);
    if (!dc) continue;
    const double score = sign * dot(grad, *dc);
    if (score > best_score) {
      best_score = score;
      result.chosen = i;
      result.delta_c = std::move(*dc);
      result.alignment = score / (grad_norm * norm(result.delta_c));
    }
  }
  if (result.delta_c.empty()) {
    // every candidate sat on top of y; nothing to snap toward
    result.rejected = true;
    result.alignment = 0.0;
    return result;
  }
  result.rejected = best_score <= 0.0;
  return result;
}

SnappedGradient snap_gradient(std::span<const double> grad, std::span<const double> delta_c,
                              bool rejected, const GslConfig& cfg) {
  SnappedGradient out;
  if (rejected) {
    out.lambda1 = cfg.lambda;
    out.lambda2 = 0.0;
    out.delta_y.resize(grad.size());
    for (std::size_t j = 0; j < grad.size(); ++j) out.delta_y[j] = cfg.lambda * grad[j];
    return out;
  }
  if (delta_c.size() != grad.size()) throw InvalidArgument("snap_gradient: dim mismatch");

  const double g_norm = norm(grad);
  const double dc_norm = norm(delta_c);
  if (!(g_norm > 0.0) || !(dc_norm > 0.0)) {
    throw InvalidArgument("snap_gradient: zero gradient or direction");
  }
  const double proj = dot(grad, delta_c);
  const double denom = cfg.lambda1_denominator == LambdaDenominator::literal
                           ? dc_norm * dc_norm * g_norm
                           : dc_norm * dc_norm * g_norm * g_norm;
  out.lambda2 = proj / dc_norm;
  out.lambda1 = (1.0 - (proj * proj) / denom) * cfg.lambda;
  out.delta_y.resize(grad.size());
  for (std::size_t j = 0; j < grad.size(); ++j) {
    out.delta_y[j] = out.lambda1 * grad[j] + out.lambda2 * delta_c[j];
  }
  for (double v : out.delta_y) {
    if (!std::isfinite(v)) throw NumericError("snap_gradient: non-finite snapped gradient");
  }
  return out;
}

GslBackwardResult gsl_backward(std::span<const double> representations,
                               std::span<const double> raw_grads, std::size_t count,
                               const Codebook& cb, const GslConfig& cfg) {
  cfg.validate();
  const std::size_t d = cb.dim();
  if (representations.size() != count * d || raw_grads.size() != count * d) {
    throw InvalidArgument("gsl_backward: batch sizes do not match codebook dim");
  }

  GslBackwardResult result;
  result.snapped.assign(count * d, 0.0);
  result.reports.resize(count);

  std::vector<float> y(d);
  for (std::size_t i = 0; i < count; ++i) {
    std::span<const double> g(raw_grads.data() + i * d, d);
    SnapReport& report = result.reports[i];

    if (norm(g) == 0.0) {
      report.rejected = true;
      report.lambda1 = cfg.lambda;  // delta_y = lambda * 0 = 0
      continue;
    }

    for (std::size_t j = 0; j < d; ++j) {
      y[j] = static_cast<float>(representations[i * d + j]);
    }
    const auto neighbors = enumerate_neighbor_codewords(cb, y, cfg.neighbors);
    const double sigma = compute_sigma(neighbors);

    SnappedGradient snapped;
    if (sigma > 0.0) {
      SelectResult sel = select_codeword(g, y, neighbors, cb, sigma, cfg);
      report.chosen_code = neighbors[sel.chosen].code;
      report.alignment = sel.alignment;
      report.rejected = sel.rejected;
      snapped = snap_gradient(g, sel.delta_c, sel.rejected, cfg);
    } else {
      // y coincides with all enumerated codewords; behave like rejection
      report.chosen_code = neighbors.front().code;
      report.rejected = true;
      snapped = snap_gradient(g, {}, true, cfg);
    }
    report.lambda1 = snapped.lambda1;
    report.lambda2 = snapped.lambda2;
    std::copy(snapped.delta_y.begin(), snapped.delta_y.end(), result.snapped.begin() + i * d);
  }
  return result;
}

std::vector<double> baseline_biased_gradient(std::span<const double> y, std::span<const double> grad,
                                             const Codebook& cb, double lambda_q) {
  const std::size_t d = cb.dim();
  if (y.size() != d || grad.size() != d) {
    throw InvalidArgument("baseline_biased_gradient: dim mismatch");
  }
  if (lambda_q < 0.0) throw InvalidArgument("baseline_biased_gradient: negative lambda");

  std::vector<float> yf(d);
  for (std::size_t j = 0; j < d; ++j) yf[j] = static_cast<float>(y[j]);
  const std::vector<float> rec = decode(cb, encode(cb, yf));

  std::vector<double> out(d);
  for (std::size_t j = 0; j < d; ++j) {
    out[j] = grad[j] + 2.0 * lambda_q * (y[j] - static_cast<double>(rec[j]));
  }
  return out;
}

CodebookRefresher::CodebookRefresher(Codebook initial, RefreshMode mode, std::size_t retrain_iters,
                                     std::uint64_t retrain_seed)
    : current_(std::move(initial)),
      mode_(mode),
      retrain_iters_(retrain_iters),
      retrain_seed_(retrain_seed) {
  const auto& data = current_.data();
  centers_.assign(data.begin(), data.end());
  counts_.assign(current_.subspace_count() * current_.codeword_count(), 0);
}

const Codebook& CodebookRefresher::refresh(std::span<const float> stream) {
  const std::size_t d = current_.dim();
  if (stream.empty()) throw InvalidArgument("refresh: empty stream");
  if (stream.size() % d != 0) {
    throw InvalidArgument("refresh: stream size is not a multiple of codebook dim");
  }
  const std::size_t n = stream.size() / d;
  const std::size_t m_count = current_.subspace_count();
  const std::size_t k_count = current_.codeword_count();
  const std::size_t sub = current_.sub_dim();

  if (mode_ == RefreshMode::full_retrain) {
    Codebook retrained = train_codebook(stream, d, m_count, k_count,
                                        std::max<std::size_t>(retrain_iters_, 1), retrain_seed_);
    current_ = Codebook(m_count, k_count, sub, std::vector<float>(retrained.data()),
                        current_.version() + 1);
    const auto& data = current_.data();
    centers_.assign(data.begin(), data.end());
    return current_;
  }

  for (std::size_t i = 0; i < n; ++i) {
    const float* row = stream.data() + i * d;
    for (std::size_t m = 0; m < m_count; ++m) {
      const float* x = row + m * sub;
      double best = std::numeric_limits<double>::infinity();
      std::size_t best_k = 0;
      for (std::size_t k = 0; k < k_count; ++k) {
        const double* c = centers_.data() + (m * k_count + k) * sub;
        double acc = 0.0;
        for (std::size_t j = 0; j < sub; ++j) {
          const double diff = static_cast<double>(x[j]) - c[j];
          acc += diff * diff;
        }
        if (acc < best) {
          best = acc;
          best_k = k;
        }
      }
      std::uint64_t& count = counts_[m * k_count + best_k];
      ++count;
      const double step = 1.0 / static_cast<double>(count);
      double* c = centers_.data() + (m * k_count + best_k) * sub;
      for (std::size_t j = 0; j < sub; ++j) {
        c[j] += step * (static_cast<double>(x[j]) - c[j]);
      }
    }
  }

  std::vector<float> snapshot(centers_.size());
  for (std::size_t i = 0; i < centers_.size(); ++i) {
    snapshot[i] = static_cast<float>(centers_[i]);
  }
  current_ = Codebook(m_count, k_count, sub, std::move(snapshot), current_.version() + 1);
  return current_;
}

}  // namespace snapq
