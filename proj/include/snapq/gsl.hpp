// Copyright (c) 2026 the snapq authors
//
// This code is released under the
// Apache License Version 2.0 http://www.apache.org/licenses/.
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "snapq/codebook.hpp"

namespace snapq {

// Weighting f applied to the unit direction toward a codeword at squared
// distance d2:
//   gaussian_sqdist - f = exp(-d2 / sigma)
//   literal         - f = exp(-d2^2 / sigma), keeping the composition
//                     f(d) = e^{-d^2/sigma} applied to d2 itself
enum class SnapWeighting : std::uint8_t { gaussian_sqdist = 0, literal = 1 };

// Orientation of the codeword selection argmax relative to the raw loss
// gradient g: paper_literal maximizes g . dc, descent_aligned maximizes
// (-g) . dc so the chosen codeword lies on the side the descent step moves
// toward.
enum class SelectionSign : std::uint8_t { paper_literal = 0, descent_aligned = 1 };

// Denominator D in lambda1 = (1 - (g.dc)^2 / (||dc||^2 D)) * lambda:
//   literal        - D = ||g||   (as typeset)
//   cosine_squared - D = ||g||^2 (lambda1 = (1 - cos^2) * lambda)
enum class LambdaDenominator : std::uint8_t { literal = 0, cosine_squared = 1 };

enum class RefreshMode : std::uint8_t { sequential_kmeans = 0, full_retrain = 1 };

struct GslConfig {
  double lambda = 0.036;
  std::size_t neighbors = 150;  // T, codewords enumerated per sample
  SnapWeighting f_variant = SnapWeighting::gaussian_sqdist;
  SelectionSign selection_sign = SelectionSign::paper_literal;
  LambdaDenominator lambda1_denominator = LambdaDenominator::cosine_squared;
  std::size_t update_interval = 1;  // training iterations between refreshes
  RefreshMode refresh_mode = RefreshMode::sequential_kmeans;

  void validate() const;  // throws InvalidArgument
};

// Outcome of snapping one sample's gradient. `alignment` is the cosine
// between the selection-oriented raw gradient and the chosen codeword pull
// direction; it is recorded for rejected samples too (then never positive)
// and is zero when the sample had no gradient or no usable direction.
struct SnapReport {
  PqCode chosen_code;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double alignment = 0.0;
  bool rejected = false;
};

// Unit direction from y toward codeword reconstruction c, scaled by the
// weighting f, so ||dc|| = f. Empty when ||c - y|| < 1e-12 (degenerate
// direction; the caller skips this codeword).
std::optional<std::vector<double>> snap_direction(std::span<const float> codeword_vec,
                                                  std::span<const float> y, double sigma,
                                                  SnapWeighting variant);

// Mean euclidean (non-squared) distance between y and the enumerated
// codewords. Throws on an empty list.
double compute_sigma(std::span<const NeighborCodeword> neighbors);

struct SelectResult {
  bool rejected = true;
  std::size_t chosen = 0;        // index into the neighbor list
  std::vector<double> delta_c;   // empty when no usable direction exists
  double alignment = 0.0;        // oriented cosine of the best candidate
};

// Chooses the neighbor maximizing the oriented score (sign per
// selection_sign); score ties go to the nearer codeword, then lexicographic
// code (the order the enumeration already provides). A non-positive best
// score rejects snapping; rejection is a result, not an error.
SelectResult select_codeword(std::span<const double> grad, std::span<const float> y,
                             std::span<const NeighborCodeword> neighbors, const Codebook& cb,
                             double sigma, const GslConfig& cfg);

struct SnappedGradient {
  std::vector<double> delta_y;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
};

// lambda2 = g.dc / ||dc||, lambda1 = (1 - (g.dc)^2 / (||dc||^2 D)) * lambda,
// delta_y = lambda1 g + lambda2 dc. When rejected: lambda1 = lambda,
// lambda2 = 0, delta_y = lambda g exactly.
SnappedGradient snap_gradient(std::span<const double> grad, std::span<const double> delta_c,
                              bool rejected, const GslConfig& cfg);

struct GslBackwardResult {
  std::vector<double> snapped;  // n x dim
  std::vector<SnapReport> reports;
};

// Per-sample enumerate -> sigma -> select -> snap over a batch. Samples with
// a zero raw gradient pass through as zero and are reported rejected.
GslBackwardResult gsl_backward(std::span<const double> representations,
                               std::span<const double> raw_grads, std::size_t count,
                               const Codebook& cb, const GslConfig& cfg);

// Output-regularization baseline: delta_y = g + 2 lambda_q (y - q(y)) with
// q the codebook round trip.
std::vector<double> baseline_biased_gradient(std::span<const double> y, std::span<const double> grad,
                                             const Codebook& cb, double lambda_q);

// Streams representations into the codebook between training steps. In
// sequential_kmeans mode each sub-vector moves its nearest codeword with a
// 1/n_k step where n_k counts lifetime assignments; full_retrain reruns
// batch k-means on the streamed sample. Each refresh publishes a snapshot
// with version incremented by one.
class CodebookRefresher {
 public:
  CodebookRefresher(Codebook initial, RefreshMode mode, std::size_t retrain_iters,
                    std::uint64_t retrain_seed);

  const Codebook& current() const { return current_; }
  const Codebook& refresh(std::span<const float> stream);

 private:
  Codebook current_;
  RefreshMode mode_;
  std::size_t retrain_iters_;
  std::uint64_t retrain_seed_;
  std::vector<double> centers_;        // double shadow of the codewords
  std::vector<std::uint64_t> counts_;  // per-codeword lifetime assignments
};

}  // namespace snapq
