// Copyright (c) 2026 the snapq authors
//
// This code is released under the
// Apache License Version 2.0 http://www.apache.org/licenses/.
#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace snapq {

struct Triplet {
  std::size_t anchor = 0;
  std::size_t positive = 0;
  std::size_t negative = 0;
};

// Anchor/positive share a label, negative differs; margin regularizes the
// distance gap between the two pairs.
struct TripletBatch {
  std::vector<Triplet> triples;
  double margin = 0.0;
};

enum class TripletStrategy : std::uint8_t { semi_hard = 0, random = 1 };

// Hinge loss max{0, g + ||a-p|| - ||a-n||} on non-squared euclidean norms.
// Writes the exact subgradients into grad_a/grad_p/grad_n (zero vectors when
// the hinge is inactive or exactly at the corner). Returns the loss.
double triplet_loss(std::span<const double> anchor, std::span<const double> positive,
                    std::span<const double> negative, double margin, std::span<double> grad_a,
                    std::span<double> grad_p, std::span<double> grad_n);

// Builds triplets from a batch of representations. For every anchor, up to
// `per_anchor` positives are drawn; the negative is chosen per strategy:
//   semi_hard - the closest negative with distance in (d_ap, d_ap + margin],
//               falling back to the overall closest negative;
//   random    - uniform over all samples with a different label.
// Deterministic for a given seed. Requires at least two distinct labels and
// no label with fewer than two samples.
TripletBatch select_triplets(std::span<const double> representations, std::size_t count,
                             std::size_t dim, std::span<const int> labels, std::size_t per_anchor,
                             TripletStrategy strategy, double margin, std::uint64_t seed);

// Per-sample gradients of the batch loss E = sum of the triplet losses;
// each sample accumulates contributions from every triplet it appears in.
// Returns E. active_out, when given, receives the active-hinge count.
double accumulate_triplet_gradients(std::span<const double> representations, std::size_t count,
                                    std::size_t dim, const TripletBatch& batch,
                                    std::span<double> grads, std::size_t* active_out = nullptr);

}  // namespace snapq
