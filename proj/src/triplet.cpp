// Copyright (c) 2026 the snapq authors
//
// This code is released under the
// Apache License Version 2.0 http://www.apache.org/licenses/.
#include "snapq/triplet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "snapq/common.hpp"
#include "snapq/rng.hpp"

namespace snapq {

namespace {

double l2_dist(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double d = a[j] - b[j];
    acc += d * d;
  }
  return std::sqrt(acc);
}

}  // namespace

double triplet_loss(std::span<const double> anchor, std::span<const double> positive,
                    std::span<const double> negative, double margin, std::span<double> grad_a,
                    std::span<double> grad_p, std::span<double> grad_n) {
  const std::size_t d = anchor.size();
  if (positive.size() != d || negative.size() != d || grad_a.size() != d || grad_p.size() != d ||
      grad_n.size() != d) {
    throw InvalidArgument("triplet_loss: dimension mismatch");
  }
  if (margin < 0.0) throw InvalidArgument("triplet_loss: negative margin");

  const double d_ap = l2_dist(anchor.data(), positive.data(), d);
  const double d_an = l2_dist(anchor.data(), negative.data(), d);
  const double loss = margin + d_ap - d_an;

  std::fill(grad_a.begin(), grad_a.end(), 0.0);
  std::fill(grad_p.begin(), grad_p.end(), 0.0);
  std::fill(grad_n.begin(), grad_n.end(), 0.0);
  if (loss <= 0.0) return 0.0;

  // d||a-x|| / da = (a-x)/||a-x||; a zero distance contributes nothing.
  if (d_ap > 0.0) {
    for (std::size_t j = 0; j < d; ++j) {
      const double u = (anchor[j] - positive[j]) / d_ap;
      grad_a[j] += u;
      grad_p[j] -= u;
    }
  }
  if (d_an > 0.0) {
    for (std::size_t j = 0; j < d; ++j) {
      const double u = (anchor[j] - negative[j]) / d_an;
      grad_a[j] -= u;
      grad_n[j] += u;
    }
  }
  return loss;
}

TripletBatch select_triplets(std::span<const double> representations, std::size_t count,
                             std::size_t dim, std::span<const int> labels, std::size_t per_anchor,
                             TripletStrategy strategy, double margin, std::uint64_t seed) {
  if (count * dim != representations.size()) {
    throw InvalidArgument("select_triplets: representation size mismatch");
  }
  if (labels.size() != count) throw InvalidArgument("select_triplets: label count mismatch");
  if (per_anchor == 0) throw InvalidArgument("select_triplets: per_anchor must be positive");

  std::map<int, std::vector<std::size_t>> by_label;
  for (std::size_t i = 0; i < count; ++i) by_label[labels[i]].push_back(i);
  if (by_label.size() < 2) {
    throw InvalidArgument("select_triplets: need at least two distinct labels");
  }
  for (const auto& [label, members] : by_label) {
    if (members.size() < 2) {
      throw InvalidArgument("select_triplets: label " + std::to_string(label) +
                            " has a single sample");
    }
  }

  Rng rng(mix_seed(seed, 0x74726970));
  const double* reps = representations.data();

  TripletBatch batch;
  batch.margin = margin;

  std::vector<std::size_t> negatives;
  for (std::size_t a = 0; a < count; ++a) {
    const std::vector<std::size_t>& same = by_label[labels[a]];

    std::vector<std::size_t> positives;
    positives.reserve(same.size() - 1);
    for (std::size_t idx : same) {
      if (idx != a) positives.push_back(idx);
    }
    if (positives.size() > per_anchor) {
      rng.shuffle(positives);
      positives.resize(per_anchor);
      std::sort(positives.begin(), positives.end());
    }

    negatives.clear();
    for (std::size_t i = 0; i < count; ++i) {
      if (labels[i] != labels[a]) negatives.push_back(i);
    }

    for (std::size_t p : positives) {
      std::size_t chosen = count;
      if (strategy == TripletStrategy::random) {
        chosen = negatives[rng.uniform_index(negatives.size())];
      } else {
        const double d_ap = l2_dist(reps + a * dim, reps + p * dim, dim);
        double best_window = std::numeric_limits<double>::infinity();
        double best_any = std::numeric_limits<double>::infinity();
        std::size_t window_pick = count, any_pick = count;
        for (std::size_t n : negatives) {
          const double d_an = l2_dist(reps + a * dim, reps + n * dim, dim);
          if (d_an > d_ap && d_an <= d_ap + margin && d_an < best_window) {
            best_window = d_an;
            window_pick = n;
          }
          if (d_an < best_any) {
            best_any = d_an;
            any_pick = n;
          }
        }
        chosen = window_pick != count ? window_pick : any_pick;
      }
      batch.triples.push_back({a, p, chosen});
    }
  }
  return batch;
}

double accumulate_triplet_gradients(std::span<const double> representations, std::size_t count,
                                    std::size_t dim, const TripletBatch& batch,
                                    std::span<double> grads, std::size_t* active_out) {
  if (grads.size() != count * dim) {
    throw InvalidArgument("accumulate_triplet_gradients: gradient buffer size mismatch");
  }
  std::fill(grads.begin(), grads.end(), 0.0);
  if (batch.triples.empty()) {
    if (active_out) *active_out = 0;
    return 0.0;
  }

  const double* reps = representations.data();
  std::vector<double> ga(dim), gp(dim), gn(dim);
  double total = 0.0;
  std::size_t active = 0;
  for (const Triplet& t : batch.triples) {
    const double loss = triplet_loss({reps + t.anchor * dim, dim}, {reps + t.positive * dim, dim},
                                     {reps + t.negative * dim, dim}, batch.margin, ga, gp, gn);
    if (loss > 0.0) ++active;
    total += loss;
    for (std::size_t j = 0; j < dim; ++j) {
      grads[t.anchor * dim + j] += ga[j];
      grads[t.positive * dim + j] += gp[j];
      grads[t.negative * dim + j] += gn[j];
    }
  }
  if (active_out) *active_out = active;
  return total;
}

}  // namespace snapq
