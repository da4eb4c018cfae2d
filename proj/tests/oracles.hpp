// Copyright (c) 2026 the snapq authors
//
// This code is released under the
// Apache License Version 2.0 http://www.apache.org/licenses/.
//
// Independent reference implementations the tests check the library
// against. Everything here is written from the definitions, not by calling
// the code under test.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "snapq/rng.hpp"

namespace oracles {

inline double sqdist(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

// Plain k-means on one subspace with the same seeding recipe the library
// documents: k-means++ from snapq::Rng(mix_seed(seed, subspace)), first
// center uniform, later centers proportional to squared distance with a
// uniform fallback when all remaining distances are zero; Lloyd updates
// with empty clusters taking the globally farthest point. Returns the mean
// squared assignment error after `iters` iterations.
struct KmeansResult {
  std::vector<double> centers;  // k x dim
  double mean_error = 0.0;
};

inline KmeansResult reference_kmeans(const std::vector<double>& points, std::size_t dim,
                                     std::size_t k, std::size_t iters, std::uint64_t seed,
                                     std::uint64_t subspace) {
  const std::size_t n = points.size() / dim;
  snapq::Rng rng(snapq::mix_seed(seed, subspace));

  auto point = [&](std::size_t i) { return std::span<const double>(points.data() + i * dim, dim); };

  // seeding
  std::vector<double> centers;
  centers.reserve(k * dim);
  std::vector<double> best(n, std::numeric_limits<double>::infinity());
  {
    const std::size_t first = rng.uniform_index(n);
    centers.insert(centers.end(), point(first).begin(), point(first).end());
  }
  for (std::size_t c = 1; c < k; ++c) {
    std::span<const double> prev(centers.data() + (c - 1) * dim, dim);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      best[i] = std::min(best[i], sqdist(point(i), prev));
      total += best[i];
    }
    std::size_t pick = n - 1;
    if (total <= 0.0) {
      pick = rng.uniform_index(n);
    } else {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        acc += best[i];
        if (acc > target) {
          pick = i;
          break;
        }
      }
    }
    centers.insert(centers.end(), point(pick).begin(), point(pick).end());
  }

  auto assign_all = [&](std::vector<std::size_t>& assign) {
    double cost = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double bd = std::numeric_limits<double>::infinity();
      std::size_t bk = 0;
      for (std::size_t c = 0; c < k; ++c) {
        const double d = sqdist(point(i), {centers.data() + c * dim, dim});
        if (d < bd) {
          bd = d;
          bk = c;
        }
      }
      assign[i] = bk;
      cost += bd;
    }
    return cost;
  };

  std::vector<std::size_t> assign(n);
  double cost = assign_all(assign);
  for (std::size_t it = 0; it < iters; ++it) {
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t a : assign) counts[a]++;
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] > 0) continue;
      double worst = -1.0;
      std::size_t steal = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (counts[assign[i]] <= 1) continue;
        const double d = sqdist(point(i), {centers.data() + assign[i] * dim, dim});
        if (d > worst) {
          worst = d;
          steal = i;
        }
      }
      if (steal == n) continue;
      counts[assign[steal]]--;
      assign[steal] = c;
      counts[c] = 1;
    }
    std::fill(centers.begin(), centers.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < dim; ++j) centers[assign[i] * dim + j] += points[i * dim + j];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      for (std::size_t j = 0; j < dim; ++j) centers[c * dim + j] /= static_cast<double>(counts[c]);
    }
    cost = assign_all(assign);
  }
  return {std::move(centers), cost / static_cast<double>(n)};
}

// Brute-force nearest codeword index per subspace, smaller index on ties.
inline std::vector<std::uint32_t> brute_encode(const std::vector<float>& codebook, std::size_t m,
                                               std::size_t k, std::size_t sub_dim,
                                               std::span<const float> vec) {
  std::vector<std::uint32_t> code(m);
  for (std::size_t mi = 0; mi < m; ++mi) {
    double best = std::numeric_limits<double>::infinity();
    std::uint32_t best_k = 0;
    for (std::size_t ki = 0; ki < k; ++ki) {
      double acc = 0.0;
      for (std::size_t j = 0; j < sub_dim; ++j) {
        const double d = static_cast<double>(vec[mi * sub_dim + j]) -
                         static_cast<double>(codebook[(mi * k + ki) * sub_dim + j]);
        acc += d * d;
      }
      if (acc < best) {
        best = acc;
        best_k = static_cast<std::uint32_t>(ki);
      }
    }
    code[mi] = best_k;
  }
  return code;
}

// All K^M full codewords with exact distances, sorted (distance, lex code).
struct BruteNeighbor {
  std::vector<std::uint32_t> code;
  double dist = 0.0;
};

inline std::vector<BruteNeighbor> brute_enumerate(const std::vector<float>& codebook,
                                                  std::size_t m, std::size_t k,
                                                  std::size_t sub_dim,
                                                  std::span<const float> vec) {
  // Per-subspace distances first, summed per combination in subspace order
  // so the arithmetic matches a per-subspace accumulation exactly.
  std::vector<double> sub_dists(m * k);
  for (std::size_t mi = 0; mi < m; ++mi) {
    for (std::size_t ki = 0; ki < k; ++ki) {
      double acc = 0.0;
      for (std::size_t j = 0; j < sub_dim; ++j) {
        const double d = static_cast<double>(vec[mi * sub_dim + j]) -
                         static_cast<double>(codebook[(mi * k + ki) * sub_dim + j]);
        acc += d * d;
      }
      sub_dists[mi * k + ki] = acc;
    }
  }
  std::vector<BruteNeighbor> all;
  std::vector<std::uint32_t> code(m, 0);
  std::function<void(std::size_t, double)> rec = [&](std::size_t mi, double acc) {
    if (mi == m) {
      all.push_back({code, acc});
      return;
    }
    for (std::size_t ki = 0; ki < k; ++ki) {
      code[mi] = static_cast<std::uint32_t>(ki);
      rec(mi + 1, acc + sub_dists[mi * k + ki]);
    }
  };
  rec(0, 0.0);
  std::sort(all.begin(), all.end(), [](const BruteNeighbor& a, const BruteNeighbor& b) {
    if (a.dist != b.dist) return a.dist < b.dist;
    return a.code < b.code;
  });
  return all;
}

// Central finite differences of a scalar function, one coordinate at a time.
inline std::vector<double> finite_diff(std::vector<double>& params,
                                       const std::function<double()>& eval, double step) {
  std::vector<double> grads(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double orig = params[i];
    params[i] = orig + step;
    const double up = eval();
    params[i] = orig - step;
    const double down = eval();
    params[i] = orig;
    grads[i] = (up - down) / (2.0 * step);
  }
  return grads;
}

// Exact ranking by squared euclidean distance, ties by id.
inline std::vector<std::size_t> scan_ranking(std::span<const float> db, std::size_t dim,
                                             std::span<const float> query) {
  const std::size_t n = db.size() / dim;
  std::vector<std::pair<double, std::size_t>> scored(n);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
      const double d = static_cast<double>(query[j]) - static_cast<double>(db[i * dim + j]);
      acc += d * d;
    }
    scored[i] = {acc, i};
  }
  std::sort(scored.begin(), scored.end());
  std::vector<std::size_t> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = scored[i].second;
  return ids;
}

}  // namespace oracles
