// Copyright (c) 2026 the snapq authors
//
// This code is released under the
// Apache License Version 2.0 http://www.apache.org/licenses/.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "snapq/codebook.hpp"
#include "snapq/common.hpp"
#include "snapq/gsl.hpp"
#include "snapq/rng.hpp"

using namespace snapq;

namespace {

std::vector<float> random_book(std::size_t m, std::size_t k, std::size_t sub_dim,
                               std::uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  std::vector<float> v(m * k * sub_dim);
  for (float& x : v) x = static_cast<float>(scale * rng.normal());
  return v;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

}  // namespace

TEST_CASE("snap_direction magnitude is e^-1 when squared distance equals sigma") {
  const std::vector<float> y = {0.0f, 0.0f};
  const std::vector<float> c = {2.0f, 0.0f};  // squared distance 4
  const auto dc = snap_direction(c, y, 4.0, SnapWeighting::gaussian_sqdist);
  REQUIRE(dc.has_value());
  CHECK(norm(*dc) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
}

TEST_CASE("snap_direction points from y toward the codeword") {
  const std::vector<float> y = {1.0f, 2.0f, 3.0f};
  const std::vector<float> c = {4.0f, 2.0f, 3.0f};  // offset (t, 0, 0), t > 0
  const auto dc = snap_direction(c, y, 1.0, SnapWeighting::gaussian_sqdist);
  REQUIRE(dc.has_value());
  CHECK((*dc)[0] > 0.0);
  CHECK((*dc)[1] == doctest::Approx(0.0));
  CHECK((*dc)[2] == doctest::Approx(0.0));
}

TEST_CASE("snap_direction matches the formula for both weightings") {
  Rng rng(5);
  for (int t = 0; t < 30; ++t) {
    const std::size_t d = 4;
    std::vector<float> y(d), c(d);
    for (std::size_t j = 0; j < d; ++j) {
      y[j] = static_cast<float>(rng.normal());
      c[j] = static_cast<float>(rng.normal());
    }
    const double sigma = 0.5 + rng.uniform();

    double d2 = 0.0;
    std::vector<double> diff(d);
    for (std::size_t j = 0; j < d; ++j) {
      diff[j] = static_cast<double>(c[j]) - static_cast<double>(y[j]);
      d2 += diff[j] * diff[j];
    }
    const double dist = std::sqrt(d2);

    const auto gauss = snap_direction(c, y, sigma, SnapWeighting::gaussian_sqdist);
    REQUIRE(gauss.has_value());
    const double f_gauss = std::exp(-d2 / sigma);
    for (std::size_t j = 0; j < d; ++j) {
      CHECK((*gauss)[j] == doctest::Approx(f_gauss * diff[j] / dist).epsilon(1e-6));
    }
    CHECK(norm(*gauss) == doctest::Approx(f_gauss).epsilon(1e-9));

    const auto lit = snap_direction(c, y, sigma, SnapWeighting::literal);
    const double f_lit = std::exp(-(d2 * d2) / sigma);
    if (f_lit > 1e-150) {
      REQUIRE(lit.has_value());
      CHECK(norm(*lit) == doctest::Approx(f_lit).epsilon(1e-9));
    } else {
      // the weight underflows to a zero-length direction, reported as
      // unusable just like a degenerate distance
      CHECK(!lit.has_value());
    }
  }
}

TEST_CASE("snap_direction handles degenerate input") {
  const std::vector<float> y = {1.0f, 1.0f};
  CHECK(!snap_direction(y, y, 1.0, SnapWeighting::gaussian_sqdist).has_value());
  const std::vector<float> c = {2.0f, 1.0f};
  CHECK_THROWS_AS(snap_direction(c, y, 0.0, SnapWeighting::gaussian_sqdist), InvalidArgument);
}

TEST_CASE("compute_sigma is the mean euclidean distance") {
  std::vector<NeighborCodeword> equidistant(5);
  for (auto& n : equidistant) n.distance_sq = 2.25;  // distance 1.5
  CHECK(compute_sigma(equidistant) == doctest::Approx(1.5).epsilon(1e-12));

  std::vector<NeighborCodeword> two(2);
  two[0].distance_sq = 1.0;  // distance 1
  two[1].distance_sq = 9.0;  // distance 3
  CHECK(compute_sigma(two) == doctest::Approx(2.0).epsilon(1e-12));

  CHECK_THROWS_AS(compute_sigma({}), InvalidArgument);
}

TEST_CASE("compute_sigma over the 150 enumerated training neighbors") {
  const Codebook cb(2, 16, 3, random_book(2, 16, 3, 131));
  const std::vector<float> y(6, 0.25f);
  const auto neighbors = enumerate_neighbor_codewords(cb, y, 150);
  double mean = 0.0;
  for (const auto& n : neighbors) mean += std::sqrt(n.distance_sq);
  mean /= 150.0;
  CHECK(compute_sigma(neighbors) == doctest::Approx(mean).epsilon(1e-12));
  CHECK(compute_sigma(neighbors) > 0.0);
}

TEST_CASE("select_codeword keeps an aligned neighbor and rejects opposition") {
  // 1-d codebook so directions are +-1
  const std::vector<float> book = {1.0f, -1.0f};  // M=1, K=2
  const Codebook cb(1, 2, 1, book);
  const std::vector<float> y = {0.0f};
  const auto neighbors = enumerate_neighbor_codewords(cb, y, 2);
  GslConfig cfg;
  cfg.neighbors = 2;

  const std::vector<double> grad_right = {2.0};
  auto sel = select_codeword(grad_right, y, neighbors, cb, 1.0, cfg);
  CHECK(!sel.rejected);
  CHECK(neighbors[sel.chosen].code == PqCode{0});  // codeword at +1 pulls along +g
  CHECK(sel.alignment == doctest::Approx(1.0));

  // shrink to the single neighbor opposite the gradient: rejection
  const std::vector<float> book_neg = {-1.0f};
  const Codebook cb_neg(1, 1, 1, book_neg);
  const auto only = enumerate_neighbor_codewords(cb_neg, y, 1);
  cfg.neighbors = 1;
  sel = select_codeword(grad_right, y, only, cb_neg, 1.0, cfg);
  CHECK(sel.rejected);
  CHECK(sel.alignment == doctest::Approx(-1.0));
}

TEST_CASE("select_codeword matches a brute-force scoring oracle") {
  Rng rng(11);
  GslConfig cfg;
  cfg.neighbors = 8;
  for (int inst = 0; inst < 25; ++inst) {
    const Codebook cb(2, 4, 2, random_book(2, 4, 2, 700 + inst));
    std::vector<float> y(4);
    for (auto& v : y) v = static_cast<float>(rng.normal());
    std::vector<double> grad(4);
    for (auto& g : grad) g = rng.normal();

    const auto neighbors = enumerate_neighbor_codewords(cb, y, 8);
    const double sigma = compute_sigma(neighbors);
    const auto sel = select_codeword(grad, y, neighbors, cb, sigma, cfg);

    double best_score = -std::numeric_limits<double>::infinity();
    std::size_t best_idx = neighbors.size();
    for (std::size_t i = 0; i < neighbors.size(); ++i) {
      const std::vector<float> rec = decode(cb, neighbors[i].code);
      double d2 = 0.0;
      std::vector<double> diff(4);
      for (std::size_t j = 0; j < 4; ++j) {
        diff[j] = static_cast<double>(rec[j]) - static_cast<double>(y[j]);
        d2 += diff[j] * diff[j];
      }
      const double dist = std::sqrt(d2);
      if (dist < 1e-12) continue;
      const double f = std::exp(-d2 / sigma);
      double score = 0.0;
      for (std::size_t j = 0; j < 4; ++j) score += grad[j] * f * diff[j] / dist;
      if (score > best_score) {
        best_score = score;
        best_idx = i;
      }
    }
    REQUIRE(best_idx < neighbors.size());
    CHECK(sel.chosen == best_idx);
    CHECK(sel.rejected == (best_score <= 0.0));
  }
}

TEST_CASE("descent_aligned selection maximizes the opposite orientation") {
  const std::vector<float> book = {1.0f, -1.0f};
  const Codebook cb(1, 2, 1, book);
  const std::vector<float> y = {0.0f};
  const auto neighbors = enumerate_neighbor_codewords(cb, y, 2);
  GslConfig cfg;
  cfg.neighbors = 2;
  cfg.selection_sign = SelectionSign::descent_aligned;
  const std::vector<double> grad = {2.0};
  const auto sel = select_codeword(grad, y, neighbors, cb, 1.0, cfg);
  CHECK(!sel.rejected);
  CHECK(neighbors[sel.chosen].code == PqCode{1});  // codeword at -1 lies on the descent side
}

TEST_CASE("snap_gradient algebra on the parallel, orthogonal and random cases") {
  GslConfig cfg;
  cfg.lambda = 0.036;

  SUBCASE("unit gradient parallel to a unit direction: lambda1 0, lambda2 = |dc|, dy = dc") {
    const std::vector<double> g = {1.0, 0.0};
    const std::vector<double> dc = {1.0, 0.0};
    for (auto denom : {LambdaDenominator::literal, LambdaDenominator::cosine_squared}) {
      cfg.lambda1_denominator = denom;
      const auto out = snap_gradient(g, dc, false, cfg);
      CHECK(out.lambda1 == doctest::Approx(0.0).epsilon(1e-12));
      CHECK(out.lambda2 == doctest::Approx(norm(dc)).epsilon(1e-12));
      CHECK(out.delta_y[0] == doctest::Approx(dc[0]).epsilon(1e-9));
      CHECK(out.delta_y[1] == doctest::Approx(dc[1]).epsilon(1e-12));
    }
  }

  SUBCASE("parallel case at general |dc|: lambda2 is the projected gradient |g| cos") {
    const std::vector<double> g = {1.0, 0.0};
    const std::vector<double> dc = {0.4, 0.0};
    const auto out = snap_gradient(g, dc, false, cfg);
    CHECK(out.lambda1 == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(out.lambda2 == doctest::Approx(1.0).epsilon(1e-12));  // g.dc / |dc| = |g|
    CHECK(out.delta_y[0] == doctest::Approx(dc[0]).epsilon(1e-9));  // dy = dc still
  }

  SUBCASE("orthogonal direction: lambda2 0, delta_y = lambda g") {
    const std::vector<double> g = {3.0, 0.0};
    const std::vector<double> dc = {0.0, 0.7};
    const auto out = snap_gradient(g, dc, false, cfg);
    CHECK(out.lambda2 == 0.0);
    CHECK(out.lambda1 == cfg.lambda);
    CHECK(out.delta_y[0] == cfg.lambda * 3.0);
    CHECK(out.delta_y[1] == 0.0);
  }

  SUBCASE("random cosine_squared instance matches the recomputed coefficients") {
    cfg.lambda1_denominator = LambdaDenominator::cosine_squared;
    Rng rng(3);
    for (int t = 0; t < 30; ++t) {
      std::vector<double> g(5), dc(5);
      for (auto& v : g) v = rng.normal();
      for (auto& v : dc) v = 0.3 * rng.normal();
      const auto out = snap_gradient(g, dc, false, cfg);

      const double cosine = dot(g, dc) / (norm(g) * norm(dc));
      CHECK(out.lambda1 == doctest::Approx((1.0 - cosine * cosine) * cfg.lambda).epsilon(1e-6));
      CHECK(out.lambda2 == doctest::Approx(norm(g) * cosine).epsilon(1e-6));
      for (std::size_t j = 0; j < 5; ++j) {
        CHECK(out.delta_y[j] ==
              doctest::Approx(out.lambda1 * g[j] + out.lambda2 * dc[j]).epsilon(1e-9));
      }
    }
  }

  SUBCASE("literal denominator uses the unsquared gradient norm") {
    cfg.lambda1_denominator = LambdaDenominator::literal;
    const std::vector<double> g = {2.0, 1.0, 0.0};
    const std::vector<double> dc = {0.1, 0.3, -0.2};
    const auto out = snap_gradient(g, dc, false, cfg);
    const double proj = dot(g, dc);
    const double expected =
        (1.0 - proj * proj / (dot(dc, dc) * norm(g))) * cfg.lambda;
    CHECK(out.lambda1 == doctest::Approx(expected).epsilon(1e-12));
  }

  SUBCASE("rejection returns exactly lambda * g") {
    const std::vector<double> g = {0.5, -1.25, 2.0};
    const auto out = snap_gradient(g, {}, true, cfg);
    CHECK(out.lambda1 == cfg.lambda);
    CHECK(out.lambda2 == 0.0);
    for (std::size_t j = 0; j < g.size(); ++j) CHECK(out.delta_y[j] == cfg.lambda * g[j]);
  }
}

TEST_CASE("gsl_backward with T=1 snaps toward the nearest codeword") {
  const Codebook cb(2, 4, 2, random_book(2, 4, 2, 31));
  GslConfig cfg;
  cfg.neighbors = 1;
  Rng rng(32);
  std::vector<double> reps(4), grads(4);
  for (auto& v : reps) v = rng.normal();
  for (auto& v : grads) v = rng.normal();

  const auto result = gsl_backward(reps, grads, 1, cb, cfg);
  std::vector<float> yf(4);
  for (std::size_t j = 0; j < 4; ++j) yf[j] = static_cast<float>(reps[j]);
  CHECK(result.reports[0].chosen_code == encode(cb, yf));
}

TEST_CASE("gsl_backward passes zero gradients through as zero") {
  const Codebook cb(2, 4, 2, random_book(2, 4, 2, 41));
  GslConfig cfg;
  cfg.neighbors = 4;
  const std::vector<double> reps = {0.1, 0.2, 0.3, 0.4};
  const std::vector<double> grads(4, 0.0);
  const auto result = gsl_backward(reps, grads, 1, cb, cfg);
  CHECK(result.reports[0].rejected);
  for (double v : result.snapped) CHECK(v == 0.0);
}

TEST_CASE("gsl_backward equals the composition of the individual operations") {
  const Codebook cb(2, 4, 2, random_book(2, 4, 2, 51));
  GslConfig cfg;
  cfg.neighbors = 6;
  cfg.lambda = 0.25;

  Rng rng(52);
  const std::size_t n = 4, d = 4;
  std::vector<double> reps(n * d), grads(n * d);
  for (auto& v : reps) v = rng.normal();
  for (auto& v : grads) v = rng.normal();

  const auto batch = gsl_backward(reps, grads, n, cb, cfg);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<float> y(d);
    for (std::size_t j = 0; j < d; ++j) y[j] = static_cast<float>(reps[i * d + j]);
    std::span<const double> g(grads.data() + i * d, d);

    const auto neighbors = enumerate_neighbor_codewords(cb, y, cfg.neighbors);
    const double sigma = compute_sigma(neighbors);
    const auto sel = select_codeword(g, y, neighbors, cb, sigma, cfg);
    const auto snapped = snap_gradient(g, sel.delta_c, sel.rejected, cfg);

    CHECK(batch.reports[i].chosen_code == neighbors[sel.chosen].code);
    CHECK(batch.reports[i].rejected == sel.rejected);
    CHECK(batch.reports[i].lambda1 == snapped.lambda1);
    CHECK(batch.reports[i].lambda2 == snapped.lambda2);
    for (std::size_t j = 0; j < d; ++j) {
      CHECK(batch.snapped[i * d + j] == snapped.delta_y[j]);
    }
  }
}

TEST_CASE("rejection safety: the snapped batch gradient is exactly lambda * g") {
  // a codebook whose single codeword sits opposite the gradient from y
  const std::vector<float> book = {-3.0f, 0.0f};  // M=1, K=1, sub_dim=2
  const Codebook cb(1, 1, 2, book);
  GslConfig cfg;
  cfg.neighbors = 1;
  cfg.lambda = 0.036;
  const std::vector<double> reps = {1.0, 0.0};
  const std::vector<double> grads = {5.0, 0.0};  // toward +x, codeword toward -x
  const auto result = gsl_backward(reps, grads, 1, cb, cfg);
  CHECK(result.reports[0].rejected);
  CHECK(result.snapped[0] == cfg.lambda * 5.0);
  CHECK(result.snapped[1] == 0.0);
}

TEST_CASE("successful paper_literal snapping never reverses the gradient component") {
  // cosine_squared keeps lambda1 >= 0 and lambda2 * g.dc > 0 on success
  Rng rng(61);
  const Codebook cb(2, 8, 2, random_book(2, 8, 2, 60));
  GslConfig cfg;
  cfg.neighbors = 16;
  cfg.lambda = 0.036;
  cfg.lambda1_denominator = LambdaDenominator::cosine_squared;
  std::size_t accepted = 0;
  for (int t = 0; t < 40; ++t) {
    std::vector<double> reps(4), grads(4);
    for (auto& v : reps) v = rng.normal();
    for (auto& v : grads) v = rng.normal();
    const auto result = gsl_backward(reps, grads, 1, cb, cfg);
    if (result.reports[0].rejected) continue;
    ++accepted;
    CHECK(result.reports[0].lambda1 >= 0.0);
    CHECK(dot(result.snapped, grads) >= 0.0);
  }
  CHECK(accepted > 0);
}

TEST_CASE("moving along the chosen direction reduces the distance to that codeword") {
  Rng rng(71);
  const Codebook cb(2, 4, 2, random_book(2, 4, 2, 70));
  GslConfig cfg;
  cfg.neighbors = 8;
  for (int t = 0; t < 20; ++t) {
    std::vector<float> y(4);
    for (auto& v : y) v = static_cast<float>(rng.normal());
    std::vector<double> g(4);
    for (auto& v : g) v = rng.normal();

    const auto neighbors = enumerate_neighbor_codewords(cb, y, cfg.neighbors);
    const double sigma = compute_sigma(neighbors);
    const auto sel = select_codeword(g, y, neighbors, cb, sigma, cfg);
    if (sel.rejected) continue;

    const std::vector<float> c = decode(cb, neighbors[sel.chosen].code);
    const double eta = 1e-3;
    double before = 0.0, after = 0.0;
    for (std::size_t j = 0; j < 4; ++j) {
      const double yj = static_cast<double>(y[j]);
      const double cj = static_cast<double>(c[j]);
      before += (cj - yj) * (cj - yj);
      const double moved = yj + eta * sel.delta_c[j];
      after += (cj - moved) * (cj - moved);
    }
    CHECK(after < before);
  }
}

TEST_CASE("baseline_biased_gradient reduces to g without a residual") {
  const Codebook cb(2, 2, 2, random_book(2, 2, 2, 81));
  const std::vector<float> rec = decode(cb, {1, 0});
  std::vector<double> y(rec.begin(), rec.end());
  const std::vector<double> g = {0.5, -0.5, 1.0, 2.0};

  const auto dy = baseline_biased_gradient(y, g, cb, 0.7);
  for (std::size_t j = 0; j < 4; ++j) CHECK(dy[j] == doctest::Approx(g[j]).epsilon(1e-6));

  Rng rng(82);
  std::vector<double> y2(4);
  for (auto& v : y2) v = rng.normal();
  const auto dy_zero = baseline_biased_gradient(y2, g, cb, 0.0);
  for (std::size_t j = 0; j < 4; ++j) CHECK(dy_zero[j] == g[j]);
}

TEST_CASE("baseline_biased_gradient residual matches the codebook round trip") {
  const Codebook cb(2, 4, 2, random_book(2, 4, 2, 91));
  Rng rng(92);
  for (int t = 0; t < 10; ++t) {
    std::vector<double> y(4), g(4);
    for (auto& v : y) v = rng.normal();
    for (auto& v : g) v = rng.normal();
    const double lambda_q = 0.3;
    const auto dy = baseline_biased_gradient(y, g, cb, lambda_q);

    std::vector<float> yf(4);
    for (std::size_t j = 0; j < 4; ++j) yf[j] = static_cast<float>(y[j]);
    const std::vector<float> rec = decode(cb, encode(cb, yf));
    for (std::size_t j = 0; j < 4; ++j) {
      const double expected = g[j] + 2.0 * lambda_q * (y[j] - static_cast<double>(rec[j]));
      CHECK(dy[j] == doctest::Approx(expected).epsilon(1e-9));
    }
  }
}

TEST_CASE("sequential refresh keeps codewords already at the stream points") {
  const std::vector<float> book = {1.0f, 2.0f, 5.0f, 6.0f,   // subspace 0
                                   -1.0f, 0.0f, 3.0f, 4.0f};  // subspace 1
  const Codebook cb(2, 2, 2, book);
  CodebookRefresher refresher(cb, RefreshMode::sequential_kmeans, 5, 1);

  // stream three copies of the concatenation of codeword 0 of each subspace
  std::vector<float> stream;
  for (int i = 0; i < 3; ++i) {
    stream.insert(stream.end(), {1.0f, 2.0f, -1.0f, 0.0f});
  }
  const Codebook& updated = refresher.refresh(stream);
  CHECK(updated.version() == cb.version() + 1);
  CHECK(updated.data() == cb.data());
}

TEST_CASE("sequential refresh moves a fresh codeword exactly onto a single point") {
  const std::vector<float> book = {0.0f, 0.0f, 10.0f, 10.0f};  // M=1, K=2, sub_dim=2
  const Codebook cb(1, 2, 2, book);
  CodebookRefresher refresher(cb, RefreshMode::sequential_kmeans, 5, 1);
  const std::vector<float> stream = {1.0f, -1.0f};  // nearest to codeword 0
  const Codebook& updated = refresher.refresh(stream);
  CHECK(updated.codeword(0, 0)[0] == 1.0f);
  CHECK(updated.codeword(0, 0)[1] == -1.0f);
  CHECK(updated.codeword(0, 1)[0] == 10.0f);
}

TEST_CASE("sequential refresh matches an independent streaming trace") {
  const Codebook cb(2, 2, 2, random_book(2, 2, 2, 101));
  CodebookRefresher refresher(cb, RefreshMode::sequential_kmeans, 5, 1);

  Rng rng(102);
  const std::size_t n = 100, d = 4;
  std::vector<float> stream(n * d);
  for (auto& v : stream) v = static_cast<float>(rng.normal());

  // independent trace in double
  std::vector<double> centers(cb.data().begin(), cb.data().end());
  std::vector<std::uint64_t> counts(4, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t m = 0; m < 2; ++m) {
      const float* x = stream.data() + i * d + m * 2;
      double best = std::numeric_limits<double>::infinity();
      std::size_t best_k = 0;
      for (std::size_t k = 0; k < 2; ++k) {
        double acc = 0.0;
        for (std::size_t j = 0; j < 2; ++j) {
          const double diff = static_cast<double>(x[j]) - centers[(m * 2 + k) * 2 + j];
          acc += diff * diff;
        }
        if (acc < best) {
          best = acc;
          best_k = k;
        }
      }
      counts[m * 2 + best_k]++;
      for (std::size_t j = 0; j < 2; ++j) {
        double& c = centers[(m * 2 + best_k) * 2 + j];
        c += (static_cast<double>(x[j]) - c) / static_cast<double>(counts[m * 2 + best_k]);
      }
    }
  }

  const Codebook& updated = refresher.refresh(stream);
  for (std::size_t i = 0; i < centers.size(); ++i) {
    CHECK(updated.data()[i] == doctest::Approx(static_cast<float>(centers[i])).epsilon(1e-6));
  }
}

TEST_CASE("full_retrain refresh equals batch k-means on the stream") {
  const Codebook cb(2, 2, 2, random_book(2, 2, 2, 111));
  CodebookRefresher refresher(cb, RefreshMode::full_retrain, 8, 42);
  Rng rng(112);
  std::vector<float> stream(30 * 4);
  for (auto& v : stream) v = static_cast<float>(rng.normal());

  const Codebook& updated = refresher.refresh(stream);
  const Codebook direct = train_codebook(stream, 4, 2, 2, 8, 42);
  CHECK(updated.data() == direct.data());
  CHECK(updated.version() == cb.version() + 1);

  CHECK_THROWS_AS(refresher.refresh(std::span<const float>{}), InvalidArgument);
}

TEST_CASE("codebook versions increase across refreshes") {
  const Codebook cb(1, 2, 2, random_book(1, 2, 2, 121));
  CodebookRefresher refresher(cb, RefreshMode::sequential_kmeans, 5, 1);
  std::uint64_t prev = refresher.current().version();
  Rng rng(122);
  for (int r = 0; r < 4; ++r) {
    std::vector<float> stream(6);
    for (auto& v : stream) v = static_cast<float>(rng.normal());
    const Codebook& updated = refresher.refresh({stream.data(), 4});
    CHECK(updated.version() == prev + 1);
    prev = updated.version();
  }
}

TEST_CASE("gsl config validation") {
  GslConfig cfg;
  cfg.lambda = 0.0;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg.lambda = 1.0;
  cfg.neighbors = 0;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg.neighbors = 2;
  cfg.update_interval = 0;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
}
