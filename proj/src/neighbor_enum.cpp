// Copyright (c) 2026 the snapq authors
//
// This code is released under the
// Apache License Version 2.0 http://www.apache.org/licenses/.
#include <algorithm>
#include <cmath>
#include <queue>
#include <set>
#include <vector>

#include "snapq/codebook.hpp"
#include "snapq/common.hpp"

// Best-first traversal of the combination lattice. Each subspace contributes
// a distance list sorted ascending; a full codeword is a choice of one entry
// per list and its distance is the sum. Starting from the all-nearest
// combination, popping the cheapest frontier entry and pushing its M
// single-step successors visits combinations in non-decreasing distance
// order, so the top T come out after T pops with a frontier of at most
// T*M + 1 entries.

namespace snapq {

namespace {

struct SubEntry {
  double dist = 0.0;
  std::uint32_t index = 0;
};

struct Candidate {
  double dist = 0.0;
  PqCode code;                     // actual codeword indices, for tie order
  std::vector<std::uint32_t> pos;  // positions into the sorted lists

  bool operator>(const Candidate& other) const {
    if (dist != other.dist) return dist > other.dist;
    return code > other.code;  // lexicographic
  }
};

}  // namespace

std::vector<NeighborCodeword> enumerate_neighbor_codewords(const Codebook& cb,
                                                           std::span<const float> vec,
                                                           std::size_t count) {
  if (vec.size() != cb.dim()) {
    throw InvalidArgument("enumerate_neighbor_codewords: vector dim does not match codebook");
  }
  const std::size_t m_count = cb.subspace_count();
  const std::size_t k_count = cb.codeword_count();

  double log_total = static_cast<double>(m_count) * std::log2(static_cast<double>(k_count));
  if (count < 1 ||
      (log_total < 63.0 &&
       count > static_cast<std::size_t>(std::pow(static_cast<double>(k_count),
                                                 static_cast<double>(m_count)) + 0.5))) {
    throw InvalidArgument("enumerate_neighbor_codewords: count out of range [1, K^M]");
  }

  // Sorted per-subspace distance lists; ties toward the smaller codeword
  // index so position order matches the encode() tie rule.
  std::vector<std::vector<SubEntry>> lists(m_count);
  for (std::size_t m = 0; m < m_count; ++m) {
    auto& list = lists[m];
    list.resize(k_count);
    const float* v = vec.data() + m * cb.sub_dim();
    for (std::size_t k = 0; k < k_count; ++k) {
      const float* c = cb.codeword(m, k);
      double acc = 0.0;
      for (std::size_t j = 0; j < cb.sub_dim(); ++j) {
        const double d = static_cast<double>(v[j]) - static_cast<double>(c[j]);
        acc += d * d;
      }
      list[k] = {acc, static_cast<std::uint32_t>(k)};
    }
    std::sort(list.begin(), list.end(), [](const SubEntry& a, const SubEntry& b) {
      if (a.dist != b.dist) return a.dist < b.dist;
      return a.index < b.index;
    });
  }

  auto make_candidate = [&](std::vector<std::uint32_t> pos) {
    Candidate c;
    c.dist = 0.0;
    c.code.resize(m_count);
    for (std::size_t m = 0; m < m_count; ++m) {
      const SubEntry& e = lists[m][pos[m]];
      c.dist += e.dist;
      c.code[m] = e.index;
    }
    c.pos = std::move(pos);
    return c;
  };

  std::priority_queue<Candidate, std::vector<Candidate>, std::greater<Candidate>> frontier;
  std::set<std::vector<std::uint32_t>> seen;

  std::vector<std::uint32_t> root(m_count, 0);
  seen.insert(root);
  frontier.push(make_candidate(std::move(root)));

  std::vector<NeighborCodeword> out;
  out.reserve(count);
  while (out.size() < count && !frontier.empty()) {
    Candidate top = frontier.top();
    frontier.pop();
    out.push_back({top.code, top.dist});

    for (std::size_t m = 0; m < m_count; ++m) {
      if (top.pos[m] + 1 >= k_count) continue;
      std::vector<std::uint32_t> next = top.pos;
      next[m]++;
      if (seen.insert(next).second) {
        frontier.push(make_candidate(std::move(next)));
      }
    }
  }
  if (out.size() < count) {
    throw InvalidArgument("enumerate_neighbor_codewords: count exceeds K^M");
  }
  return out;
}

}  // namespace snapq
