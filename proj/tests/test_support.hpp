// Copyright 2026 The dp-rezone Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Small-instance builders shared by the unit and acceptance tests.

#ifndef DPREZONE_TESTS_TEST_SUPPORT_HPP_
#define DPREZONE_TESTS_TEST_SUPPORT_HPP_

#include <algorithm>
#include <cstdio>
#include <deque>
#include <string>
#include <utility>
#include <vector>

#include "dprezone/district.hpp"
#include "dprezone/rng.hpp"

namespace dprezone::testing {

// Blocks b1..bn (n <= 9 keeps lexicographic order equal to numeric order).
inline std::string block_id(int i) { return "b" + std::to_string(i + 1); }
inline std::string school_id(int i) { return "s" + std::to_string(i + 1); }

struct TinyCase {
  int n_blocks = 0;
  std::vector<std::pair<int, int>> edges;
  std::vector<int> roots;          // per school
  std::vector<int> current;        // per block
  std::vector<std::int64_t> white;  // per block
  std::vector<std::int64_t> total;  // per block
  std::vector<std::vector<double>> travel;  // [block][school]; empty = 1 min
};

inline District build_tiny(const TinyCase& tc) {
  DistrictData data;
  data.name = "tiny";
  for (int b = 0; b < tc.n_blocks; ++b) {
    Block blk;
    blk.id = block_id(b);
    blk.block_group_id = "g" + std::to_string(b + 1);
    data.blocks.push_back(blk);
  }
  for (auto [a, b] : tc.edges) data.blocks[a].neighbors.push_back(b);
  for (std::size_t s = 0; s < tc.roots.size(); ++s) {
    data.schools.push_back(
        {school_id(static_cast<int>(s)), "School " + std::to_string(s + 1),
         tc.roots[s]});
  }
  data.counts = CountsMatrix(racial_groups(), tc.n_blocks);
  for (int b = 0; b < tc.n_blocks; ++b) {
    data.counts.at(0, b) = tc.white[b];
    // Everyone else is Black so the ground-truth total check holds.
    data.counts.at(1, b) = tc.total[b] - tc.white[b];
    data.counts.total(b) = tc.total[b];
  }
  TravelTimeMatrix t(tc.n_blocks, tc.roots.size());
  for (int b = 0; b < tc.n_blocks; ++b) {
    for (std::size_t s = 0; s < tc.roots.size(); ++s) {
      t.at(b, static_cast<SchoolIndex>(s)) =
          tc.travel.empty() ? 1.0 : tc.travel[b][s];
    }
  }
  data.travel = t;
  data.current.school_of = tc.current;
  return District::build(std::move(data));
}

// Path b1 - b2 - ... - bn.
inline std::vector<std::pair<int, int>> path_edges(int n) {
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i + 1 < n; ++i) e.push_back({i, i + 1});
  return e;
}

// Random connected instance: spanning tree plus extra edges, distinct
// roots, Voronoi-by-hops status quo with random tie breaks, random counts
// and travel times. Status-quo blocks that break contiguity end up pinned.
inline District random_tiny(std::uint64_t seed, int max_blocks, int max_schools) {
  Rng rng(seed);
  TinyCase tc;
  const int n = 3 + static_cast<int>(rng.below(max_blocks - 2));
  const int ns = 2 + static_cast<int>(rng.below(std::min(max_schools, n) - 1));
  tc.n_blocks = n;
  for (int b = 1; b < n; ++b) {
    tc.edges.push_back({static_cast<int>(rng.below(b)), b});
  }
  const int extra = static_cast<int>(rng.below(n));
  for (int k = 0; k < extra; ++k) {
    const int a = static_cast<int>(rng.below(n));
    const int b = static_cast<int>(rng.below(n));
    if (a != b) tc.edges.push_back({a, b});
  }
  std::vector<int> nodes(n);
  for (int i = 0; i < n; ++i) nodes[i] = i;
  for (int i = n - 1; i > 0; --i) {
    std::swap(nodes[i], nodes[rng.below(i + 1)]);
  }
  tc.roots.assign(nodes.begin(), nodes.begin() + ns);

  // Multi-source BFS with random tie breaks.
  std::vector<std::vector<int>> adj(n);
  for (auto [a, b] : tc.edges) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  tc.current.assign(n, -1);
  std::deque<int> q;
  for (int s = 0; s < ns; ++s) {
    tc.current[tc.roots[s]] = s;
    q.push_back(tc.roots[s]);
  }
  while (!q.empty()) {
    const int u = q.front();
    q.pop_front();
    auto nb = adj[u];
    for (int i = static_cast<int>(nb.size()) - 1; i > 0; --i) {
      std::swap(nb[i], nb[rng.below(i + 1)]);
    }
    for (int v : nb) {
      if (tc.current[v] == -1) {
        tc.current[v] = tc.current[u];
        q.push_back(v);
      }
    }
  }
  // Occasionally scramble one block to exercise pinning.
  if (rng.bernoulli(0.3)) {
    tc.current[rng.below(n)] = static_cast<int>(rng.below(ns));
  }
  for (int b = 0; b < n; ++b) {
    const std::int64_t total = static_cast<std::int64_t>(rng.below(40));
    tc.total.push_back(total);
    tc.white.push_back(total == 0 ? 0 : static_cast<std::int64_t>(rng.below(total + 1)));
  }
  // Keep both sides non-empty.
  tc.total[0] += 5;
  tc.white[0] += 3;
  tc.travel.assign(n, std::vector<double>(ns));
  for (int b = 0; b < n; ++b) {
    for (int s = 0; s < ns; ++s) tc.travel[b][s] = 1.0 + rng.uniform() * 19.0;
  }
  return build_tiny(tc);
}

}  // namespace dprezone::testing

#endif  // DPREZONE_TESTS_TEST_SUPPORT_HPP_
