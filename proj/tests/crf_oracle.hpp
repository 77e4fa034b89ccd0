// Copyright 2026 The polyseg Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Brute-force reference implementations over all 4^T tag paths.

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "polyseg/crf.hpp"
#include "polyseg/random.hpp"

namespace polyseg::testing {

/// Every tag path of length `n`, in lexicographic order.
inline std::vector<std::vector<std::int32_t>> all_paths(std::size_t n) {
  std::vector<std::vector<std::int32_t>> out;
  std::vector<std::int32_t> path(n, 0);
  while (true) {
    out.push_back(path);
    std::size_t k = n;
    while (k > 0 && path[k - 1] == kNumTags - 1) path[--k] = 0;
    if (k == 0) break;
    ++path[k - 1];
  }
  return out;
}

/// Direct summation of start, emission, transition and stop terms.
inline double path_score(const Tensor<double>& em, const std::vector<std::int32_t>& y, const CrfParams<double>& p) {
  double s = p.start[static_cast<std::size_t>(y.front())] + p.stop[static_cast<std::size_t>(y.back())];
  for (std::size_t t = 0; t < y.size(); ++t) s += em.at(t, static_cast<std::size_t>(y[t]));
  for (std::size_t t = 0; t + 1 < y.size(); ++t) s += p.trans(y[t], y[t + 1]);
  return s;
}

struct BruteForce {
  double log_z = 0;
  std::vector<std::int32_t> best;
  double best_score = -std::numeric_limits<double>::infinity();
};

inline BruteForce brute_force(const Tensor<double>& em, const CrfParams<double>& p) {
  BruteForce r;
  std::vector<double> scores;
  for (const auto& y : all_paths(em.rows())) {
    const double s = path_score(em, y, p);
    scores.push_back(s);
    if (s > r.best_score) {
      r.best_score = s;
      r.best = y;
    }
  }
  double m = -std::numeric_limits<double>::infinity();
  for (double s : scores) m = std::max(m, s);
  double z = 0;
  for (double s : scores) z += std::exp(s - m);
  r.log_z = m + std::log(z);
  return r;
}

inline CrfParams<double> random_crf(Rng& rng, double range = 1.0) {
  auto p = CrfParams<double>::zeros();
  for (auto* t : {&p.transitions, &p.start, &p.stop}) {
    for (double& v : t->data()) v = rng.uniform(-range, range);
  }
  return p;
}

inline Tensor<double> random_emissions(Rng& rng, std::size_t steps, double range = 2.0) {
  auto em = Tensor<double>::zeros({steps, static_cast<std::size_t>(kNumTags)}, true);
  for (double& v : em.data()) v = rng.uniform(-range, range);
  return em;
}

}  // namespace polyseg::testing
