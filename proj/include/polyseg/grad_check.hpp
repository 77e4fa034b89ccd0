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

#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "polyseg/tensor.hpp"

namespace polyseg {

struct GradCheckEntry {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  bool passed = true;
};

enum class FiniteDifference {
  kCentral,     // (f(x+h) - f(x-h)) / 2h
  kRichardson,  // central differences at h and h/2 combined, O(h^4) error
};

/// Compares reverse-mode gradients against finite differences.
///
/// `loss` maps a Graph<double> to a scalar tensor and must be deterministic.
/// Per entry the relative error is |ad - fd| / (|ad| + |fd| + 1e-12); the
/// report keeps the maximum per parameter array. Failures are reported,
/// never thrown.
template <typename LossFn>
GradCheckReport grad_check(LossFn&& loss, std::vector<std::pair<std::string, Tensor<double>>> params,
                           double eps = 1e-5, double tol = 1e-5,
                           FiniteDifference scheme = FiniteDifference::kCentral) {
  for (auto& [name, p] : params) p.zero_grad();
  {
    Graph<double> g;
    Tensor<double> out = loss(g);
    g.backward(out);
  }
  auto evaluate = [&loss]() {
    Graph<double> g(false);
    return loss(g).item();
  };

  GradCheckReport report;
  report.tolerance = tol;
  for (auto& [name, p] : params) {
    GradCheckEntry entry;
    entry.name = name;
    const std::vector<double> analytic =
        p.has_grad() ? std::vector<double>(p.grad().begin(), p.grad().end()) : std::vector<double>(p.size(), 0.0);
    auto values = p.data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      auto central = [&](double h) {
        values[i] = saved + h;
        const double plus = evaluate();
        values[i] = saved - h;
        const double minus = evaluate();
        values[i] = saved;
        return (plus - minus) / (2.0 * h);
      };
      const double coarse = central(eps);
      const double numeric =
          scheme == FiniteDifference::kCentral ? coarse : (4.0 * central(eps / 2) - coarse) / 3.0;
      const double rel = std::abs(analytic[i] - numeric) / (std::abs(analytic[i]) + std::abs(numeric) + 1e-12);
      if (i == 0 || rel > entry.max_rel_error) {
        entry.max_rel_error = rel;
        entry.worst_index = i;
        entry.analytic = analytic[i];
        entry.numeric = numeric;
      }
    }
    report.max_rel_error = std::max(report.max_rel_error, entry.max_rel_error);
    report.entries.push_back(entry);
  }
  report.passed = report.max_rel_error < tol;
  return report;
}

}  // namespace polyseg
