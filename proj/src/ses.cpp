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

#include "dprezone/ses.hpp"

#include <cmath>
#include <unordered_map>

#include "dprezone/error.hpp"

namespace dprezone {

std::vector<double> zscore(std::span<const double> xs) {
  std::vector<double> z(xs.size(), 0.0);
  if (xs.empty()) return z;
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / static_cast<double>(xs.size()));
  // Relative test so constancy does not depend on the variable's units.
  if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) return z;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    z[i] = (xs[i] - mean) / sd;
    // Round-off at the mean must not decide a label.
    if (std::abs(z[i]) < 1e-12) z[i] = 0.0;
  }
  return z;
}

std::vector<SesScore> compute_ses(std::span<const BlockGroupVars> vars) {
  if (vars.size() < 2) {
    throw ValidationError("SES index needs at least two block groups");
  }
  const std::size_t n = vars.size();
  std::array<std::vector<double>, 5> columns;
  for (const auto& v : vars) {
    const double fields[] = {v.pct_dual_parent, v.pct_bachelors,
                             v.pct_non_english, v.pct_owner_occupied,
                             v.median_family_income};
    for (int k = 0; k < 5; ++k) {
      if (!std::isfinite(fields[k])) {
        throw ValidationError("non-finite SES variable for block group '" +
                              v.block_group_id + "'");
      }
      columns[k].push_back(fields[k]);
    }
  }
  std::vector<SesScore> out(n);
  std::vector<double> average(n, 0.0);
  for (int k = 0; k < 5; ++k) {
    const auto z = zscore(columns[k]);
    for (std::size_t i = 0; i < n; ++i) {
      out[i].variable_z[k] = z[i];
      average[i] += z[i] / 5.0;
    }
  }
  const auto composite = zscore(average);
  for (std::size_t i = 0; i < n; ++i) {
    out[i].block_group_id = vars[i].block_group_id;
    out[i].composite_z = composite[i];
    out[i].label = composite[i] > 0.0 ? SesLabel::kHigh : SesLabel::kLow;
  }
  return out;
}

CountsMatrix build_ses_counts(const District& district,
                              std::span<const SesScore> scores) {
  std::unordered_map<std::string, SesLabel> label_of;
  for (const auto& s : scores) label_of[s.block_group_id] = s.label;
  const auto& ground = district.counts();
  CountsMatrix out({Group::kLowSes, Group::kHighSes}, district.num_blocks());
  for (std::size_t b = 0; b < district.num_blocks(); ++b) {
    const auto& bg = district.blocks()[b].block_group_id;
    auto it = label_of.find(bg);
    if (it == label_of.end()) {
      throw ValidationError("no SES score for block group '" + bg +
                            "' (block '" + district.blocks()[b].id + "')");
    }
    const std::int64_t total = ground.total(b);
    out.total(b) = total;
    out.at(it->second == SesLabel::kHigh ? 1 : 0, b) = total;
  }
  out.set_privatized(ground.privatized());
  return out;
}

}  // namespace dprezone
