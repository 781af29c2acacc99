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

#ifndef DPREZONE_SES_HPP_
#define DPREZONE_SES_HPP_

#include <array>
#include <span>
#include <string>
#include <vector>

#include "dprezone/district.hpp"

namespace dprezone {

enum class SesLabel { kLow, kHigh };

struct SesScore {
  std::string block_group_id;
  // Standardized inputs in BlockGroupVars field order.
  std::array<double, 5> variable_z{};
  double composite_z = 0.0;
  SesLabel label = SesLabel::kLow;  // kHigh iff composite_z > 0
};

// Z-scores (population standard deviation) each variable across the given
// block groups, averages the five, and standardizes the average again.
// A variable that is constant across all block groups contributes z = 0.
std::vector<SesScore> compute_ses(std::span<const BlockGroupVars> vars);

// Two-group counts (low_ses, high_ses): every student in a block takes the
// block group's label. Totals are copied unchanged.
CountsMatrix build_ses_counts(const District& district,
                              std::span<const SesScore> scores);

// Population z-scores; all zeros for constant input.
std::vector<double> zscore(std::span<const double> xs);

}  // namespace dprezone

#endif  // DPREZONE_SES_HPP_
