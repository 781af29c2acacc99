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

#ifndef DPREZONE_DISTRICT_HPP_
#define DPREZONE_DISTRICT_HPP_

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dprezone {

// Dense indices. Blocks and schools are stored sorted by id, so index order
// is the lexicographic id order used for every tie-break.
using BlockIndex = int;
using SchoolIndex = int;

enum class GroupKind { kRacial, kSes };

enum class Group : std::uint8_t {
  kWhite,
  kBlack,
  kAsian,
  kNative,
  kHispanic,
  kLowSes,
  kHighSes,
};

std::string_view group_label(Group g);
GroupKind group_kind(Group g);
// Accepts the labels produced by group_label; throws ValidationError.
Group parse_group(std::string_view label);

inline const std::vector<Group>& racial_groups() {
  static const std::vector<Group> groups = {Group::kWhite, Group::kBlack,
                                            Group::kAsian, Group::kNative,
                                            Group::kHispanic};
  return groups;
}

struct LatLon {
  double lat = 0.0;
  double lon = 0.0;
};

struct Block {
  std::string id;
  std::string block_group_id;
  std::optional<LatLon> centroid;
  std::vector<BlockIndex> neighbors;  // sorted, symmetric, no self loops
};

struct School {
  std::string id;
  std::string name;
  BlockIndex root = 0;
};

// Per-block student counts for a group set plus the block total, i.e. the
// (|G|+1) x |B| matrix. Ground-truth matrices satisfy total >= sum of the
// listed groups; privatized ones need not.
class CountsMatrix {
 public:
  CountsMatrix() = default;
  CountsMatrix(std::vector<Group> groups, std::size_t n_blocks);

  const std::vector<Group>& groups() const { return groups_; }
  std::size_t blocks() const { return totals_.size(); }
  std::optional<std::size_t> group_index(Group g) const;

  std::int64_t at(std::size_t group, std::size_t block) const {
    return counts_[group * blocks() + block];
  }
  std::int64_t& at(std::size_t group, std::size_t block) {
    return counts_[group * blocks() + block];
  }
  std::int64_t total(std::size_t block) const { return totals_[block]; }
  std::int64_t& total(std::size_t block) { return totals_[block]; }

  std::int64_t group_total(std::size_t group) const;
  std::int64_t district_total() const;

  bool privatized() const { return privatized_; }
  void set_privatized(bool p) { privatized_ = p; }

  // Throws ValidationError on negative entries or total < sum of groups
  // (the latter only for ground-truth matrices).
  void validate() const;

  friend bool operator==(const CountsMatrix&, const CountsMatrix&) = default;

 private:
  std::vector<Group> groups_;
  std::vector<std::int64_t> counts_;
  std::vector<std::int64_t> totals_;
  bool privatized_ = false;
};

class TravelTimeMatrix {
 public:
  TravelTimeMatrix() = default;
  TravelTimeMatrix(std::size_t n_blocks, std::size_t n_schools)
      : n_schools_(n_schools), minutes_(n_blocks * n_schools, 0.0) {}

  double at(BlockIndex b, SchoolIndex s) const {
    return minutes_[static_cast<std::size_t>(b) * n_schools_ + s];
  }
  double& at(BlockIndex b, SchoolIndex s) {
    return minutes_[static_cast<std::size_t>(b) * n_schools_ + s];
  }
  std::size_t schools() const { return n_schools_; }

 private:
  std::size_t n_schools_ = 0;
  std::vector<double> minutes_;
};

// Total map block -> school.
struct Assignment {
  std::vector<SchoolIndex> school_of;

  SchoolIndex operator[](BlockIndex b) const { return school_of[b]; }
  std::size_t size() const { return school_of.size(); }
  friend bool operator==(const Assignment&, const Assignment&) = default;
  friend auto operator<=>(const Assignment&, const Assignment&) = default;
};

// Hop distances to every school root and, for each (block, school), the
// neighbors strictly closer to that root.
class CloserNeighborIndex {
 public:
  static constexpr int kUnreachable = -1;

  CloserNeighborIndex() = default;
  CloserNeighborIndex(std::size_t n_blocks, std::size_t n_schools)
      : n_blocks_(n_blocks),
        dist_(n_blocks * n_schools, kUnreachable),
        closer_(n_blocks * n_schools) {}

  int distance(BlockIndex b, SchoolIndex s) const {
    return dist_[static_cast<std::size_t>(s) * n_blocks_ + b];
  }
  int& distance(BlockIndex b, SchoolIndex s) {
    return dist_[static_cast<std::size_t>(s) * n_blocks_ + b];
  }
  const std::vector<BlockIndex>& closer(BlockIndex b, SchoolIndex s) const {
    return closer_[static_cast<std::size_t>(s) * n_blocks_ + b];
  }
  std::vector<BlockIndex>& closer(BlockIndex b, SchoolIndex s) {
    return closer_[static_cast<std::size_t>(s) * n_blocks_ + b];
  }
  // True when b lies strictly closer to root(s) than `than`.
  bool is_closer(BlockIndex b, BlockIndex than, SchoolIndex s) const {
    const int db = distance(b, s);
    const int dt = distance(than, s);
    return db != kUnreachable && (dt == kUnreachable || db < dt);
  }

 private:
  std::size_t n_blocks_ = 0;
  std::vector<int> dist_;
  std::vector<std::vector<BlockIndex>> closer_;
};

// Socioeconomic variables for one block group.
struct BlockGroupVars {
  std::string block_group_id;
  double pct_dual_parent = 0.0;
  double pct_bachelors = 0.0;
  double pct_non_english = 0.0;
  double pct_owner_occupied = 0.0;
  double median_family_income = 0.0;
};

// Raw ingredients of a district before validation.
struct DistrictData {
  std::string name;
  std::vector<Block> blocks;  // neighbors may be unsorted / one-sided
  std::vector<School> schools;
  CountsMatrix counts;
  std::optional<TravelTimeMatrix> travel;
  Assignment current;
  std::vector<BlockGroupVars> ses_vars;
};

// Immutable, validated district. Copies share the underlying storage.
class District {
 public:
  // Validates, normalizes adjacency, synthesizes travel times when absent,
  // builds the closer-neighbor index and pins blocks whose current
  // assignment violates contiguity. Blocks and schools must already be
  // sorted by id (load_district and generate_synthetic guarantee this).
  static District build(DistrictData data);

  const std::string& name() const { return topo_->name; }
  const std::vector<Block>& blocks() const { return topo_->blocks; }
  const std::vector<School>& schools() const { return topo_->schools; }
  std::size_t num_blocks() const { return topo_->blocks.size(); }
  std::size_t num_schools() const { return topo_->schools.size(); }
  const TravelTimeMatrix& travel() const { return topo_->travel; }
  const Assignment& current() const { return topo_->current; }
  const CloserNeighborIndex& closer() const { return topo_->closer; }
  const std::vector<BlockGroupVars>& ses_vars() const { return topo_->ses_vars; }
  const CountsMatrix& counts() const { return *counts_; }

  // Block forced to its current school in every solve.
  bool pinned(BlockIndex b) const { return topo_->pinned[b] != 0; }
  std::size_t num_pinned() const;
  bool is_root_of(BlockIndex b, SchoolIndex s) const {
    return topo_->schools[s].root == b;
  }

  std::optional<BlockIndex> find_block(std::string_view id) const;
  std::optional<SchoolIndex> find_school(std::string_view id) const;

  // Same topology, different counts (e.g. SES counts).
  District with_counts(CountsMatrix counts) const;

 private:
  struct Topology {
    std::string name;
    std::vector<Block> blocks;
    std::vector<School> schools;
    TravelTimeMatrix travel;
    Assignment current;
    CloserNeighborIndex closer;
    std::vector<char> pinned;
    std::vector<BlockGroupVars> ses_vars;
  };
  std::shared_ptr<const Topology> topo_;
  std::shared_ptr<const CountsMatrix> counts_;
};

// Breadth-first hop distance from root(school); unreachable blocks get
// CloserNeighborIndex::kUnreachable.
std::vector<int> hop_distances(const std::vector<Block>& blocks,
                               BlockIndex root);
std::vector<int> hop_distances(const District& district, SchoolIndex school);

CloserNeighborIndex build_closer_neighbors(const std::vector<Block>& blocks,
                                           const std::vector<School>& schools);

// Great-circle distance in kilometres.
double haversine_km(LatLon a, LatLon b);
inline constexpr double kFallbackSpeedKmh = 30.0;

struct DistrictPaths {
  std::string blocks;
  std::string adjacency;
  std::string schools;
  std::optional<std::string> travel;
  std::string assignment;
  std::optional<std::string> ses;
};

District load_district(const DistrictPaths& paths);

// Same as load_district, from in-memory CSV text (used by the upload
// endpoint). Empty optional strings mean "not supplied".
struct DistrictCsvText {
  std::string blocks;
  std::string adjacency;
  std::string schools;
  std::string travel;
  std::string assignment;
  std::string ses;
};
District parse_district(const DistrictCsvText& text, std::string name);

// Writes blocks.csv, adjacency.csv, schools.csv, travel.csv,
// assignment.csv (and ses.csv when SES variables exist) into `dir`.
void write_district(const District& district, const std::string& dir);

void write_assignment_csv(const District& district, const Assignment& a,
                          const std::string& path);
Assignment read_assignment_csv(const District& district,
                               const std::string& path);

struct SyntheticParams {
  int rows = 10;
  int cols = 10;
  int n_schools = 4;
  double segregation_strength = 0.5;
  double mean_block_pop = 20.0;
  std::uint64_t seed = 1;
};

// Rook-adjacency grid with farthest-point school roots, a Voronoi-by-hops
// current assignment and a left-to-right gradient in the White share whose
// amplitude scales with segregation_strength. Pure function of `params`.
District generate_synthetic(const SyntheticParams& params);

}  // namespace dprezone

#endif  // DPREZONE_DISTRICT_HPP_
