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

#include "dprezone/district.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <queue>
#include <set>
#include <sstream>
#include <unordered_map>

#include "dprezone/csv.hpp"
#include "dprezone/error.hpp"
#include "dprezone/rng.hpp"

namespace dprezone {

std::string_view group_label(Group g) {
  switch (g) {
    case Group::kWhite: return "white";
    case Group::kBlack: return "black";
    case Group::kAsian: return "asian";
    case Group::kNative: return "native";
    case Group::kHispanic: return "hispanic";
    case Group::kLowSes: return "low_ses";
    case Group::kHighSes: return "high_ses";
  }
  return "unknown";
}

GroupKind group_kind(Group g) {
  return (g == Group::kLowSes || g == Group::kHighSes) ? GroupKind::kSes
                                                       : GroupKind::kRacial;
}

Group parse_group(std::string_view label) {
  for (Group g : {Group::kWhite, Group::kBlack, Group::kAsian, Group::kNative,
                  Group::kHispanic, Group::kLowSes, Group::kHighSes}) {
    if (group_label(g) == label) return g;
  }
  throw ValidationError("unknown group '" + std::string(label) + "'");
}

// ---------------------------------------------------------------------------
// CountsMatrix

CountsMatrix::CountsMatrix(std::vector<Group> groups, std::size_t n_blocks)
    : groups_(std::move(groups)),
      counts_(groups_.size() * n_blocks, 0),
      totals_(n_blocks, 0) {
  std::set<Group> seen(groups_.begin(), groups_.end());
  if (seen.size() != groups_.size()) {
    throw ValidationError("group labels must be unique");
  }
}

std::optional<std::size_t> CountsMatrix::group_index(Group g) const {
  for (std::size_t i = 0; i < groups_.size(); ++i) {
    if (groups_[i] == g) return i;
  }
  return std::nullopt;
}

std::int64_t CountsMatrix::group_total(std::size_t group) const {
  std::int64_t sum = 0;
  for (std::size_t b = 0; b < blocks(); ++b) sum += at(group, b);
  return sum;
}

std::int64_t CountsMatrix::district_total() const {
  std::int64_t sum = 0;
  for (auto t : totals_) sum += t;
  return sum;
}

void CountsMatrix::validate() const {
  for (std::size_t b = 0; b < blocks(); ++b) {
    std::int64_t sum = 0;
    for (std::size_t g = 0; g < groups_.size(); ++g) {
      if (at(g, b) < 0) {
        throw ValidationError("negative count for group " +
                              std::string(group_label(groups_[g])) +
                              " in block #" + std::to_string(b));
      }
      sum += at(g, b);
    }
    if (totals_[b] < 0) {
      throw ValidationError("negative total in block #" + std::to_string(b));
    }
    if (!privatized_ && totals_[b] < sum) {
      throw ValidationError("block #" + std::to_string(b) + ": total " +
                            std::to_string(totals_[b]) +
                            " is below the sum of group counts " +
                            std::to_string(sum));
    }
  }
}

// ---------------------------------------------------------------------------
// Graph distances

std::vector<int> hop_distances(const std::vector<Block>& blocks,
                               BlockIndex root) {
  std::vector<int> dist(blocks.size(), CloserNeighborIndex::kUnreachable);
  std::queue<BlockIndex> frontier;
  dist[root] = 0;
  frontier.push(root);
  while (!frontier.empty()) {
    const BlockIndex b = frontier.front();
    frontier.pop();
    for (BlockIndex n : blocks[b].neighbors) {
      if (dist[n] == CloserNeighborIndex::kUnreachable) {
        dist[n] = dist[b] + 1;
        frontier.push(n);
      }
    }
  }
  return dist;
}

std::vector<int> hop_distances(const District& district, SchoolIndex school) {
  return hop_distances(district.blocks(), district.schools()[school].root);
}

CloserNeighborIndex build_closer_neighbors(const std::vector<Block>& blocks,
                                           const std::vector<School>& schools) {
  CloserNeighborIndex index(blocks.size(), schools.size());
  for (SchoolIndex s = 0; s < static_cast<SchoolIndex>(schools.size()); ++s) {
    const auto dist = hop_distances(blocks, schools[s].root);
    for (BlockIndex b = 0; b < static_cast<BlockIndex>(blocks.size()); ++b) {
      index.distance(b, s) = dist[b];
    }
  }
  for (SchoolIndex s = 0; s < static_cast<SchoolIndex>(schools.size()); ++s) {
    for (BlockIndex b = 0; b < static_cast<BlockIndex>(blocks.size()); ++b) {
      auto& members = index.closer(b, s);
      for (BlockIndex n : blocks[b].neighbors) {
        if (index.is_closer(n, b, s)) members.push_back(n);
      }
    }
  }
  return index;
}

double haversine_km(LatLon a, LatLon b) {
  constexpr double kEarthRadiusKm = 6371.0088;
  constexpr double kRad = std::numbers::pi / 180.0;
  const double dlat = (b.lat - a.lat) * kRad;
  const double dlon = (b.lon - a.lon) * kRad;
  const double h = std::sin(dlat / 2) * std::sin(dlat / 2) +
                   std::cos(a.lat * kRad) * std::cos(b.lat * kRad) *
                       std::sin(dlon / 2) * std::sin(dlon / 2);
  return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(h)));
}

// ---------------------------------------------------------------------------
// District

District District::build(DistrictData data) {
  const std::size_t nb = data.blocks.size();
  const std::size_t ns = data.schools.size();
  if (nb == 0) throw ValidationError("district has no blocks");
  if (ns == 0) throw ValidationError("district has no schools");

  for (std::size_t i = 1; i < nb; ++i) {
    if (data.blocks[i - 1].id == data.blocks[i].id) {
      throw ValidationError("duplicate block id '" + data.blocks[i].id + "'");
    }
    if (data.blocks[i - 1].id > data.blocks[i].id) {
      throw InternalError("blocks must be sorted by id before build");
    }
  }
  for (std::size_t i = 1; i < ns; ++i) {
    if (data.schools[i - 1].id == data.schools[i].id) {
      throw ValidationError("duplicate school id '" + data.schools[i].id + "'");
    }
    if (data.schools[i - 1].id > data.schools[i].id) {
      throw InternalError("schools must be sorted by id before build");
    }
  }

  // Undirected normalization: symmetric, deduplicated, sorted.
  std::vector<std::set<BlockIndex>> adj(nb);
  for (BlockIndex b = 0; b < static_cast<BlockIndex>(nb); ++b) {
    for (BlockIndex n : data.blocks[b].neighbors) {
      if (n < 0 || n >= static_cast<BlockIndex>(nb)) {
        throw ValidationError("block '" + data.blocks[b].id +
                              "' has an out-of-range neighbor");
      }
      if (n == b) {
        throw ValidationError("block '" + data.blocks[b].id +
                              "' lists itself as a neighbor");
      }
      adj[b].insert(n);
      adj[n].insert(b);
    }
  }
  for (std::size_t b = 0; b < nb; ++b) {
    data.blocks[b].neighbors.assign(adj[b].begin(), adj[b].end());
  }

  for (const auto& s : data.schools) {
    if (s.root < 0 || s.root >= static_cast<BlockIndex>(nb)) {
      throw ValidationError("school '" + s.id + "' has an unknown root block");
    }
  }

  if (data.counts.blocks() != nb) {
    throw ValidationError("counts matrix does not cover every block");
  }
  data.counts.validate();

  if (data.current.size() != nb) {
    throw ValidationError("assignment not total");
  }
  for (std::size_t b = 0; b < nb; ++b) {
    const SchoolIndex s = data.current.school_of[b];
    if (s < 0 || s >= static_cast<SchoolIndex>(ns)) {
      throw ValidationError("assignment for block '" + data.blocks[b].id +
                            "' references an unknown school");
    }
  }

  TravelTimeMatrix travel;
  if (data.travel) {
    travel = std::move(*data.travel);
    if (travel.schools() != ns) {
      throw ValidationError("travel matrix has the wrong number of schools");
    }
    for (BlockIndex b = 0; b < static_cast<BlockIndex>(nb); ++b) {
      for (SchoolIndex s = 0; s < static_cast<SchoolIndex>(ns); ++s) {
        const double t = travel.at(b, s);
        if (!std::isfinite(t) || t < 0.0) {
          throw ValidationError("travel time for block '" + data.blocks[b].id +
                                "' and school '" + data.schools[s].id +
                                "' must be finite and non-negative");
        }
      }
    }
  } else {
    travel = TravelTimeMatrix(nb, ns);
    for (BlockIndex b = 0; b < static_cast<BlockIndex>(nb); ++b) {
      for (SchoolIndex s = 0; s < static_cast<SchoolIndex>(ns); ++s) {
        const auto& from = data.blocks[b].centroid;
        const auto& to = data.blocks[data.schools[s].root].centroid;
        if (!from || !to) {
          throw ValidationError(
              "no travel times supplied and block '" +
              data.blocks[from ? data.schools[s].root : b].id +
              "' has no centroid");
        }
        travel.at(b, s) = haversine_km(*from, *to) / kFallbackSpeedKmh * 60.0;
      }
    }
  }

  CloserNeighborIndex closer = build_closer_neighbors(data.blocks, data.schools);

  for (BlockIndex b = 0; b < static_cast<BlockIndex>(nb); ++b) {
    bool reachable = false;
    for (SchoolIndex s = 0; s < static_cast<SchoolIndex>(ns) && !reachable; ++s) {
      reachable = closer.distance(b, s) != CloserNeighborIndex::kUnreachable;
    }
    if (!reachable) {
      throw ValidationError("block '" + data.blocks[b].id +
                            "' cannot reach any school root");
    }
  }

  // Pin blocks whose status-quo assignment breaks contiguity.
  std::vector<char> pinned(nb, 0);
  for (BlockIndex b = 0; b < static_cast<BlockIndex>(nb); ++b) {
    const SchoolIndex s = data.current.school_of[b];
    if (data.schools[s].root == b) continue;
    bool supported = false;
    for (BlockIndex n : closer.closer(b, s)) {
      if (data.current.school_of[n] == s) {
        supported = true;
        break;
      }
    }
    if (!supported) pinned[b] = 1;
  }

  std::set<std::string> bg_ids;
  for (const auto& v : data.ses_vars) {
    if (!bg_ids.insert(v.block_group_id).second) {
      throw ValidationError("duplicate block group '" + v.block_group_id +
                            "' in SES variables");
    }
  }

  auto topo = std::make_shared<Topology>();
  topo->name = std::move(data.name);
  topo->blocks = std::move(data.blocks);
  topo->schools = std::move(data.schools);
  topo->travel = std::move(travel);
  topo->current = std::move(data.current);
  topo->closer = std::move(closer);
  topo->pinned = std::move(pinned);
  topo->ses_vars = std::move(data.ses_vars);

  District d;
  d.topo_ = std::move(topo);
  d.counts_ = std::make_shared<const CountsMatrix>(std::move(data.counts));
  return d;
}

std::size_t District::num_pinned() const {
  return static_cast<std::size_t>(
      std::count(topo_->pinned.begin(), topo_->pinned.end(), 1));
}

std::optional<BlockIndex> District::find_block(std::string_view id) const {
  const auto& blocks = topo_->blocks;
  auto it = std::lower_bound(
      blocks.begin(), blocks.end(), id,
      [](const Block& b, std::string_view key) { return b.id < key; });
  if (it == blocks.end() || it->id != id) return std::nullopt;
  return static_cast<BlockIndex>(it - blocks.begin());
}

std::optional<SchoolIndex> District::find_school(std::string_view id) const {
  const auto& schools = topo_->schools;
  auto it = std::lower_bound(
      schools.begin(), schools.end(), id,
      [](const School& s, std::string_view key) { return s.id < key; });
  if (it == schools.end() || it->id != id) return std::nullopt;
  return static_cast<SchoolIndex>(it - schools.begin());
}

District District::with_counts(CountsMatrix counts) const {
  if (counts.blocks() != num_blocks()) {
    throw ValidationError("counts matrix does not cover every block");
  }
  counts.validate();
  District d = *this;
  d.counts_ = std::make_shared<const CountsMatrix>(std::move(counts));
  return d;
}

// ---------------------------------------------------------------------------
// CSV ingestion

namespace {

constexpr std::string_view kCountColumns[] = {"n_white", "n_black", "n_asian",
                                              "n_native", "n_hispanic"};

struct BlockRow {
  Block block;
  std::vector<std::int64_t> counts;
  std::int64_t total = 0;
};

std::vector<BlockGroupVars> parse_ses_table(const csv::Table& t) {
  const auto c_id = t.column("block_group_id");
  const std::size_t cols[] = {t.column("pct_dual_parent"),
                              t.column("pct_bachelors"),
                              t.column("pct_non_english"),
                              t.column("pct_owner_occupied")};
  const auto c_income = t.column("median_family_income");
  std::vector<BlockGroupVars> out;
  for (std::size_t r = 0; r < t.rows(); ++r) {
    BlockGroupVars v;
    v.block_group_id = t.text(r, c_id);
    double* fields[] = {&v.pct_dual_parent, &v.pct_bachelors,
                        &v.pct_non_english, &v.pct_owner_occupied};
    for (int i = 0; i < 4; ++i) {
      *fields[i] = t.number(r, cols[i]);
      if (*fields[i] < 0.0 || *fields[i] > 1.0) {
        throw ValidationError(t.where(r, cols[i]) +
                              ": fraction must lie in [0, 1]");
      }
    }
    v.median_family_income = t.number(r, c_income);
    if (v.median_family_income < 0.0) {
      throw ValidationError(t.where(r, c_income) +
                            ": income must be non-negative");
    }
    out.push_back(std::move(v));
  }
  return out;
}

District assemble(const csv::Table& blocks_t, const csv::Table& adj_t,
                  const csv::Table& schools_t, const csv::Table* travel_t,
                  const csv::Table& assign_t, const csv::Table* ses_t,
                  std::string name) {
  // Blocks.
  const auto c_id = blocks_t.column("block_id");
  const auto c_bg = blocks_t.column("block_group_id");
  const auto c_lat = blocks_t.column("lat");
  const auto c_lon = blocks_t.column("lon");
  std::vector<std::size_t> c_counts;
  for (auto col : kCountColumns) c_counts.push_back(blocks_t.column(col));
  const auto c_total = blocks_t.column("n_total");

  std::vector<BlockRow> rows;
  for (std::size_t r = 0; r < blocks_t.rows(); ++r) {
    BlockRow row;
    row.block.id = blocks_t.text(r, c_id);
    row.block.block_group_id = blocks_t.cell(r, c_bg);
    const bool has_lat = !blocks_t.empty(r, c_lat);
    const bool has_lon = !blocks_t.empty(r, c_lon);
    if (has_lat != has_lon) {
      throw ValidationError(blocks_t.where(r, has_lat ? c_lon : c_lat) +
                            ": lat and lon must be given together");
    }
    if (has_lat) {
      row.block.centroid =
          LatLon{blocks_t.number(r, c_lat), blocks_t.number(r, c_lon)};
    }
    for (auto c : c_counts) {
      const auto v = blocks_t.integer(r, c);
      if (v < 0) {
        throw ValidationError(blocks_t.where(r, c) + ": negative count");
      }
      row.counts.push_back(v);
    }
    row.total = blocks_t.integer(r, c_total);
    if (row.total < 0) {
      throw ValidationError(blocks_t.where(r, c_total) + ": negative count");
    }
    rows.push_back(std::move(row));
  }
  std::sort(rows.begin(), rows.end(), [](const BlockRow& a, const BlockRow& b) {
    return a.block.id < b.block.id;
  });
  std::unordered_map<std::string, BlockIndex> block_of;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!block_of.emplace(rows[i].block.id, static_cast<BlockIndex>(i)).second) {
      throw ValidationError(blocks_t.source() + ": duplicate block id '" +
                            rows[i].block.id + "'");
    }
  }
  auto lookup_block = [&](const csv::Table& t, std::size_t r, std::size_t c) {
    auto it = block_of.find(t.text(r, c));
    if (it == block_of.end()) {
      throw ValidationError(t.where(r, c) + ": unknown block '" + t.cell(r, c) +
                            "'");
    }
    return it->second;
  };

  DistrictData data;
  data.name = std::move(name);
  data.counts = CountsMatrix(racial_groups(), rows.size());
  for (std::size_t b = 0; b < rows.size(); ++b) {
    for (std::size_t g = 0; g < rows[b].counts.size(); ++g) {
      data.counts.at(g, b) = rows[b].counts[g];
    }
    data.counts.total(b) = rows[b].total;
    data.blocks.push_back(std::move(rows[b].block));
  }
  try {
    data.counts.validate();
  } catch (const ValidationError& e) {
    throw ValidationError(blocks_t.source() + ": " + e.what());
  }

  // Adjacency.
  const auto c_a = adj_t.column("block_id_a");
  const auto c_b = adj_t.column("block_id_b");
  for (std::size_t r = 0; r < adj_t.rows(); ++r) {
    const BlockIndex a = lookup_block(adj_t, r, c_a);
    const BlockIndex b = lookup_block(adj_t, r, c_b);
    if (a == b) {
      throw ValidationError(adj_t.where(r, c_b) + ": self-adjacency");
    }
    data.blocks[a].neighbors.push_back(b);
  }

  // Schools.
  const auto c_sid = schools_t.column("school_id");
  const auto c_name = schools_t.column("name");
  const auto c_root = schools_t.column("root_block_id");
  for (std::size_t r = 0; r < schools_t.rows(); ++r) {
    School s;
    s.id = schools_t.text(r, c_sid);
    s.name = schools_t.cell(r, c_name);
    s.root = lookup_block(schools_t, r, c_root);
    data.schools.push_back(std::move(s));
  }
  std::sort(data.schools.begin(), data.schools.end(),
            [](const School& a, const School& b) { return a.id < b.id; });
  std::unordered_map<std::string, SchoolIndex> school_of;
  for (std::size_t i = 0; i < data.schools.size(); ++i) {
    if (!school_of.emplace(data.schools[i].id, static_cast<SchoolIndex>(i))
             .second) {
      throw ValidationError(schools_t.source() + ": duplicate school id '" +
                            data.schools[i].id + "'");
    }
  }
  auto lookup_school = [&](const csv::Table& t, std::size_t r, std::size_t c) {
    auto it = school_of.find(t.text(r, c));
    if (it == school_of.end()) {
      throw ValidationError(t.where(r, c) + ": unknown school '" +
                            t.cell(r, c) + "'");
    }
    return it->second;
  };

  // Travel.
  if (travel_t) {
    TravelTimeMatrix travel(data.blocks.size(), data.schools.size());
    std::vector<char> seen(data.blocks.size() * data.schools.size(), 0);
    const auto c_tb = travel_t->column("block_id");
    const auto c_ts = travel_t->column("school_id");
    const auto c_tm = travel_t->column("minutes");
    for (std::size_t r = 0; r < travel_t->rows(); ++r) {
      const BlockIndex b = lookup_block(*travel_t, r, c_tb);
      const SchoolIndex s = lookup_school(*travel_t, r, c_ts);
      const double m = travel_t->number(r, c_tm);
      if (m < 0.0) {
        throw ValidationError(travel_t->where(r, c_tm) +
                              ": travel time must be non-negative");
      }
      auto& flag = seen[static_cast<std::size_t>(b) * data.schools.size() + s];
      if (flag) {
        throw ValidationError(travel_t->where(r, c_tb) +
                              ": duplicate travel entry");
      }
      flag = 1;
      travel.at(b, s) = m;
    }
    for (std::size_t i = 0; i < seen.size(); ++i) {
      if (!seen[i]) {
        throw ValidationError(
            travel_t->source() + ": missing travel time for block '" +
            data.blocks[i / data.schools.size()].id + "' and school '" +
            data.schools[i % data.schools.size()].id + "'");
      }
    }
    data.travel = std::move(travel);
  }

  // Current assignment.
  data.current.school_of.assign(data.blocks.size(), -1);
  const auto c_ab = assign_t.column("block_id");
  const auto c_as = assign_t.column("school_id");
  for (std::size_t r = 0; r < assign_t.rows(); ++r) {
    const BlockIndex b = lookup_block(assign_t, r, c_ab);
    const SchoolIndex s = lookup_school(assign_t, r, c_as);
    if (data.current.school_of[b] != -1) {
      throw ValidationError(assign_t.where(r, c_ab) +
                            ": block assigned more than once");
    }
    data.current.school_of[b] = s;
  }
  for (std::size_t b = 0; b < data.blocks.size(); ++b) {
    if (data.current.school_of[b] == -1) {
      throw ValidationError("assignment not total: block '" +
                            data.blocks[b].id + "' has no school");
    }
  }

  if (ses_t) data.ses_vars = parse_ses_table(*ses_t);

  return District::build(std::move(data));
}

}  // namespace

District load_district(const DistrictPaths& paths) {
  const auto blocks = csv::Table::read_file(paths.blocks);
  const auto adj = csv::Table::read_file(paths.adjacency);
  const auto schools = csv::Table::read_file(paths.schools);
  const auto assign = csv::Table::read_file(paths.assignment);
  std::optional<csv::Table> travel, ses;
  if (paths.travel) travel = csv::Table::read_file(*paths.travel);
  if (paths.ses) ses = csv::Table::read_file(*paths.ses);
  std::string name = std::filesystem::path(paths.blocks).parent_path().filename();
  return assemble(blocks, adj, schools, travel ? &*travel : nullptr, assign,
                  ses ? &*ses : nullptr, name.empty() ? "district" : name);
}

District parse_district(const DistrictCsvText& text, std::string name) {
  const auto blocks = csv::Table::parse(text.blocks, "blocks.csv");
  const auto adj = csv::Table::parse(text.adjacency, "adjacency.csv");
  const auto schools = csv::Table::parse(text.schools, "schools.csv");
  const auto assign = csv::Table::parse(text.assignment, "assignment.csv");
  std::optional<csv::Table> travel, ses;
  if (!text.travel.empty()) travel = csv::Table::parse(text.travel, "travel.csv");
  if (!text.ses.empty()) ses = csv::Table::parse(text.ses, "ses.csv");
  return assemble(blocks, adj, schools, travel ? &*travel : nullptr, assign,
                  ses ? &*ses : nullptr, std::move(name));
}

// ---------------------------------------------------------------------------
// CSV output

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InternalError("cannot write " + path);
  return out;
}

std::string format_double(double v) {
  std::ostringstream ss;
  ss.precision(17);
  ss << v;
  return ss.str();
}

}  // namespace

void write_assignment_csv(const District& district, const Assignment& a,
                          const std::string& path) {
  auto out = open_out(path);
  csv::write_row(out, {"block_id", "school_id"});
  for (std::size_t b = 0; b < district.num_blocks(); ++b) {
    csv::write_row(out, {district.blocks()[b].id,
                         district.schools()[a.school_of[b]].id});
  }
  if (!out) throw InternalError("write failed: " + path);
}

Assignment read_assignment_csv(const District& district,
                               const std::string& path) {
  const auto t = csv::Table::read_file(path);
  const auto c_b = t.column("block_id");
  const auto c_s = t.column("school_id");
  Assignment a;
  a.school_of.assign(district.num_blocks(), -1);
  for (std::size_t r = 0; r < t.rows(); ++r) {
    const auto b = district.find_block(t.text(r, c_b));
    const auto s = district.find_school(t.text(r, c_s));
    if (!b) throw ValidationError(t.where(r, c_b) + ": unknown block");
    if (!s) throw ValidationError(t.where(r, c_s) + ": unknown school");
    a.school_of[*b] = *s;
  }
  for (auto s : a.school_of) {
    if (s < 0) throw ValidationError(path + ": assignment not total");
  }
  return a;
}

void write_district(const District& district, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const auto& blocks = district.blocks();
  const auto& counts = district.counts();
  {
    auto out = open_out(dir + "/blocks.csv");
    csv::write_row(out, {"block_id", "block_group_id", "lat", "lon", "n_white",
                         "n_black", "n_asian", "n_native", "n_hispanic",
                         "n_total"});
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      std::vector<std::string> row = {blocks[b].id, blocks[b].block_group_id};
      if (blocks[b].centroid) {
        row.push_back(format_double(blocks[b].centroid->lat));
        row.push_back(format_double(blocks[b].centroid->lon));
      } else {
        row.emplace_back();
        row.emplace_back();
      }
      for (Group g : racial_groups()) {
        const auto gi = counts.group_index(g);
        row.push_back(std::to_string(gi ? counts.at(*gi, b) : 0));
      }
      row.push_back(std::to_string(counts.total(b)));
      csv::write_row(out, row);
    }
  }
  {
    auto out = open_out(dir + "/adjacency.csv");
    csv::write_row(out, {"block_id_a", "block_id_b"});
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      for (BlockIndex n : blocks[b].neighbors) {
        if (n > static_cast<BlockIndex>(b)) {
          csv::write_row(out, {blocks[b].id, blocks[n].id});
        }
      }
    }
  }
  {
    auto out = open_out(dir + "/schools.csv");
    csv::write_row(out, {"school_id", "name", "root_block_id"});
    for (const auto& s : district.schools()) {
      csv::write_row(out, {s.id, s.name, blocks[s.root].id});
    }
  }
  {
    auto out = open_out(dir + "/travel.csv");
    csv::write_row(out, {"block_id", "school_id", "minutes"});
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      for (std::size_t s = 0; s < district.num_schools(); ++s) {
        csv::write_row(out, {blocks[b].id, district.schools()[s].id,
                             format_double(district.travel().at(
                                 static_cast<BlockIndex>(b),
                                 static_cast<SchoolIndex>(s)))});
      }
    }
  }
  write_assignment_csv(district, district.current(), dir + "/assignment.csv");
  if (!district.ses_vars().empty()) {
    auto out = open_out(dir + "/ses.csv");
    csv::write_row(out, {"block_group_id", "pct_dual_parent", "pct_bachelors",
                         "pct_non_english", "pct_owner_occupied",
                         "median_family_income"});
    for (const auto& v : district.ses_vars()) {
      csv::write_row(out, {v.block_group_id, format_double(v.pct_dual_parent),
                           format_double(v.pct_bachelors),
                           format_double(v.pct_non_english),
                           format_double(v.pct_owner_occupied),
                           format_double(v.median_family_income)});
    }
  }
}

// ---------------------------------------------------------------------------
// Synthetic districts

namespace {

std::string padded(const std::string& prefix, std::size_t value,
                   std::size_t width) {
  std::string digits = std::to_string(value);
  if (digits.size() < width) digits.insert(0, width - digits.size(), '0');
  return prefix + digits;
}

std::size_t digits_for(std::size_t n) {
  return std::to_string(n > 0 ? n - 1 : 0).size();
}

}  // namespace

District generate_synthetic(const SyntheticParams& p) {
  if (p.rows < 1 || p.cols < 1) {
    throw ValidationError("rows and cols must be positive");
  }
  const std::size_t nb = static_cast<std::size_t>(p.rows) * p.cols;
  if (p.n_schools < 1 || static_cast<std::size_t>(p.n_schools) > nb) {
    throw ValidationError("need 1 <= schools <= rows*cols");
  }
  if (!(p.segregation_strength >= 0.0 && p.segregation_strength <= 1.0)) {
    throw ValidationError("segregation_strength must lie in [0, 1]");
  }
  if (!(p.mean_block_pop >= 1.0) || !std::isfinite(p.mean_block_pop)) {
    throw ValidationError("mean_block_pop must be at least 1");
  }

  Rng rng(p.seed);
  DistrictData data;
  data.name = "synthetic_" + std::to_string(p.rows) + "x" +
              std::to_string(p.cols) + "_s" + std::to_string(p.seed);

  const std::size_t width = std::max<std::size_t>(4, digits_for(nb));
  const double lat0 = 33.75;
  const double lon0 = -84.39;
  const double dlat = 0.0045;  // ~500 m
  const double dlon = 0.0054;  // ~500 m at this latitude
  for (int r = 0; r < p.rows; ++r) {
    for (int c = 0; c < p.cols; ++c) {
      Block b;
      b.id = padded("b", static_cast<std::size_t>(r) * p.cols + c, width);
      b.block_group_id = padded(
          "bg", static_cast<std::size_t>(r / 2) * ((p.cols + 1) / 2) + c / 2,
          width);
      b.centroid = LatLon{lat0 - r * dlat, lon0 + c * dlon};
      const BlockIndex self = r * p.cols + c;
      if (c + 1 < p.cols) b.neighbors.push_back(self + 1);
      if (r + 1 < p.rows) b.neighbors.push_back(self + p.cols);
      data.blocks.push_back(std::move(b));
    }
  }
  // Symmetrize here so distances can be computed before build().
  for (BlockIndex b = 0; b < static_cast<BlockIndex>(nb); ++b) {
    for (BlockIndex n : std::vector<BlockIndex>(data.blocks[b].neighbors)) {
      if (n > b) data.blocks[n].neighbors.push_back(b);
    }
  }
  for (auto& b : data.blocks) std::sort(b.neighbors.begin(), b.neighbors.end());

  // Farthest-point root placement.
  std::vector<BlockIndex> roots = {static_cast<BlockIndex>(rng.below(nb))};
  std::vector<int> nearest = hop_distances(data.blocks, roots[0]);
  while (roots.size() < static_cast<std::size_t>(p.n_schools)) {
    BlockIndex best = 0;
    for (BlockIndex b = 1; b < static_cast<BlockIndex>(nb); ++b) {
      if (nearest[b] > nearest[best]) best = b;
    }
    roots.push_back(best);
    const auto d = hop_distances(data.blocks, best);
    for (std::size_t b = 0; b < nb; ++b) nearest[b] = std::min(nearest[b], d[b]);
  }
  std::sort(roots.begin(), roots.end());
  const std::size_t swidth = std::max<std::size_t>(2, digits_for(roots.size()));
  for (std::size_t s = 0; s < roots.size(); ++s) {
    data.schools.push_back(School{padded("s", s + 1, swidth),
                                  "School " + std::to_string(s + 1), roots[s]});
  }

  // Voronoi-by-hops status quo; ties go to the lower school index.
  std::vector<std::vector<int>> dist;
  for (auto root : roots) dist.push_back(hop_distances(data.blocks, root));
  data.current.school_of.assign(nb, 0);
  for (std::size_t b = 0; b < nb; ++b) {
    for (std::size_t s = 1; s < roots.size(); ++s) {
      if (dist[s][b] < dist[data.current.school_of[b]][b]) {
        data.current.school_of[b] = static_cast<SchoolIndex>(s);
      }
    }
  }

  // Counts: White share follows a column gradient; non-White students are
  // split with a fixed composition.
  constexpr double kNonWhiteShares[] = {0.55, 0.08, 0.02, 0.35};
  data.counts = CountsMatrix(racial_groups(), nb);
  std::vector<double> white_share(nb);
  for (int r = 0; r < p.rows; ++r) {
    for (int c = 0; c < p.cols; ++c) {
      const std::size_t b = static_cast<std::size_t>(r) * p.cols + c;
      const double g = p.cols > 1 ? 2.0 * c / (p.cols - 1) - 1.0 : 0.0;
      white_share[b] = 0.5 + 0.45 * p.segregation_strength * g;
      const std::int64_t total = rng.poisson(p.mean_block_pop);
      const std::int64_t white = rng.binomial(total, white_share[b]);
      std::int64_t rest = total - white;
      double remaining_share = 1.0;
      data.counts.at(0, b) = white;
      for (std::size_t k = 0; k < 4; ++k) {
        const std::int64_t n =
            k == 3 ? rest : rng.binomial(rest, kNonWhiteShares[k] / remaining_share);
        remaining_share -= kNonWhiteShares[k];
        rest -= n;
        data.counts.at(k + 1, b) = n;
      }
      data.counts.total(b) = total;
    }
  }

  // Block-group SES variables loosely tracking the White share.
  std::map<std::string, std::pair<double, int>> bg_share;
  for (std::size_t b = 0; b < nb; ++b) {
    auto& acc = bg_share[data.blocks[b].block_group_id];
    acc.first += white_share[b];
    acc.second += 1;
  }
  auto clamp01 = [](double v) { return std::clamp(v, 0.0, 1.0); };
  for (const auto& [id, acc] : bg_share) {
    const double share = acc.first / acc.second;
    auto jitter = [&](double scale) { return (rng.uniform() - 0.5) * scale; };
    BlockGroupVars v;
    v.block_group_id = id;
    v.pct_dual_parent = clamp01(0.35 + 0.4 * share + jitter(0.2));
    v.pct_bachelors = clamp01(0.15 + 0.5 * share + jitter(0.2));
    v.pct_non_english = clamp01(0.35 - 0.3 * share + jitter(0.1));
    v.pct_owner_occupied = clamp01(0.3 + 0.5 * share + jitter(0.2));
    v.median_family_income = std::max(0.0, 30000.0 + 70000.0 * share +
                                               jitter(20000.0));
    data.ses_vars.push_back(std::move(v));
  }

  return District::build(std::move(data));
}

}  // namespace dprezone
