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

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "dprezone/csv.hpp"
#include "dprezone/district.hpp"
#include "dprezone/error.hpp"
#include "dprezone/metrics.hpp"
#include "test_support.hpp"

namespace dprezone {
namespace {

const char* kBlocks3 =
    "block_id,block_group_id,lat,lon,n_white,n_black,n_asian,n_native,"
    "n_hispanic,n_total\n"
    "b1,g1,33.70,-84.40,5,1,0,0,0,6\n"
    "b2,g1,33.70,-84.39,2,3,0,0,1,6\n"
    "b3,g2,33.70,-84.38,0,4,0,0,0,5\n";

DistrictCsvText path3() {
  DistrictCsvText t;
  t.blocks = kBlocks3;
  t.adjacency = "block_id_a,block_id_b\nb1,b2\nb2,b3\n";
  t.schools = "school_id,name,root_block_id\ns1,North,b1\n";
  t.assignment = "block_id,school_id\nb1,s1\nb2,s1\nb3,s1\n";
  return t;
}

std::string error_of(const DistrictCsvText& t) {
  try {
    parse_district(t, "x");
  } catch (const ValidationError& e) {
    return e.what();
  }
  return "";
}

TEST(LoadDistrict, PathGraphHopDistances) {
  const District d = parse_district(path3(), "path");
  ASSERT_EQ(d.num_blocks(), 3u);
  EXPECT_EQ(d.closer().distance(0, 0), 0);
  EXPECT_EQ(d.closer().distance(1, 0), 1);
  EXPECT_EQ(d.closer().distance(2, 0), 2);
  EXPECT_EQ(hop_distances(d, 0), (std::vector<int>{0, 1, 2}));
}

TEST(LoadDistrict, MissingAssignmentRowIsNotTotal) {
  auto t = path3();
  t.assignment = "block_id,school_id\nb1,s1\nb2,s1\n";
  EXPECT_NE(error_of(t).find("assignment not total"), std::string::npos);
}

TEST(LoadDistrict, OneSidedAdjacencyIsSymmetrized) {
  auto t = path3();
  t.adjacency = "block_id_a,block_id_b\nb1,b2\nb3,b2\nb2,b1\n";
  const District d = parse_district(t, "x");
  EXPECT_EQ(d.blocks()[0].neighbors, (std::vector<BlockIndex>{1}));
  EXPECT_EQ(d.blocks()[1].neighbors, (std::vector<BlockIndex>{0, 2}));
  EXPECT_EQ(d.blocks()[2].neighbors, (std::vector<BlockIndex>{1}));
  std::size_t half_edges = 0;
  for (const auto& b : d.blocks()) half_edges += b.neighbors.size();
  EXPECT_EQ(half_edges / 2, 2u);  // distinct unordered input pairs
}

TEST(LoadDistrict, RejectsBadInput) {
  {
    auto t = path3();
    t.blocks += "b1,g3,33.7,-84.3,1,0,0,0,0,1\n";
    EXPECT_NE(error_of(t).find("duplicate block id"), std::string::npos);
  }
  {
    auto t = path3();
    t.schools += "s1,Again,b2\n";
    EXPECT_NE(error_of(t).find("duplicate school id"), std::string::npos);
  }
  {
    auto t = path3();
    t.assignment = "block_id,school_id\nb1,s1\nb2,s9\nb3,s1\n";
    const std::string e = error_of(t);
    EXPECT_NE(e.find("assignment.csv:3"), std::string::npos) << e;
  }
  {
    auto t = path3();
    t.assignment = "block_id,school_id\nb1,s1\nb2,s1\nb3,s1\nb7,s1\n";
    EXPECT_NE(error_of(t).find("assignment.csv:5"), std::string::npos);
  }
  {
    auto t = path3();
    t.blocks = std::string(kBlocks3).replace(std::string(kBlocks3).find("0,4,0"), 5,
                                            "0,-4,0");
    EXPECT_FALSE(error_of(t).empty());
  }
  {
    auto t = path3();
    t.adjacency += "b2,b2\n";
    EXPECT_NE(error_of(t).find("self-adjacency"), std::string::npos);
  }
  {
    auto t = path3();
    t.blocks = "block_id,lat\nb1,1\n";
    EXPECT_NE(error_of(t).find("block_group_id"), std::string::npos);
  }
  {
    auto t = path3();
    t.blocks = std::string(kBlocks3).replace(std::string(kBlocks3).find("5,1,0,0,0,6"),
                                            11, "5,1,0,0,0,x");
    EXPECT_NE(error_of(t).find("blocks.csv:2"), std::string::npos);
  }
}

TEST(LoadDistrict, UnreachableBlockIsRejected) {
  auto t = path3();
  t.adjacency = "block_id_a,block_id_b\nb1,b2\n";
  EXPECT_NE(error_of(t).find("cannot reach"), std::string::npos);
}

TEST(LoadDistrict, TravelFallbackIsHaversineAtFixedSpeed) {
  const District d = parse_district(path3(), "x");
  const double km = haversine_km({33.70, -84.38}, {33.70, -84.40});
  EXPECT_NEAR(d.travel().at(2, 0), km / 30.0 * 60.0, 1e-12);
  EXPECT_EQ(d.travel().at(0, 0), 0.0);
  // One degree of latitude is about 111.2 km.
  EXPECT_NEAR(haversine_km({0, 0}, {1, 0}), 111.19, 0.01);
}

TEST(LoadDistrict, ExplicitTravelTable) {
  auto t = path3();
  t.travel = "block_id,school_id,minutes\nb1,s1,1\nb2,s1,2.5\nb3,s1,4\n";
  const District d = parse_district(t, "x");
  EXPECT_DOUBLE_EQ(d.travel().at(1, 0), 2.5);
  t.travel = "block_id,school_id,minutes\nb1,s1,1\nb2,s1,2.5\n";
  EXPECT_FALSE(error_of(t).empty());
}

TEST(HopDistances, DisconnectedBlockIsFlagged) {
  std::vector<Block> blocks(3);
  blocks[0].neighbors = {1};
  blocks[1].neighbors = {0};
  const auto dist = hop_distances(blocks, 0);
  EXPECT_EQ(dist[0], 0);
  EXPECT_EQ(dist[1], 1);
  EXPECT_EQ(dist[2], CloserNeighborIndex::kUnreachable);
}

TEST(CloserNeighbors, PathGraph) {
  const District d = parse_district(path3(), "x");
  EXPECT_TRUE(d.closer().closer(0, 0).empty());
  EXPECT_EQ(d.closer().closer(1, 0), (std::vector<BlockIndex>{0}));
  EXPECT_EQ(d.closer().closer(2, 0), (std::vector<BlockIndex>{1}));
}

TEST(CloserNeighbors, TwoByTwoGridDiagonalHasTwo) {
  // 0 1
  // 2 3, root at 0.
  std::vector<Block> blocks(4);
  blocks[0].neighbors = {1, 2};
  blocks[1].neighbors = {0, 3};
  blocks[2].neighbors = {0, 3};
  blocks[3].neighbors = {1, 2};
  const auto idx = build_closer_neighbors(blocks, {{"s", "s", 0}});
  EXPECT_EQ(idx.distance(3, 0), 2);
  EXPECT_EQ(idx.closer(3, 0), (std::vector<BlockIndex>{1, 2}));
  // Equal distance neighbors are not closer.
  EXPECT_EQ(idx.closer(1, 0), (std::vector<BlockIndex>{0}));
}

TEST(CloserNeighbors, InvariantsOnRandomInstances) {
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    const District d = testing::random_tiny(seed, 9, 3);
    for (BlockIndex b = 0; b < static_cast<BlockIndex>(d.num_blocks()); ++b) {
      for (SchoolIndex s = 0; s < static_cast<SchoolIndex>(d.num_schools()); ++s) {
        const int dist = d.closer().distance(b, s);
        EXPECT_EQ(dist == 0, d.is_root_of(b, s));
        if (dist > 0) EXPECT_FALSE(d.closer().closer(b, s).empty());
        for (BlockIndex c : d.closer().closer(b, s)) {
          const auto& nb = d.blocks()[b].neighbors;
          EXPECT_TRUE(std::binary_search(nb.begin(), nb.end(), c));
          EXPECT_LT(d.closer().distance(c, s), dist);
        }
      }
    }
  }
}

TEST(District, StatusQuoViolatingContiguityIsPinned) {
  // b3 assigned to s1 (root b1) while b2 belongs to s2: no closer support.
  testing::TinyCase tc;
  tc.n_blocks = 3;
  tc.edges = testing::path_edges(3);
  tc.roots = {0, 1};
  tc.current = {0, 1, 0};
  tc.white = {1, 1, 1};
  tc.total = {2, 2, 2};
  const District d = testing::build_tiny(tc);
  EXPECT_FALSE(d.pinned(0));
  EXPECT_FALSE(d.pinned(1));
  EXPECT_TRUE(d.pinned(2));
  EXPECT_EQ(d.num_pinned(), 1u);
}

TEST(Synthetic, Deterministic) {
  SyntheticParams p{8, 9, 3, 0.6, 25.0, 42};
  const District a = generate_synthetic(p);
  const District b = generate_synthetic(p);
  EXPECT_TRUE(a.counts() == b.counts());
  EXPECT_EQ(a.current(), b.current());
  for (std::size_t s = 0; s < a.num_schools(); ++s) {
    EXPECT_EQ(a.schools()[s].root, b.schools()[s].root);
  }
  p.seed = 43;
  EXPECT_FALSE(generate_synthetic(p).counts() == a.counts());
}

TEST(Synthetic, RookGridAndValidParameters) {
  const District d = generate_synthetic({4, 5, 2, 0.5, 10.0, 3});
  EXPECT_EQ(d.num_blocks(), 20u);
  EXPECT_EQ(d.num_schools(), 2u);
  std::size_t half_edges = 0;
  for (const auto& b : d.blocks()) half_edges += b.neighbors.size();
  EXPECT_EQ(half_edges / 2, static_cast<std::size_t>(4 * 4 + 3 * 5));
  EXPECT_EQ(d.num_pinned(), 0u);
  EXPECT_THROW(generate_synthetic({2, 2, 5, 0.5, 10.0, 1}), ValidationError);
  EXPECT_THROW(generate_synthetic({4, 4, 2, 1.5, 10.0, 1}), ValidationError);
  EXPECT_THROW(generate_synthetic({4, 4, 2, 0.5, 0.5, 1}), ValidationError);
}

TEST(Synthetic, NoPlantedSignalGivesNearZeroDissimilarity) {
  const District d = generate_synthetic({12, 12, 4, 0.0, 2000.0, 5});
  EXPECT_LT(dissimilarity(d.current(), d.counts(), GroupPair::white_nonwhite()),
            0.03);
}

TEST(Synthetic, PlantedFixtureIsSegregated) {
  const District d = generate_synthetic({20, 20, 6, 0.8, 20.0, 7});
  const double di =
      dissimilarity(d.current(), d.counts(), GroupPair::white_nonwhite());
  EXPECT_GT(di, 0.3);
  // Frozen regression value for the acceptance fixture.
  EXPECT_NEAR(di, 0.3266999221075248, 1e-12);
}

TEST(Serialization, WriteThenLoadRoundTrips) {
  const auto dir = std::filesystem::temp_directory_path() / "dpr_district_rt";
  std::filesystem::remove_all(dir);
  const District d = generate_synthetic({5, 6, 3, 0.7, 15.0, 11});
  write_district(d, dir.string());
  DistrictPaths paths{(dir / "blocks.csv").string(),
                      (dir / "adjacency.csv").string(),
                      (dir / "schools.csv").string(),
                      (dir / "travel.csv").string(),
                      (dir / "assignment.csv").string(),
                      (dir / "ses.csv").string()};
  const District e = load_district(paths);
  EXPECT_TRUE(d.counts() == e.counts());
  EXPECT_EQ(d.current(), e.current());
  ASSERT_EQ(d.ses_vars().size(), e.ses_vars().size());
  for (BlockIndex b = 0; b < static_cast<BlockIndex>(d.num_blocks()); ++b) {
    EXPECT_EQ(d.blocks()[b].neighbors, e.blocks()[b].neighbors);
    for (SchoolIndex s = 0; s < static_cast<SchoolIndex>(d.num_schools()); ++s) {
      EXPECT_DOUBLE_EQ(d.travel().at(b, s), e.travel().at(b, s));
    }
  }
  Assignment a = d.current();
  a.school_of[0] = (a.school_of[0] + 1) % 3;
  write_assignment_csv(d, a, (dir / "a.csv").string());
  EXPECT_EQ(read_assignment_csv(d, (dir / "a.csv").string()), a);
  std::filesystem::remove_all(dir);
}

TEST(Csv, QuotedFieldsAndCrlf) {
  const auto t = csv::Table::parse(
      "\xEF\xBB\xBF" "a,b\r\n\"x,1\",\"he said \"\"hi\"\"\"\r\n\r\n2,3\r\n", "t.csv");
  ASSERT_EQ(t.rows(), 2u);
  EXPECT_EQ(t.cell(0, 0), "x,1");
  EXPECT_EQ(t.cell(0, 1), "he said \"hi\"");
  EXPECT_EQ(t.integer(1, 1), 3);
  EXPECT_THROW(t.column("c"), ValidationError);
  std::ostringstream out;
  csv::write_row(out, {"plain", "with,comma", "q\"uote"});
  EXPECT_EQ(out.str(), "plain,\"with,comma\",\"q\"\"uote\"\n");
  EXPECT_EQ(csv::fixed6(-0.0000001), "0.000000");
  EXPECT_EQ(csv::fixed6(0.5), "0.500000");
}

}  // namespace
}  // namespace dprezone
