#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "sfadapt/components.hpp"
#include "sfadapt/errors.hpp"

using namespace sfa;

namespace {

void expect_matches_oracle(const LabelMask& mask, Connectivity c) {
  const auto oracle = oracle::flood_fill(mask, c == Connectivity::kFace);
  for (Exec exec : {Exec::kParallel, Exec::kSerial}) {
    const auto got = extract_components(mask, c, exec);
    ASSERT_EQ(got.by_class.size(), oracle.size());
    for (const auto& [label, comps] : oracle) {
      const auto& mine = got.by_class.at(label);
      ASSERT_EQ(mine.size(), comps.size()) << "label " << label;
      for (std::size_t i = 0; i < comps.size(); ++i) {
        EXPECT_EQ(mine[i].label, label);
        EXPECT_EQ(mine[i].voxels, comps[i]);
      }
    }
  }
}

}  // namespace

TEST(Connectivity, ParseAndCount) {
  EXPECT_EQ(parse_connectivity(8, 2), Connectivity::kFull);
  EXPECT_EQ(parse_connectivity(4, 2), Connectivity::kFace);
  EXPECT_EQ(parse_connectivity(26, 3), Connectivity::kFull);
  EXPECT_EQ(parse_connectivity(6, 3), Connectivity::kFace);
  EXPECT_THROW(parse_connectivity(6, 2), InvalidArgument);
  EXPECT_THROW(parse_connectivity(8, 3), InvalidArgument);
  EXPECT_THROW(parse_connectivity(5, 2), InvalidArgument);
  EXPECT_EQ(neighbour_count(Connectivity::kFull, 3), 26);
  EXPECT_EQ(neighbour_count(Connectivity::kFace, 2), 4);
}

TEST(Components, DiagonalPairDependsOnConnectivity) {
  // 1 0
  // 0 1
  LabelMask m(Grid{{2, 2}, {1, 1}}, {1, 0, 0, 1}, {});
  EXPECT_EQ(extract_components(m, Connectivity::kFull).total(), 1u);
  EXPECT_EQ(extract_components(m, Connectivity::kFace).total(), 2u);
}

TEST(Components, ClassesDoNotMerge) {
  LabelMask m(Grid{{1, 4}, {1, 1}}, {1, 2, 2, 1}, {});
  const auto set = extract_components(m);
  ASSERT_EQ(set.by_class.at(1).size(), 2u);
  ASSERT_EQ(set.by_class.at(2).size(), 1u);
  EXPECT_EQ(set.by_class.at(2)[0].voxels, (std::vector<std::size_t>{1, 2}));
}

TEST(Components, OrderedBySmallestVoxel) {
  // U-shape: both arms belong to one component.
  LabelMask m(Grid{{4, 5}, {1, 1}},
              {1, 0, 0, 0, 1,
               1, 0, 0, 0, 1,
               1, 1, 1, 1, 1,
               0, 0, 0, 0, 0},
              {});
  LabelMask two(Grid{{3, 3}, {1, 1}}, {0, 0, 1, 0, 0, 0, 1, 0, 0}, {});
  const auto set = extract_components(two, Connectivity::kFace);
  ASSERT_EQ(set.by_class.at(1).size(), 2u);
  EXPECT_EQ(set.by_class.at(1)[0].first_voxel(), 2u);
  EXPECT_EQ(set.by_class.at(1)[1].first_voxel(), 6u);
  EXPECT_EQ(extract_components(m).by_class.at(1).size(), 1u);
  EXPECT_EQ(extract_components(m).by_class.at(1)[0].size(), 9u);
}

TEST(Components, CornerChainIn3D) {
  // Voxels linked only through corners are joined under 26- but not 6-connectivity.
  std::vector<Label> l(27, 0);
  l[0] = l[13] = l[26] = 1;
  LabelMask m(Grid{{3, 3, 3}, {1, 1, 1}}, l, {});
  EXPECT_EQ(extract_components(m, Connectivity::kFull).total(), 1u);
  EXPECT_EQ(extract_components(m, Connectivity::kFace).total(), 3u);
}

TEST(Components, EmptyMaskHasNoComponents) {
  LabelMask m(Grid{{3, 3}, {1, 1}}, std::vector<Label>(9, 0), {});
  EXPECT_EQ(extract_components(m).total(), 0u);
}

TEST(Components, RandomMasksMatchFloodFillOracle) {
  std::mt19937_64 rng(1234);
  for (int trial = 0; trial < 60; ++trial) {
    std::vector<std::size_t> dims;
    if (trial % 2) {
      dims = {std::size_t(2 + trial % 7), std::size_t(3 + trial % 11), std::size_t(4 + trial % 5)};
    } else {
      dims = {std::size_t(5 + trial % 13), std::size_t(3 + trial % 17)};
    }
    const auto mask = fixtures::random_mask(rng, dims, 0.2 + 0.1 * (trial % 6), 1 + trial % 3);
    expect_matches_oracle(mask, Connectivity::kFull);
    expect_matches_oracle(mask, Connectivity::kFace);
  }
}

TEST(Components, ManySlabsMatchSerial) {
  // Tall volume so that the parallel path has many slab seams to merge.
  std::mt19937_64 rng(77);
  const auto mask = fixtures::random_mask(rng, {64, 9, 9}, 0.45, 2);
  for (Connectivity c : {Connectivity::kFull, Connectivity::kFace}) {
    EXPECT_EQ(extract_components(mask, c, Exec::kParallel),
              extract_components(mask, c, Exec::kSerial));
  }
}

TEST(Features, MeansAndClamping) {
  const Grid g{{1, 3}, {1, 1}};
  GridImage img(g, 3, {0.f, 0.5f, 1.f, 0.2f, 0.5f, 1.f, 0.4f, 0.5f, 1.f});
  ProbabilityMap prob(g, {7}, {0.1f, 0.2f, 0.3f});
  Component c{7, {0, 1, 2}};
  const auto f = compute_features(c, &prob, img);
  EXPECT_NEAR(f[0], 0.2, 1e-7);
  EXPECT_NEAR(f[1], 0.2, 1e-7);
  EXPECT_NEAR(f[2], 0.5, 1e-7);
  EXPECT_DOUBLE_EQ(f[3], 1.0 - kFeatureEpsilon);

  Component first{7, {0}};
  const auto g0 = compute_features(first, nullptr, img);
  EXPECT_DOUBLE_EQ(g0[0], 1.0 - kFeatureEpsilon);
  EXPECT_DOUBLE_EQ(g0[1], kFeatureEpsilon);
}

TEST(Features, TwoVoxelGrayMean) {
  const Grid g{{1, 2}, {1, 1}};
  const auto rgb = duplicate_channels(GridImage(g, 1, {0.2f, 0.6f}));
  const auto f = compute_features({1, {0, 1}}, nullptr, rgb);
  for (std::size_t k = 1; k < 4; ++k) EXPECT_NEAR(f[k], 0.4, 1e-7);
}

TEST(Features, VoxelOrderDoesNotMatter) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<float> u(0.f, 1.f);
  const Grid g{{10, 10}, {1, 1}};
  std::vector<float> px(300);
  for (auto& v : px) v = u(rng);
  GridImage img(g, 3, px);
  Component c{1, {}};
  for (std::size_t v = 0; v < 100; v += 3) c.voxels.push_back(v);
  const auto a = compute_features(c, nullptr, img);
  std::shuffle(c.voxels.begin(), c.voxels.end(), rng);
  EXPECT_EQ(compute_features(c, nullptr, img), a);
}

TEST(Features, Errors) {
  const Grid g{{1, 2}, {1, 1}};
  GridImage gray(g, 1, {0.f, 1.f});
  GridImage rgb = duplicate_channels(gray);
  ProbabilityMap prob(g, {2}, {0.5f, 0.5f});
  EXPECT_THROW(compute_features({1, {0}}, nullptr, gray), InvalidArgument);
  EXPECT_THROW(compute_features({1, {}}, nullptr, rgb), InvalidArgument);
  EXPECT_THROW(compute_features({1, {0}}, &prob, rgb), InvalidArgument);
  EXPECT_THROW(compute_features({1, {5}}, nullptr, rgb), InvalidArgument);
}
