#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <vector>

#include "sfadapt/grid.hpp"
#include "sfadapt/parallel.hpp"

namespace sfa {

// Neighbourhood used when growing components. kFull is 8 (2-D) / 26 (3-D),
// kFace is 4 (2-D) / 6 (3-D).
enum class Connectivity { kFull, kFace };

// Parses "8", "4", "26" or "6" and checks it is valid for `rank`.
Connectivity parse_connectivity(int neighbours, std::size_t rank);
int neighbour_count(Connectivity c, std::size_t rank);

inline constexpr double kFeatureEpsilon = 1e-6;

// (mean class probability, mean R, mean G, mean B), each in [eps, 1-eps].
using FeatureVector = std::array<double, 4>;

struct Component {
  Label label = 0;
  std::vector<std::size_t> voxels;  // row-major linear indices, ascending

  std::size_t size() const { return voxels.size(); }
  std::size_t first_voxel() const { return voxels.front(); }
  bool operator==(const Component&) const = default;
};

// Maximal connected regions of each nonzero label. Within a class the
// components are ordered by their smallest voxel index.
struct ComponentSet {
  std::map<Label, std::vector<Component>> by_class;

  std::size_t total() const;
  bool operator==(const ComponentSet&) const = default;
};

// Parallel two-pass union-find labelling: slabs along the outermost axis are
// labelled concurrently, then slab seams are merged serially. Exec::kSerial
// runs a breadth-first flood fill instead; the two agree exactly.
ComponentSet extract_components(const LabelMask& mask,
                                Connectivity connectivity = Connectivity::kFull,
                                Exec exec = Exec::kParallel);

// Features of one component. `image` must be 3-channel and normalized to
// [0,1]; when `prob` is null the probability feature defaults to 1-eps.
FeatureVector compute_features(const Component& component,
                               const ProbabilityMap* prob,
                               const GridImage& image);

}  // namespace sfa
