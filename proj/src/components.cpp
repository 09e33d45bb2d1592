#include "sfadapt/components.hpp"

#include <omp.h>

#include <algorithm>
#include <deque>
#include <limits>
#include <span>

#include "sfadapt/errors.hpp"

namespace sfa {
namespace {

struct Offset {
  long dz, dy, dx;
};

// Rank-2 grids are handled as a single z slice.
struct Lattice {
  long nz, ny, nx;
  bool volumetric;

  explicit Lattice(const Grid& g)
      : nz(g.rank() == 3 ? static_cast<long>(g.dims[0]) : 1),
        ny(static_cast<long>(g.dims[g.rank() - 2])),
        nx(static_cast<long>(g.dims[g.rank() - 1])),
        volumetric(g.rank() == 3) {}

  std::size_t index(long z, long y, long x) const {
    return static_cast<std::size_t>((z * ny + y) * nx + x);
  }
  bool inside(long z, long y, long x) const {
    return z >= 0 && z < nz && y >= 0 && y < ny && x >= 0 && x < nx;
  }
  // Slabs are cut along z for volumes and along y for planes.
  long outer_extent() const { return volumetric ? nz : ny; }
  long outer(long z, long y) const { return volumetric ? z : y; }
};

// Neighbours that precede the centre voxel in row-major order.
std::vector<Offset> backward_offsets(Connectivity c, bool volumetric) {
  std::vector<Offset> out;
  const long zlo = volumetric ? -1 : 0;
  for (long dz = zlo; dz <= 0; ++dz) {
    for (long dy = -1; dy <= 1; ++dy) {
      for (long dx = -1; dx <= 1; ++dx) {
        const bool before =
            dz < 0 || (dz == 0 && dy < 0) || (dz == 0 && dy == 0 && dx < 0);
        if (!before) continue;
        const int nonzero = (dz != 0) + (dy != 0) + (dx != 0);
        if (c == Connectivity::kFace && nonzero != 1) continue;
        out.push_back({dz, dy, dx});
      }
    }
  }
  return out;
}

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) {}

  void make(std::size_t v) { parent_[v] = v; }

  std::size_t find(std::size_t v) {
    while (parent_[v] != v) {
      parent_[v] = parent_[parent_[v]];
      v = parent_[v];
    }
    return v;
  }

  // The smaller index always becomes the root, so every root is the
  // smallest voxel of its set.
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (a < b) {
      parent_[b] = a;
    } else {
      parent_[a] = b;
    }
  }

 private:
  std::vector<std::size_t> parent_;
};

ComponentSet group_by_class(std::vector<Component> ordered) {
  ComponentSet set;
  for (auto& c : ordered) set.by_class[c.label].push_back(std::move(c));
  return set;
}

ComponentSet extract_union_find(const LabelMask& mask, Connectivity conn) {
  const Lattice lat(mask.grid());
  const auto labels = mask.labels();
  const auto offsets = backward_offsets(conn, lat.volumetric);
  DisjointSets sets(labels.size());

  // Unite v with every earlier neighbour whose outer coordinate lies in
  // [lo, hi]; each slab only touches its own index range.
  auto link = [&](long z, long y, long x, long lo, long hi) {
    const std::size_t v = lat.index(z, y, x);
    for (const auto& o : offsets) {
      const long nz = z + o.dz, ny = y + o.dy, nx = x + o.dx;
      if (!lat.inside(nz, ny, nx)) continue;
      const long oc = lat.outer(nz, ny);
      if (oc < lo || oc > hi) continue;
      const std::size_t n = lat.index(nz, ny, nx);
      if (labels[n] == labels[v]) sets.unite(v, n);
    }
  };

  const long outer = lat.outer_extent();
  const long slabs = std::max(1L, std::min<long>(omp_get_max_threads(), outer));
  auto slab_begin = [&](long s) { return s * outer / slabs; };

#pragma omp parallel for schedule(static, 1)
  for (long s = 0; s < slabs; ++s) {
    const long lo = slab_begin(s);
    const long hi = slab_begin(s + 1);
    const long z0 = lat.volumetric ? lo : 0;
    const long z1 = lat.volumetric ? hi : 1;
    const long y0 = lat.volumetric ? 0 : lo;
    const long y1 = lat.volumetric ? lat.ny : hi;
    for (long z = z0; z < z1; ++z) {
      for (long y = y0; y < y1; ++y) {
        for (long x = 0; x < lat.nx; ++x) {
          const std::size_t v = lat.index(z, y, x);
          if (labels[v] == 0) continue;
          sets.make(v);
          link(z, y, x, lo, hi - 1);
        }
      }
    }
  }

  // Seams: first layer of every slab against the last layer of the previous.
  for (long s = 1; s < slabs; ++s) {
    const long layer = slab_begin(s);
    const long z0 = lat.volumetric ? layer : 0;
    const long z1 = lat.volumetric ? layer + 1 : 1;
    const long y0 = lat.volumetric ? 0 : layer;
    const long y1 = lat.volumetric ? lat.ny : layer + 1;
    for (long z = z0; z < z1; ++z) {
      for (long y = y0; y < y1; ++y) {
        for (long x = 0; x < lat.nx; ++x) {
          if (labels[lat.index(z, y, x)] == 0) continue;
          link(z, y, x, layer - 1, layer - 1);
        }
      }
    }
  }

  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> component_of(labels.size(), kNone);
  std::vector<Component> ordered;
  for (std::size_t v = 0; v < labels.size(); ++v) {
    if (labels[v] == 0) continue;
    const std::size_t root = sets.find(v);
    if (root == v) {
      component_of[v] = ordered.size();
      ordered.push_back(Component{labels[v], {}});
    } else {
      component_of[v] = component_of[root];
    }
    ordered[component_of[v]].voxels.push_back(v);
  }
  return group_by_class(std::move(ordered));
}

ComponentSet extract_flood_fill(const LabelMask& mask, Connectivity conn) {
  const Lattice lat(mask.grid());
  const auto labels = mask.labels();
  auto offsets = backward_offsets(conn, lat.volumetric);
  const std::size_t half = offsets.size();
  for (std::size_t i = 0; i < half; ++i) {
    offsets.push_back({-offsets[i].dz, -offsets[i].dy, -offsets[i].dx});
  }

  std::vector<char> seen(labels.size(), 0);
  std::vector<Component> ordered;
  std::deque<std::array<long, 3>> queue;
  for (long z = 0; z < lat.nz; ++z) {
    for (long y = 0; y < lat.ny; ++y) {
      for (long x = 0; x < lat.nx; ++x) {
        const std::size_t start = lat.index(z, y, x);
        if (labels[start] == 0 || seen[start]) continue;
        Component comp{labels[start], {}};
        seen[start] = 1;
        queue.push_back({z, y, x});
        while (!queue.empty()) {
          const auto [cz, cy, cx] = queue.front();
          queue.pop_front();
          comp.voxels.push_back(lat.index(cz, cy, cx));
          for (const auto& o : offsets) {
            const long nz = cz + o.dz, ny = cy + o.dy, nx = cx + o.dx;
            if (!lat.inside(nz, ny, nx)) continue;
            const std::size_t n = lat.index(nz, ny, nx);
            if (seen[n] || labels[n] != comp.label) continue;
            seen[n] = 1;
            queue.push_back({nz, ny, nx});
          }
        }
        std::sort(comp.voxels.begin(), comp.voxels.end());
        ordered.push_back(std::move(comp));
      }
    }
  }
  return group_by_class(std::move(ordered));
}

}  // namespace

Connectivity parse_connectivity(int neighbours, std::size_t rank) {
  if (rank == 2) {
    if (neighbours == 8) return Connectivity::kFull;
    if (neighbours == 4) return Connectivity::kFace;
  } else if (rank == 3) {
    if (neighbours == 26) return Connectivity::kFull;
    if (neighbours == 6) return Connectivity::kFace;
  }
  throw InvalidArgument("connectivity " + std::to_string(neighbours) +
                        " is not valid for rank " + std::to_string(rank));
}

int neighbour_count(Connectivity c, std::size_t rank) {
  if (rank == 3) return c == Connectivity::kFull ? 26 : 6;
  return c == Connectivity::kFull ? 8 : 4;
}

std::size_t ComponentSet::total() const {
  std::size_t n = 0;
  for (const auto& [label, comps] : by_class) n += comps.size();
  return n;
}

ComponentSet extract_components(const LabelMask& mask,
                                Connectivity connectivity, Exec exec) {
  if (exec == Exec::kSerial) return extract_flood_fill(mask, connectivity);
  return extract_union_find(mask, connectivity);
}

FeatureVector compute_features(const Component& component,
                               const ProbabilityMap* prob,
                               const GridImage& image) {
  if (image.channels() != 3) {
    throw InvalidArgument("features need a 3-channel image");
  }
  if (component.voxels.empty()) {
    throw InvalidArgument("component has no voxels");
  }
  const std::size_t n_vox = image.grid().voxel_count();
  if (prob != nullptr && prob->grid().dims != image.grid().dims) {
    throw InvalidArgument("dims mismatch between probability map and image");
  }
  if (*std::max_element(component.voxels.begin(), component.voxels.end()) >=
      n_vox) {
    throw InvalidArgument("dims mismatch: component lies outside the image");
  }

  // Sum in ascending voxel order so the result does not depend on how the
  // caller ordered the voxel list.
  std::vector<std::size_t> sorted_storage;
  std::span<const std::size_t> voxels = component.voxels;
  if (!std::is_sorted(voxels.begin(), voxels.end())) {
    sorted_storage.assign(voxels.begin(), voxels.end());
    std::sort(sorted_storage.begin(), sorted_storage.end());
    voxels = sorted_storage;
  }

  auto clamp = [](double v) {
    return std::clamp(v, kFeatureEpsilon, 1.0 - kFeatureEpsilon);
  };
  const auto count = static_cast<double>(component.voxels.size());

  FeatureVector f{};
  if (prob == nullptr) {
    f[0] = 1.0 - kFeatureEpsilon;
  } else {
    const auto channel = prob->channel_of(component.label);
    if (!channel) {
      throw InvalidArgument("probability map has no channel for label " +
                            std::to_string(component.label));
    }
    double sum = 0.0;
    for (auto v : voxels) sum += prob->at(v, *channel);
    f[0] = clamp(sum / count);
  }
  for (int c = 0; c < 3; ++c) {
    double sum = 0.0;
    for (auto v : voxels) sum += image.at(v, c);
    f[static_cast<std::size_t>(c) + 1] = clamp(sum / count);
  }
  return f;
}

}  // namespace sfa
