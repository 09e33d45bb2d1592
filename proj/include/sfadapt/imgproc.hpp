#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "sfadapt/grid.hpp"
#include "sfadapt/parallel.hpp"

namespace sfa {

struct Histogram {
  int levels = 0;
  std::vector<std::uint64_t> counts;      // one per level
  std::vector<std::uint64_t> cumulative;  // running sum of counts

  std::uint64_t total() const {
    return cumulative.empty() ? 0 : cumulative.back();
  }
};

// Integer levels in [0, levels-1] for a single-channel image. u8 data with
// 256 levels is used as-is; anything else goes through normalize_intensity
// and is rounded onto the level range.
std::vector<std::uint32_t> quantize_levels(const GridImage& image, int levels);

Histogram compute_histogram(const std::vector<std::uint32_t>& quantized,
                            int levels, Exec exec = Exec::kParallel);

// Level lookup table h(v) = round((cdf(v) - cdf_min) / (N - cdf_min) * (L-1))
// with cdf_min the smallest nonzero cumulative count. Returns nullopt when
// every voxel sits on one level (nothing to equalize).
std::optional<std::vector<std::uint32_t>> equalization_table(
    const Histogram& hist);

struct EqualizeOptions {
  int levels = 256;
  // For 3-D volumes: equalize each z slice on its own histogram.
  bool per_slice = false;
  Exec exec = Exec::kParallel;
};

// Global histogram equalization of a single-channel image. The output holds
// level values (u8 when levels <= 256, else u16). A degenerate histogram
// returns the input unchanged.
GridImage histogram_equalize(const GridImage& image,
                             const EqualizeOptions& options = {});

// Flattened intensities in row-major order, optionally restricted to voxels
// with a nonzero mask label. Multi-channel images contribute every channel
// of each selected voxel.
std::vector<double> intensity_samples(const GridImage& image,
                                      const LabelMask* mask = nullptr);

}  // namespace sfa
