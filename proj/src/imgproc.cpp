#include "sfadapt/imgproc.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>

#include "sfadapt/errors.hpp"

namespace sfa {

std::vector<std::uint32_t> quantize_levels(const GridImage& image,
                                           int levels) {
  if (image.channels() != 1) {
    throw InvalidArgument(
        "histogram equalization needs a single-channel image; equalize "
        "before duplicate_channels");
  }
  if (levels < 2) throw InvalidArgument("levels must be >= 2");
  const auto top = static_cast<double>(levels - 1);
  std::vector<std::uint32_t> q(image.values().size());
  if (image.dtype() == DType::kU8 && levels == 256) {
    const auto src = image.values();
    for (std::size_t i = 0; i < q.size(); ++i) {
      q[i] = static_cast<std::uint32_t>(
          std::clamp(std::lround(src[i]), 0L, 255L));
    }
    return q;
  }
  const GridImage unit = normalize_intensity(image);
  const auto src = unit.values();
  for (std::size_t i = 0; i < q.size(); ++i) {
    q[i] = static_cast<std::uint32_t>(
        std::clamp(std::lround(static_cast<double>(src[i]) * top), 0L,
                   static_cast<long>(levels - 1)));
  }
  return q;
}

namespace {

Histogram finish(std::vector<std::uint64_t> counts, int levels) {
  Histogram h;
  h.levels = levels;
  h.counts = std::move(counts);
  h.cumulative.resize(h.counts.size());
  std::uint64_t running = 0;
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    running += h.counts[i];
    h.cumulative[i] = running;
  }
  return h;
}

Histogram histogram_range(const std::uint32_t* data, std::size_t n,
                          int levels, Exec exec) {
  const auto L = static_cast<std::size_t>(levels);
  std::vector<std::uint64_t> counts(L, 0);
  if (exec == Exec::kSerial) {
    for (std::size_t i = 0; i < n; ++i) ++counts[data[i]];
    return finish(std::move(counts), levels);
  }
  const int threads = omp_get_max_threads();
  std::vector<std::uint64_t> local(L * static_cast<std::size_t>(threads), 0);
#pragma omp parallel num_threads(threads)
  {
    auto* mine = local.data() + L * static_cast<std::size_t>(omp_get_thread_num());
#pragma omp for schedule(static)
    for (std::size_t i = 0; i < n; ++i) ++mine[data[i]];
  }
  for (int t = 0; t < threads; ++t) {
    for (std::size_t l = 0; l < L; ++l) {
      counts[l] += local[L * static_cast<std::size_t>(t) + l];
    }
  }
  return finish(std::move(counts), levels);
}

void apply_table(const std::vector<std::uint32_t>& table,
                 const std::uint32_t* in, float* out, std::size_t n,
                 Exec exec) {
  if (exec == Exec::kSerial) {
    for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<float>(table[in[i]]);
    return;
  }
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<float>(table[in[i]]);
}

}  // namespace

Histogram compute_histogram(const std::vector<std::uint32_t>& quantized,
                            int levels, Exec exec) {
  if (levels < 2) throw InvalidArgument("levels must be >= 2");
  for (auto v : quantized) {
    if (v >= static_cast<std::uint32_t>(levels)) {
      throw InvalidArgument("quantized value outside level range");
    }
  }
  return histogram_range(quantized.data(), quantized.size(), levels, exec);
}

std::optional<std::vector<std::uint32_t>> equalization_table(
    const Histogram& hist) {
  const std::uint64_t n = hist.total();
  std::uint64_t cdf_min = 0;
  for (auto c : hist.cumulative) {
    if (c != 0) {
      cdf_min = c;
      break;
    }
  }
  if (n == 0 || cdf_min == n) return std::nullopt;
  const std::uint64_t den = n - cdf_min;
  const auto top = static_cast<std::uint64_t>(hist.levels - 1);
  std::vector<std::uint32_t> table(hist.cumulative.size(), 0);
  for (std::size_t v = 0; v < table.size(); ++v) {
    const std::uint64_t c = hist.cumulative[v];
    if (c < cdf_min) continue;  // unoccupied levels below the minimum
    // round-half-up of (c - cdf_min) * top / den in exact integer arithmetic
    const std::uint64_t num = (c - cdf_min) * top;
    table[v] = static_cast<std::uint32_t>((2 * num + den) / (2 * den));
  }
  return table;
}

GridImage histogram_equalize(const GridImage& image,
                             const EqualizeOptions& options) {
  const auto q = quantize_levels(image, options.levels);
  const DType out_dtype = options.levels <= 256 ? DType::kU8 : DType::kU16;
  std::vector<float> out(q.size());

  const bool slices = options.per_slice && image.grid().rank() == 3;
  if (!slices) {
    const auto hist =
        histogram_range(q.data(), q.size(), options.levels, options.exec);
    const auto table = equalization_table(hist);
    if (!table) return image;
    apply_table(*table, q.data(), out.data(), q.size(), options.exec);
    return GridImage(image.grid(), 1, std::move(out), out_dtype);
  }

  // Per-slice: quantization stays global, histograms are per z slice. A
  // slice with a single occupied level keeps its quantized levels.
  const std::size_t depth = image.grid().dims[0];
  const std::size_t plane = q.size() / depth;
  for (std::size_t z = 0; z < depth; ++z) {
    const auto* in = q.data() + z * plane;
    auto* dst = out.data() + z * plane;
    const auto hist = histogram_range(in, plane, options.levels, options.exec);
    if (const auto table = equalization_table(hist)) {
      apply_table(*table, in, dst, plane, options.exec);
    } else {
      for (std::size_t i = 0; i < plane; ++i) dst[i] = static_cast<float>(in[i]);
    }
  }
  return GridImage(image.grid(), 1, std::move(out), out_dtype);
}

std::vector<double> intensity_samples(const GridImage& image,
                                      const LabelMask* mask) {
  const auto values = image.values();
  if (mask == nullptr) return {values.begin(), values.end()};
  if (mask->grid().dims != image.grid().dims) {
    throw InvalidArgument("dims mismatch between image and mask");
  }
  const auto labels = mask->labels();
  const auto ch = static_cast<std::size_t>(image.channels());
  std::vector<double> out;
  for (std::size_t v = 0; v < labels.size(); ++v) {
    if (labels[v] == 0) continue;
    for (std::size_t c = 0; c < ch; ++c) out.push_back(values[v * ch + c]);
  }
  return out;
}

}  // namespace sfa
