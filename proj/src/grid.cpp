#include "sfadapt/grid.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "sfadapt/errors.hpp"

namespace sfa {

const char* dtype_name(DType t) {
  switch (t) {
    case DType::kU8:
      return "u8";
    case DType::kU16:
      return "u16";
    case DType::kF32:
      return "f32";
  }
  return "?";
}

std::optional<DType> parse_dtype(const std::string& s) {
  if (s == "u8") return DType::kU8;
  if (s == "u16") return DType::kU16;
  if (s == "f32") return DType::kF32;
  return std::nullopt;
}

std::size_t dtype_size(DType t) {
  switch (t) {
    case DType::kU8:
      return 1;
    case DType::kU16:
      return 2;
    case DType::kF32:
      return 4;
  }
  return 0;
}

std::size_t Grid::voxel_count() const {
  std::size_t n = dims.empty() ? 0 : 1;
  for (auto d : dims) n *= d;
  return n;
}

void check_grid(const Grid& grid) {
  if (grid.rank() != 2 && grid.rank() != 3) {
    throw InvalidArgument("grid rank must be 2 or 3, got " +
                          std::to_string(grid.rank()));
  }
  if (grid.spacing.size() != grid.rank()) {
    throw InvalidArgument("spacing has " + std::to_string(grid.spacing.size()) +
                          " entries for a rank-" + std::to_string(grid.rank()) +
                          " grid");
  }
  for (auto d : grid.dims) {
    if (d == 0) throw InvalidArgument("grid extents must be positive");
  }
  for (auto s : grid.spacing) {
    if (!(std::isfinite(s) && s > 0.0)) {
      throw InvalidArgument("spacing entries must be finite and positive");
    }
  }
}

GridImage::GridImage(Grid grid, int channels, std::vector<float> values,
                     DType dtype)
    : grid_(std::move(grid)),
      channels_(channels),
      dtype_(dtype),
      values_(std::move(values)) {
  check_grid(grid_);
  if (channels_ != 1 && channels_ != 3) {
    throw InvalidArgument("image must have 1 or 3 channels, got " +
                          std::to_string(channels_));
  }
  const std::size_t expected =
      grid_.voxel_count() * static_cast<std::size_t>(channels_);
  if (values_.size() != expected) {
    throw InvalidArgument("image has " + std::to_string(values_.size()) +
                          " values, expected " + std::to_string(expected));
  }
}

LabelMask::LabelMask(Grid grid, std::vector<Label> labels,
                     ClassNames class_names)
    : grid_(std::move(grid)),
      labels_(std::move(labels)),
      class_names_(std::move(class_names)) {
  check_grid(grid_);
  if (labels_.size() != grid_.voxel_count()) {
    throw InvalidArgument("mask has " + std::to_string(labels_.size()) +
                          " labels, expected " +
                          std::to_string(grid_.voxel_count()));
  }
  if (std::any_of(labels_.begin(), labels_.end(),
                  [](Label l) { return l < 0; })) {
    throw InvalidArgument("mask labels must be non-negative");
  }
  for (const auto& [label, name] : class_names_) {
    if (label <= 0) {
      throw InvalidArgument("class names are only defined for labels > 0");
    }
  }
}

std::vector<Label> LabelMask::present_labels() const {
  std::set<Label> seen;
  for (Label l : labels_) {
    if (l != 0) seen.insert(l);
  }
  return {seen.begin(), seen.end()};
}

ProbabilityMap::ProbabilityMap(Grid grid, std::vector<Label> class_labels,
                               std::vector<float> values)
    : grid_(std::move(grid)),
      class_labels_(std::move(class_labels)),
      values_(std::move(values)) {
  check_grid(grid_);
  std::set<Label> unique(class_labels_.begin(), class_labels_.end());
  if (unique.size() != class_labels_.size()) {
    throw InvalidArgument("probability map has duplicate class labels");
  }
  const std::size_t expected = grid_.voxel_count() * class_labels_.size();
  if (values_.size() != expected) {
    throw InvalidArgument("probability map has " +
                          std::to_string(values_.size()) +
                          " values, expected " + std::to_string(expected));
  }
  for (float v : values_) {
    if (!(v >= 0.0f && v <= 1.0f)) {
      throw InvalidArgument("probability out of range");
    }
  }
}

std::optional<std::size_t> ProbabilityMap::channel_of(Label label) const {
  auto it = std::find(class_labels_.begin(), class_labels_.end(), label);
  if (it == class_labels_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - class_labels_.begin());
}

std::vector<std::string> validate_pair(const GridImage& image,
                                       const LabelMask& mask) {
  std::vector<std::string> violations;
  if (image.grid().dims != mask.grid().dims) {
    violations.emplace_back("dims mismatch");
  } else if (image.grid().spacing != mask.grid().spacing) {
    violations.emplace_back("spacing mismatch");
  }
  for (Label l : mask.present_labels()) {
    if (!mask.class_names().contains(l)) {
      violations.emplace_back("unnamed label " + std::to_string(l));
    }
  }
  return violations;
}

GridImage duplicate_channels(const GridImage& image) {
  if (image.channels() != 1) {
    throw InvalidArgument("duplicate_channels expects a single-channel image");
  }
  const auto src = image.values();
  std::vector<float> out;
  out.reserve(src.size() * 3);
  for (float v : src) {
    out.push_back(v);
    out.push_back(v);
    out.push_back(v);
  }
  return GridImage(image.grid(), 3, std::move(out), image.dtype());
}

GridImage normalize_intensity(const GridImage& image) {
  const auto src = image.values();
  std::vector<float> out(src.size());
  if (image.dtype() == DType::kU8) {
    std::transform(src.begin(), src.end(), out.begin(),
                   [](float v) { return v / 255.0f; });
  } else {
    auto [lo_it, hi_it] = std::minmax_element(src.begin(), src.end());
    const double lo = *lo_it;
    const double hi = *hi_it;
    if (hi == lo) {
      std::fill(out.begin(), out.end(), 0.5f);
    } else {
      const double range = hi - lo;
      std::transform(src.begin(), src.end(), out.begin(), [&](float v) {
        return static_cast<float>(
            std::clamp((static_cast<double>(v) - lo) / range, 0.0, 1.0));
      });
    }
  }
  return GridImage(image.grid(), image.channels(), std::move(out), DType::kF32);
}

}  // namespace sfa
