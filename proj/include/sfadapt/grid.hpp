#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sfa {

// Storage type of a tensor on disk. In memory images are always float.
enum class DType { kU8, kU16, kF32 };

const char* dtype_name(DType t);
std::optional<DType> parse_dtype(const std::string& s);
std::size_t dtype_size(DType t);

// Voxel lattice shared by images, masks and probability maps.
// Axis order is (z,) y, x and data is row-major (x fastest).
struct Grid {
  std::vector<std::size_t> dims;
  std::vector<double> spacing;  // millimetres per axis, same order as dims

  std::size_t rank() const { return dims.size(); }
  std::size_t voxel_count() const;

  bool operator==(const Grid&) const = default;
};

// Throws InvalidArgument unless rank is 2 or 3, extents are positive and
// spacing entries are finite and > 0.
void check_grid(const Grid& grid);

// Intensity image. Channels are interleaved per voxel.
class GridImage {
 public:
  GridImage() = default;
  GridImage(Grid grid, int channels, std::vector<float> values,
            DType dtype = DType::kF32);

  const Grid& grid() const { return grid_; }
  int channels() const { return channels_; }
  DType dtype() const { return dtype_; }
  std::span<const float> values() const { return values_; }
  float at(std::size_t voxel, int channel = 0) const {
    return values_[voxel * static_cast<std::size_t>(channels_) +
                   static_cast<std::size_t>(channel)];
  }

  bool operator==(const GridImage&) const = default;

 private:
  Grid grid_;
  int channels_ = 1;
  DType dtype_ = DType::kF32;
  std::vector<float> values_;
};

using Label = std::int32_t;
using ClassNames = std::map<Label, std::string>;

// Integer class labels per voxel; 0 is background.
class LabelMask {
 public:
  LabelMask() = default;
  // Throws InvalidArgument on size mismatch or negative labels. Unnamed
  // labels are reported by validate_pair, not rejected here.
  LabelMask(Grid grid, std::vector<Label> labels, ClassNames class_names);

  const Grid& grid() const { return grid_; }
  std::span<const Label> labels() const { return labels_; }
  const ClassNames& class_names() const { return class_names_; }

  // Sorted distinct nonzero labels present in the voxel data.
  std::vector<Label> present_labels() const;

  bool operator==(const LabelMask&) const = default;

 private:
  Grid grid_;
  std::vector<Label> labels_;
  ClassNames class_names_;
};

// Per-class foreground probability, one interleaved channel per class label.
class ProbabilityMap {
 public:
  ProbabilityMap() = default;
  // Throws InvalidArgument on size mismatch, duplicate labels or any value
  // outside [0, 1].
  ProbabilityMap(Grid grid, std::vector<Label> class_labels,
                 std::vector<float> values);

  const Grid& grid() const { return grid_; }
  std::span<const Label> class_labels() const { return class_labels_; }
  std::span<const float> values() const { return values_; }
  std::optional<std::size_t> channel_of(Label label) const;
  float at(std::size_t voxel, std::size_t channel) const {
    return values_[voxel * class_labels_.size() + channel];
  }

  bool operator==(const ProbabilityMap&) const = default;

 private:
  Grid grid_;
  std::vector<Label> class_labels_;
  std::vector<float> values_;
};

// One (equalized image, pseudo-label) training pair plus provenance.
struct ManifestEntry {
  std::string case_id;
  std::filesystem::path image;
  std::filesystem::path pseudo_label;
};

struct AdaptManifest {
  std::vector<ManifestEntry> entries;
  std::map<std::string, std::string> provenance;
};

// Returns the invariant violations between an image and a mask; empty means
// the pair is consistent. Never throws for data problems.
std::vector<std::string> validate_pair(const GridImage& image,
                                       const LabelMask& mask);

// Replicates a single-channel image into three identical channels.
GridImage duplicate_channels(const GridImage& image);

// Maps intensities into [0, 1]: u8 data is divided by 255, anything else is
// min-max scaled over all voxels and channels. Constant images map to 0.5.
GridImage normalize_intensity(const GridImage& image);

}  // namespace sfa
