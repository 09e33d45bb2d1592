#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sfadapt/grid.hpp"
#include "sfadapt/metrics.hpp"

// Plain-buffer entry points for foreign-language bindings. Every call
// copies its inputs into the library types and defers to the same code the
// CLI uses, so results are bit-identical to cmd_refine / cmd_evaluate.
namespace sfa::buffer {

// Borrowed view of a contiguous row-major buffer. `data` must hold
// product(dims) * channels elements of `dtype`.
struct BufferView {
  const void* data = nullptr;
  std::size_t bytes = 0;
  std::vector<std::size_t> dims;
  std::vector<double> spacing;
  DType dtype = DType::kF32;
  int channels = 1;
};

// Label buffers are int32.
struct LabelView {
  std::span<const Label> labels;
  std::vector<std::size_t> dims;
  std::vector<double> spacing;
  ClassNames class_names;
};

struct ProbView {
  std::span<const float> values;  // interleaved, one channel per label
  std::vector<Label> class_labels;
};

struct RefineOutput {
  std::vector<Label> labels;  // refined mask, same layout as the input
  std::string mask_srt1;      // bytes cmd_refine writes for this case
  std::string report_json;    // per-case report cmd_refine writes
};

// Throws the library's exceptions; a buffer whose length disagrees with its
// dims raises InvalidArgument starting with "dims mismatch".
RefineOutput refine(const LabelView& mask, const BufferView& image,
                    const ProbView* prob, const std::filesystem::path& priors_path,
                    int connectivity = 0);

// Per-class DICE and ASD (nullopt = N/A) for every class present in either
// mask; the same values cmd_evaluate writes.
std::vector<MetricResult> metrics(const LabelView& pred, const LabelView& gt,
                                  AsdMode mode = AsdMode::kVolume);

// Library version, for binding packages to mirror.
const char* version();

}  // namespace sfa::buffer
