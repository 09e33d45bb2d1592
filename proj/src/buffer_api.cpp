#include "sfadapt/buffer_api.hpp"

#include <cstdint>
#include <cstring>

#include "sfadapt/errors.hpp"
#include "sfadapt/pipeline.hpp"
#include "sfadapt/plausibility.hpp"

namespace sfa::buffer {

namespace {

Grid make_grid(const std::vector<std::size_t>& dims, const std::vector<double>& spacing) {
  Grid g{dims, spacing};
  check_grid(g);
  return g;
}

void check_length(std::size_t have, std::size_t want) {
  if (have != want) {
    throw InvalidArgument("dims mismatch: buffer holds " + std::to_string(have) +
                          " values, dims imply " + std::to_string(want));
  }
}

template <typename T>
std::vector<float> widen(const BufferView& v, std::size_t count) {
  check_length(v.bytes / sizeof(T), count);
  if (v.bytes % sizeof(T) != 0) throw InvalidArgument("dims mismatch: ragged buffer");
  std::vector<T> raw(count);
  if (count > 0) std::memcpy(raw.data(), v.data, count * sizeof(T));
  return std::vector<float>(raw.begin(), raw.end());
}

GridImage to_image(const BufferView& v) {
  Grid g = make_grid(v.dims, v.spacing);
  if (v.channels != 1 && v.channels != 3) throw InvalidArgument("image must have 1 or 3 channels");
  const std::size_t count = g.voxel_count() * static_cast<std::size_t>(v.channels);
  std::vector<float> values;
  switch (v.dtype) {
    case DType::kU8: values = widen<std::uint8_t>(v, count); break;
    case DType::kU16: values = widen<std::uint16_t>(v, count); break;
    case DType::kF32: values = widen<float>(v, count); break;
  }
  return GridImage(std::move(g), v.channels, std::move(values), v.dtype);
}

LabelMask to_mask(const LabelView& v) {
  Grid g = make_grid(v.dims, v.spacing);
  check_length(v.labels.size(), g.voxel_count());
  return LabelMask(std::move(g), std::vector<Label>(v.labels.begin(), v.labels.end()),
                   v.class_names);
}

}  // namespace

RefineOutput refine(const LabelView& mask, const BufferView& image, const ProbView* prob,
                    const std::filesystem::path& priors_path, int connectivity) {
  const LabelMask m = to_mask(mask);
  const GridImage img = to_image(image);
  std::optional<ProbabilityMap> p;
  if (prob != nullptr) {
    check_length(prob->values.size(), m.grid().voxel_count() * prob->class_labels.size());
    p.emplace(m.grid(), prob->class_labels,
              std::vector<float>(prob->values.begin(), prob->values.end()));
  }
  const PriorsTable priors = load_priors(priors_path);
  auto refined = refine_case(m, p ? &*p : nullptr, img, priors, connectivity);
  const auto labels = refined.result.mask.labels();
  return {std::vector<Label>(labels.begin(), labels.end()), std::move(refined.mask_bytes),
          std::move(refined.report_json)};
}

std::vector<MetricResult> metrics(const LabelView& pred, const LabelView& gt, AsdMode mode) {
  const LabelMask p = to_mask(pred);
  const LabelMask g = to_mask(gt);
  return evaluate_case("", p, g, mode);
}

const char* version() { return SFADAPT_VERSION; }

}  // namespace sfa::buffer
