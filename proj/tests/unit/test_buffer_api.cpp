#include <gtest/gtest.h>

#include <cstdint>

#include "fixtures.hpp"
#include "sfadapt/buffer_api.hpp"
#include "sfadapt/pipeline.hpp"
#include "sfadapt/tensor_io.hpp"

using namespace sfa;
using fixtures::TempDir;
namespace fs = std::filesystem;

namespace {

buffer::LabelView view_of(const LabelMask& m) {
  return {m.labels(), m.grid().dims, m.grid().spacing, m.class_names()};
}

struct U8Image {
  std::vector<std::uint8_t> bytes;
  buffer::BufferView view;
};

U8Image u8_view_of(const GridImage& img) {
  U8Image out;
  for (float v : img.values()) out.bytes.push_back(static_cast<std::uint8_t>(v));
  out.view.data = out.bytes.data();
  out.view.bytes = out.bytes.size();
  out.view.dims = img.grid().dims;
  out.view.spacing = img.grid().spacing;
  out.view.dtype = DType::kU8;
  out.view.channels = img.channels();
  return out;
}

}  // namespace

TEST(BufferApi, RefineIsBitIdenticalToCli) {
  TempDir tmp;
  fixtures::write_synthetic_set(tmp.path());
  RefineOptions opt;
  opt.masks = tmp / "masks";
  opt.images = tmp / "images";
  opt.probs = tmp / "probs";
  opt.priors = tmp / "priors.json";
  opt.out = tmp / "refined";
  ASSERT_EQ(cmd_refine(opt), kExitOk);

  for (int k = 0; k < 5; ++k) {
    const std::string id = "case" + std::to_string(k);
    const auto mask = read_mask(tmp / "masks" / (id + ".srt"));
    const auto image = read_image(tmp / "images" / (id + (k == 4 ? ".pgm" : ".srt")));
    const auto prob = read_prob(tmp / "probs" / (id + ".srt"));
    const auto img = u8_view_of(image);
    const buffer::ProbView pv{prob.values(), {prob.class_labels().begin(), prob.class_labels().end()}};

    const auto out = buffer::refine(view_of(mask), img.view, &pv, tmp / "priors.json");
    EXPECT_EQ(out.mask_srt1, read_file(tmp / "refined" / (id + ".srt"))) << id;
    EXPECT_EQ(out.report_json, read_file(tmp / "refined" / (id + ".report.json"))) << id;
    const auto refined = read_mask(tmp / "refined" / (id + ".srt"));
    EXPECT_TRUE(std::equal(out.labels.begin(), out.labels.end(), refined.labels().begin(),
                           refined.labels().end()));
  }
}

TEST(BufferApi, FloatBufferGivesSameResultAsU8) {
  TempDir tmp;
  fixtures::write_synthetic_set(tmp.path());
  const auto mask = read_mask(tmp / "masks/case0.srt");
  const auto image = read_image(tmp / "images/case0.srt");
  const auto u8 = u8_view_of(image);
  std::vector<float> f(image.values().begin(), image.values().end());
  auto fv = u8.view;
  fv.data = f.data();
  fv.bytes = f.size() * sizeof(float);
  fv.dtype = DType::kF32;
  const auto a = buffer::refine(view_of(mask), u8.view, nullptr, tmp / "priors.json");
  const auto b = buffer::refine(view_of(mask), fv, nullptr, tmp / "priors.json");
  EXPECT_EQ(a.labels, b.labels);
}

TEST(BufferApi, MetricsMatchEvaluateRows) {
  TempDir tmp;
  fixtures::write_synthetic_set(tmp.path());
  for (int k = 0; k < 5; ++k) {
    const std::string id = "case" + std::to_string(k);
    const auto pred = read_mask(tmp / "masks" / (id + ".srt"));
    const auto gt = read_mask(tmp / "gt" / (id + ".srt"));
    const auto direct = evaluate_case("", pred, gt);
    const auto via = buffer::metrics(view_of(pred), view_of(gt));
    ASSERT_EQ(via.size(), direct.size());
    for (std::size_t i = 0; i < via.size(); ++i) {
      EXPECT_EQ(via[i].label, direct[i].label);
      EXPECT_EQ(via[i].class_name, direct[i].class_name);
      EXPECT_EQ(via[i].dice, direct[i].dice);
      EXPECT_EQ(via[i].asd, direct[i].asd);
    }
  }
}

TEST(BufferApi, MetricsSlicesMode) {
  const Grid g{{2, 1, 2}, {1, 1, 1}};
  const LabelMask a(g, {1, 0, 1, 1}, {{1, "x"}});
  const auto r = buffer::metrics(view_of(a), view_of(a), AsdMode::kSlice);
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0].asd, 0.0);
}

TEST(BufferApi, EmptyMaskRoundTrips) {
  TempDir tmp;
  write_file(tmp / "priors.json", R"({"liver": {"prob": [1, 1], "r": [1, 1], "g": [1, 1], "b": [1, 1]}})");
  const Grid g{{2, 3}, {1, 1}};
  const LabelMask empty(g, std::vector<Label>(6, 0), {});
  const auto img = u8_view_of(GridImage(g, 1, {1, 2, 3, 4, 5, 6}, DType::kU8));
  const auto out = buffer::refine(view_of(empty), img.view, nullptr, tmp / "priors.json");
  EXPECT_EQ(out.labels, std::vector<Label>(6, 0));
  EXPECT_EQ(decode_tensor(out.mask_srt1), Tensor(empty));
  EXPECT_TRUE(buffer::metrics(view_of(empty), view_of(empty)).empty());
}

TEST(BufferApi, BadDimsRejected) {
  TempDir tmp;
  write_file(tmp / "priors.json", "{}");
  const std::vector<Label> labels(5, 0);
  const buffer::LabelView bad{labels, {2, 3}, {1, 1}, {}};
  const LabelMask ok(Grid{{2, 3}, {1, 1}}, std::vector<Label>(6, 0), {});
  try {
    buffer::metrics(bad, view_of(ok));
    FAIL();
  } catch (const InvalidArgument& e) {
    EXPECT_EQ(std::string(e.what()).rfind("dims mismatch", 0), 0u) << e.what();
  }

  const std::vector<std::uint8_t> px(5, 0);
  buffer::BufferView img{px.data(), px.size(), {2, 3}, {1, 1}, DType::kU8, 1};
  try {
    buffer::refine(view_of(ok), img, nullptr, tmp / "priors.json");
    FAIL();
  } catch (const InvalidArgument& e) {
    EXPECT_EQ(std::string(e.what()).rfind("dims mismatch", 0), 0u) << e.what();
  }
}

TEST(BufferApi, VersionIsSet) { EXPECT_STRNE(buffer::version(), ""); }
