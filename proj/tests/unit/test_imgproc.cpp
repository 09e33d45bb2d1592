#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "sfadapt/errors.hpp"
#include "sfadapt/imgproc.hpp"

using namespace sfa;

namespace {

GridImage random_u8(std::mt19937_64& rng, std::vector<std::size_t> dims, int lo = 0,
                    int hi = 255) {
  Grid g{dims, std::vector<double>(dims.size(), 1.0)};
  std::uniform_int_distribution<int> d(lo, hi);
  std::vector<float> v(g.voxel_count());
  for (auto& x : v) x = float(d(rng));
  return GridImage(g, 1, v, DType::kU8);
}

// Direct evaluation of round((cdf(v) - cdf_min) / (N - cdf_min) * (L - 1)).
std::vector<std::uint32_t> naive_table(const std::vector<std::uint32_t>& q, int levels) {
  std::vector<double> cdf(std::size_t(levels), 0.0);
  for (auto v : q) cdf[v] += 1;
  for (std::size_t i = 1; i < cdf.size(); ++i) cdf[i] += cdf[i - 1];
  double cmin = 0;
  for (double c : cdf)
    if (c > 0) {
      cmin = c;
      break;
    }
  const double n = double(q.size());
  std::vector<std::uint32_t> t(cdf.size(), 0);
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (cdf[i] < cmin) continue;
    t[i] = std::uint32_t(std::floor((cdf[i] - cmin) / (n - cmin) * (levels - 1) + 0.5));
  }
  return t;
}

}  // namespace

TEST(Histogram, CountsAndCumulative) {
  const std::vector<std::uint32_t> q{0, 1, 1, 3, 3, 3};
  const auto h = compute_histogram(q, 4);
  EXPECT_EQ(h.counts, (std::vector<std::uint64_t>{1, 2, 0, 3}));
  EXPECT_EQ(h.cumulative, (std::vector<std::uint64_t>{1, 3, 3, 6}));
  EXPECT_EQ(h.total(), 6u);
  EXPECT_THROW(compute_histogram({4}, 4), InvalidArgument);
  EXPECT_THROW(compute_histogram(q, 1), InvalidArgument);
}

TEST(Equalize, UniformHistogramIsIdentity) {
  std::vector<float> v(256);
  for (int i = 0; i < 256; ++i) v[std::size_t(i)] = float(i);
  GridImage img(Grid{{16, 16}, {1, 1}}, 1, v, DType::kU8);
  const auto out = histogram_equalize(img);
  EXPECT_EQ(out, img);
}

TEST(Equalize, FourLevelRampUnchanged) {
  GridImage img(Grid{{2, 2}, {1, 1}}, 1, {0, 1, 2, 3});
  EqualizeOptions opt;
  opt.levels = 4;
  const auto out = histogram_equalize(img, opt);
  EXPECT_EQ(std::vector<float>(out.values().begin(), out.values().end()),
            (std::vector<float>{0, 1, 2, 3}));
}

TEST(Equalize, KnownSmallCase) {
  // Levels {0:2, 2:1, 5:1} over L=8: cdf_min=2, N=4.
  GridImage img(Grid{{2, 2}, {1, 1}}, 1, {0, 0, 2, 5}, DType::kU16);
  const auto q = std::vector<std::uint32_t>{0, 0, 2, 5};
  const auto table = equalization_table(compute_histogram(q, 8));
  ASSERT_TRUE(table);
  EXPECT_EQ((*table)[0], 0u);
  EXPECT_EQ((*table)[2], 4u);  // (3-2)/2*7 = 3.5 -> 4
  EXPECT_EQ((*table)[5], 7u);
}

TEST(Equalize, TableMatchesNaiveFormula) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 40; ++trial) {
    const int levels = trial % 2 ? 256 : 17;
    std::uniform_int_distribution<std::uint32_t> d(0, std::uint32_t(levels - 1));
    std::vector<std::uint32_t> q(200);
    for (auto& x : q) x = d(rng) / (trial % 3 + 1);
    const auto table = equalization_table(compute_histogram(q, levels));
    ASSERT_TRUE(table);
    const auto expect = naive_table(q, levels);
    for (auto v : q) EXPECT_EQ((*table)[v], expect[v]);
  }
}

TEST(Equalize, MonotoneAndSpansRange) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const auto img = random_u8(rng, {20, 25}, 40, 120);
    const auto out = histogram_equalize(img);
    EXPECT_EQ(out.dtype(), DType::kU8);
    const auto in = img.values();
    const auto eq = out.values();
    float lo = 255, hi = 0;
    for (std::size_t i = 0; i < in.size(); ++i) {
      lo = std::min(lo, eq[i]);
      hi = std::max(hi, eq[i]);
      for (std::size_t j = i + 1; j < std::min(in.size(), i + 40); ++j) {
        if (in[i] < in[j]) EXPECT_LE(eq[i], eq[j]);
        if (in[i] == in[j]) EXPECT_EQ(eq[i], eq[j]);
      }
    }
    EXPECT_EQ(lo, 0.0f);
    EXPECT_EQ(hi, 255.0f);
  }
}

TEST(Equalize, ConstantImageUnchanged) {
  GridImage flat(Grid{{4, 4}, {1, 1}}, 1, std::vector<float>(16, 77.f), DType::kU8);
  EXPECT_EQ(histogram_equalize(flat), flat);
  GridImage flatf(Grid{{2, 2, 2}, {1, 1, 1}}, 1, std::vector<float>(8, -3.f));
  EXPECT_EQ(histogram_equalize(flatf), flatf);
}

TEST(Equalize, FloatImagesAreQuantizedFirst) {
  GridImage img(Grid{{1, 4}, {1, 1}}, 1, {-1000.f, 0.f, 500.f, 1000.f});
  const auto out = histogram_equalize(img);
  EXPECT_EQ(out.dtype(), DType::kU8);
  EXPECT_EQ(out.at(0), 0.f);
  EXPECT_EQ(out.at(3), 255.f);
}

TEST(Equalize, SixtyFiveThousandLevels) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<float> u(0.f, 4000.f);
  std::vector<float> v(1000);
  for (auto& x : v) x = u(rng);
  GridImage img(Grid{{10, 100}, {1, 1}}, 1, v, DType::kF32);
  EqualizeOptions opt;
  opt.levels = 65536;
  const auto out = histogram_equalize(img, opt);
  EXPECT_EQ(out.dtype(), DType::kU16);
  float hi = 0;
  for (float x : out.values()) {
    EXPECT_GE(x, 0.f);
    EXPECT_LE(x, 65535.f);
    hi = std::max(hi, x);
  }
  EXPECT_EQ(hi, 65535.f);
}

TEST(Equalize, PerSliceUsesSliceHistograms) {
  // Slice 0 spans 0..3, slice 1 is constant; global vs per-slice differ.
  GridImage vol(Grid{{2, 1, 4}, {1, 1, 1}}, 1, {0, 1, 2, 3, 200, 200, 200, 200},
                DType::kU8);
  EqualizeOptions opt;
  opt.per_slice = true;
  const auto out = histogram_equalize(vol, opt);
  EXPECT_EQ(out.at(0), 0.f);
  EXPECT_EQ(out.at(1), 85.f);
  EXPECT_EQ(out.at(3), 255.f);
  for (std::size_t i = 4; i < 8; ++i) EXPECT_EQ(out.at(i), 200.f);

  const auto global = histogram_equalize(vol);
  EXPECT_NE(global, out);
}

TEST(Equalize, SerialMatchesParallel) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    const auto img = random_u8(rng, {7, 30, 31});
    EqualizeOptions par, ser;
    ser.exec = Exec::kSerial;
    EXPECT_EQ(histogram_equalize(img, par), histogram_equalize(img, ser));
    par.per_slice = ser.per_slice = true;
    EXPECT_EQ(histogram_equalize(img, par), histogram_equalize(img, ser));
  }
}

TEST(Equalize, RejectsColourAndBadLevels) {
  GridImage rgb(Grid{{1, 1}, {1, 1}}, 3, {1, 2, 3}, DType::kU8);
  EXPECT_THROW(histogram_equalize(rgb), InvalidArgument);
  GridImage g(Grid{{1, 1}, {1, 1}}, 1, {1}, DType::kU8);
  EqualizeOptions opt;
  opt.levels = 1;
  EXPECT_THROW(histogram_equalize(g, opt), InvalidArgument);
}

TEST(IntensitySamples, MaskSelectsVoxels) {
  GridImage img(Grid{{1, 3}, {1, 1}}, 3, {1, 2, 3, 4, 5, 6, 7, 8, 9});
  LabelMask m(Grid{{1, 3}, {1, 1}}, {0, 2, 0}, {});
  EXPECT_EQ(intensity_samples(img, &m), (std::vector<double>{4, 5, 6}));
  EXPECT_EQ(intensity_samples(img).size(), 9u);
}
