#include "fixtures.hpp"

#include <atomic>
#include <fstream>

#include "sfadapt/tensor_io.hpp"

#ifndef SFADAPT_FIXTURE_DIR
#error "SFADAPT_FIXTURE_DIR must point at tests/fixtures"
#endif

namespace fixtures {

fs::path dir() { return fs::path(SFADAPT_FIXTURE_DIR); }

TempDir::TempDir() {
  static std::atomic<unsigned> counter{0};
  std::random_device rd;
  const auto tag = std::to_string(rd()) + "_" + std::to_string(counter++);
  path_ = fs::temp_directory_path() / ("sfadapt_test_" + tag);
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

std::vector<std::string> lines(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

sfa::LabelMask random_mask(std::mt19937_64& rng, const std::vector<std::size_t>& dims,
                           double density, int classes, std::vector<double> spacing) {
  if (spacing.empty()) spacing.assign(dims.size(), 1.0);
  sfa::Grid g{dims, spacing};
  std::bernoulli_distribution fg(density);
  std::uniform_int_distribution<int> cls(1, classes);
  std::vector<sfa::Label> labels(g.voxel_count());
  for (auto& l : labels) l = fg(rng) ? cls(rng) : 0;
  sfa::ClassNames names;
  for (int c = 1; c <= classes; ++c) names[c] = "class" + std::to_string(c);
  return sfa::LabelMask(g, std::move(labels), names);
}

namespace {

constexpr std::size_t kSide = 20;
constexpr sfa::Label kLiver = 1;
constexpr sfa::Label kSpleen = 2;

struct Canvas {
  std::vector<sfa::Label> labels = std::vector<sfa::Label>(kSide * kSide, 0);
  void fill(std::size_t r0, std::size_t c0, std::size_t h, std::size_t w, sfa::Label l) {
    for (std::size_t r = r0; r < r0 + h; ++r)
      for (std::size_t c = c0; c < c0 + w; ++c) labels[r * kSide + c] = l;
  }
};

void liver_blobs(Canvas& c, bool skip_centre) {
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      if (skip_centre && i == 1 && j == 1) continue;
      c.fill(2 + 4 * i, 2 + 4 * j, 2, 2, kLiver);
    }
}

void outlier(Canvas& c) { c.fill(14, 14, 2, 2, kLiver); }
void spleen(Canvas& c, std::size_t col) { c.fill(14, col, 4, 4, kSpleen); }

}  // namespace

void write_synthetic_set(const fs::path& root) {
  const sfa::Grid grid{{kSide, kSide}, {1.0, 1.0}};
  const sfa::ClassNames names{{kLiver, "liver"}, {kSpleen, "spleen"}};
  for (const char* sub : {"images", "masks", "probs", "gt"}) fs::create_directories(root / sub);

  // Intensities: background 20, liver 100, spleen 180, bright artefact 250.
  std::vector<float> pixels(kSide * kSide, 20.0f);
  {
    Canvas c;
    liver_blobs(c, false);
    outlier(c);
    spleen(c, 2);
    for (std::size_t v = 0; v < pixels.size(); ++v) {
      if (c.labels[v] == kSpleen) pixels[v] = 180.0f;
      if (c.labels[v] == kLiver) pixels[v] = 100.0f;
    }
    for (std::size_t r = 14; r < 16; ++r)
      for (std::size_t col = 14; col < 16; ++col) pixels[r * kSide + col] = 250.0f;
  }
  const sfa::GridImage image(grid, 1, pixels, sfa::DType::kU8);

  Canvas truth;
  liver_blobs(truth, false);
  spleen(truth, 2);

  for (int k = 0; k < 5; ++k) {
    Canvas pred;
    liver_blobs(pred, k == 1);
    if (k != 4) outlier(pred);
    if (k == 3) {
      spleen(pred, 3);
    } else if (k != 2) {
      spleen(pred, 2);
    }

    std::vector<float> prob(kSide * kSide * 2, 0.05f);
    for (std::size_t v = 0; v < kSide * kSide; ++v) {
      if (pred.labels[v] == kLiver) prob[2 * v] = 0.9f;
      if (pred.labels[v] == kSpleen) prob[2 * v + 1] = 0.8f;
    }

    const std::string id = "case" + std::to_string(k);
    if (k == 4) {
      sfa::write_pnm(image, root / "images" / (id + ".pgm"));
    } else {
      sfa::write_tensor(image, root / "images" / (id + ".srt"));
    }
    sfa::write_tensor(sfa::LabelMask(grid, pred.labels, names), root / "masks" / (id + ".srt"));
    sfa::write_tensor(sfa::ProbabilityMap(grid, {kLiver, kSpleen}, prob),
                      root / "probs" / (id + ".srt"));
    sfa::write_tensor(sfa::LabelMask(grid, truth.labels, names), root / "gt" / (id + ".srt"));
  }

  std::ofstream(root / "priors.json") << R"({
  "_provenance": "synthetic test fixture",
  "liver": {"prob": [2, 1], "r": [2, 5], "g": [2, 5], "b": [2, 5]},
  "spleen": {"prob": [2, 1], "r": [3, 3], "g": [3, 3], "b": [3, 3]}
}
)";
}

}  // namespace fixtures
