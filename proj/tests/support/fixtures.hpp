#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "sfadapt/grid.hpp"

namespace fixtures {

namespace fs = std::filesystem;

// Source tree fixtures (tests/fixtures).
fs::path dir();

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

// Non-empty lines of a text file.
std::vector<std::string> lines(const fs::path& p);

// Random label mask: each voxel is 0 with probability 1 - density, otherwise
// a label in [1, classes].
sfa::LabelMask random_mask(std::mt19937_64& rng, const std::vector<std::size_t>& dims,
                           double density, int classes,
                           std::vector<double> spacing = {});

// 20x20 synthetic refinement/evaluation set: five cases of a nine-blob
// "liver" plus a square "spleen", with a bright outlier blob planted in
// the pseudo-labels. Layout under `root`:
//   images/ masks/ probs/ gt/ priors.json
void write_synthetic_set(const fs::path& root);

}  // namespace fixtures
