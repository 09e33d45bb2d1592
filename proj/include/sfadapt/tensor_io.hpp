#pragma once

#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "sfadapt/grid.hpp"

namespace sfa {

// SRT1 layout: the 4 bytes "SRT1", one JSON object terminated by '\n', then
// the raw little-endian payload. See docs/srt1_format.md.
inline constexpr char kSrt1Magic[4] = {'S', 'R', 'T', '1'};

enum class TensorKind { kImage, kMask, kProb };

using Tensor = std::variant<GridImage, LabelMask, ProbabilityMap>;

// In-memory encoding. `decode_tensor(encode_tensor(t)) == t` for any valid
// tensor, and re-encoding bytes produced by encode_tensor reproduces them.
std::string encode_tensor(const GridImage& image);
std::string encode_tensor(const LabelMask& mask);
std::string encode_tensor(const ProbabilityMap& prob);
Tensor decode_tensor(const std::string& bytes);

void write_tensor(const GridImage& image, const std::filesystem::path& path);
void write_tensor(const LabelMask& mask, const std::filesystem::path& path);
void write_tensor(const ProbabilityMap& prob,
                  const std::filesystem::path& path);
Tensor read_tensor(const std::filesystem::path& path);

// Typed helpers that throw FormatError when the file holds another kind.
// `read_image` also accepts .pgm/.ppm files.
GridImage read_image(const std::filesystem::path& path);
LabelMask read_mask(const std::filesystem::path& path);
ProbabilityMap read_prob(const std::filesystem::path& path);

// Binary PNM (P5 grayscale / P6 RGB, maxval 255), 2-D only.
GridImage read_pnm(const std::filesystem::path& path);
void write_pnm(const GridImage& image, const std::filesystem::path& path);
GridImage decode_pnm(const std::string& bytes);
std::string encode_pnm(const GridImage& image);

// File-backed manifest of the adaptation set.
void write_manifest(const AdaptManifest& manifest,
                    const std::filesystem::path& path);
AdaptManifest read_manifest(const std::filesystem::path& path);
// Relative entry paths are resolved against `base_dir` (normally the
// manifest's directory).
std::vector<std::string> validate_manifest(
    const AdaptManifest& manifest, const std::filesystem::path& base_dir = {});

// Whole-file helpers shared by the CLI.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& bytes);

}  // namespace sfa
