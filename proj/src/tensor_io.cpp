#include "sfadapt/tensor_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "sfadapt/errors.hpp"

namespace sfa {
namespace {

using nlohmann::json;

const char* kind_name(TensorKind k) {
  switch (k) {
    case TensorKind::kImage:
      return "image";
    case TensorKind::kMask:
      return "mask";
    case TensorKind::kProb:
      return "prob";
  }
  return "?";
}

[[noreturn]] void malformed(const std::string& why) {
  throw FormatError(FormatErrorKind::kMalformedHeader,
                    "malformed header: " + why);
}

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>(v >> 8));
}

void put_f32(std::string& out, float v) {
  const auto bits = std::bit_cast<std::uint32_t>(v);
  for (int i = 0; i < 4; ++i) {
    out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
  }
}

std::uint16_t get_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

float get_f32(const unsigned char* p) {
  std::uint32_t bits = 0;
  for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return std::bit_cast<float>(bits);
}

// Appends `v` encoded as `dtype`, refusing values the dtype cannot hold.
void put_value(std::string& out, double v, DType dtype) {
  switch (dtype) {
    case DType::kU8:
      if (!(v >= 0 && v <= 255 && v == std::floor(v))) {
        throw FormatError(FormatErrorKind::kNotRepresentable,
                          "value " + std::to_string(v) + " is not a u8");
      }
      out.push_back(static_cast<char>(static_cast<unsigned char>(v)));
      break;
    case DType::kU16:
      if (!(v >= 0 && v <= 65535 && v == std::floor(v))) {
        throw FormatError(FormatErrorKind::kNotRepresentable,
                          "value " + std::to_string(v) + " is not a u16");
      }
      put_u16(out, static_cast<std::uint16_t>(v));
      break;
    case DType::kF32:
      put_f32(out, static_cast<float>(v));
      break;
  }
}

double get_value(const unsigned char* p, DType dtype) {
  switch (dtype) {
    case DType::kU8:
      return p[0];
    case DType::kU16:
      return get_u16(p);
    case DType::kF32:
      return get_f32(p);
  }
  return 0;
}

std::string encode(const Grid& grid, int channels, DType dtype,
                   TensorKind kind, json extra,
                   const std::string& payload) {
  json header = std::move(extra);
  header["dims"] = grid.dims;
  header["spacing"] = grid.spacing;
  header["channels"] = channels;
  header["dtype"] = dtype_name(dtype);
  header["kind"] = kind_name(kind);
  header["payload_bytes"] = payload.size();
  std::string out(kSrt1Magic, 4);
  out += header.dump();
  out.push_back('\n');
  out += payload;
  return out;
}

}  // namespace

std::string encode_tensor(const GridImage& image) {
  std::string payload;
  payload.reserve(image.values().size() * dtype_size(image.dtype()));
  for (float v : image.values()) put_value(payload, v, image.dtype());
  return encode(image.grid(), image.channels(), image.dtype(),
                TensorKind::kImage, json::object(), payload);
}

std::string encode_tensor(const LabelMask& mask) {
  const auto labels = mask.labels();
  const Label max_label =
      labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end());
  if (max_label > 65535) {
    throw FormatError(FormatErrorKind::kNotRepresentable,
                      "label " + std::to_string(max_label) +
                          " does not fit in u16");
  }
  const DType dtype = max_label <= 255 ? DType::kU8 : DType::kU16;
  std::string payload;
  payload.reserve(labels.size() * dtype_size(dtype));
  for (Label l : labels) put_value(payload, l, dtype);
  json classes = json::object();
  for (const auto& [label, name] : mask.class_names()) {
    classes[std::to_string(label)] = name;
  }
  json extra = json::object();
  extra["classes"] = classes;
  return encode(mask.grid(), 1, dtype, TensorKind::kMask, std::move(extra),
                payload);
}

std::string encode_tensor(const ProbabilityMap& prob) {
  std::string payload;
  payload.reserve(prob.values().size() * 4);
  for (float v : prob.values()) put_f32(payload, v);
  json extra = json::object();
  extra["labels"] = std::vector<Label>(prob.class_labels().begin(),
                                       prob.class_labels().end());
  return encode(prob.grid(), static_cast<int>(prob.class_labels().size()),
                DType::kF32, TensorKind::kProb, std::move(extra), payload);
}

Tensor decode_tensor(const std::string& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kSrt1Magic, 4) != 0) {
    throw FormatError(FormatErrorKind::kBadMagic, "bad magic");
  }
  const auto newline = bytes.find('\n', 4);
  if (newline == std::string::npos) malformed("no terminating newline");

  json header;
  try {
    header = json::parse(bytes.begin() + 4,
                         bytes.begin() + static_cast<std::ptrdiff_t>(newline));
  } catch (const json::exception& e) {
    malformed(e.what());
  }

  Grid grid;
  int channels = 0;
  std::string dtype_str;
  std::string kind;
  std::size_t payload_bytes = 0;
  try {
    grid.dims = header.at("dims").get<std::vector<std::size_t>>();
    grid.spacing = header.at("spacing").get<std::vector<double>>();
    channels = header.at("channels").get<int>();
    dtype_str = header.at("dtype").get<std::string>();
    kind = header.at("kind").get<std::string>();
    payload_bytes = header.at("payload_bytes").get<std::size_t>();
  } catch (const json::exception& e) {
    malformed(e.what());
  }
  try {
    check_grid(grid);
  } catch (const InvalidArgument& e) {
    malformed(e.what());
  }
  const auto dtype = parse_dtype(dtype_str);
  if (!dtype) malformed("unknown dtype '" + dtype_str + "'");
  if (channels < 1) malformed("channels must be positive");

  const std::size_t count =
      grid.voxel_count() * static_cast<std::size_t>(channels);
  if (count * dtype_size(*dtype) != payload_bytes) {
    throw FormatError(FormatErrorKind::kPayloadLengthMismatch,
                      "payload_bytes does not match dims x channels x dtype");
  }
  const std::size_t available = bytes.size() - newline - 1;
  if (available < payload_bytes) {
    throw FormatError(FormatErrorKind::kTruncatedPayload,
                      "truncated payload: expected " +
                          std::to_string(payload_bytes) + " bytes, found " +
                          std::to_string(available));
  }
  if (available > payload_bytes) {
    throw FormatError(FormatErrorKind::kPayloadLengthMismatch,
                      "trailing bytes after payload");
  }

  const auto* p =
      reinterpret_cast<const unsigned char*>(bytes.data() + newline + 1);
  const std::size_t stride = dtype_size(*dtype);

  if (kind == "image") {
    if (channels != 1 && channels != 3) malformed("image channels must be 1 or 3");
    std::vector<float> values(count);
    for (std::size_t i = 0; i < count; ++i) {
      values[i] = static_cast<float>(get_value(p + i * stride, *dtype));
    }
    return GridImage(std::move(grid), channels, std::move(values), *dtype);
  }
  if (kind == "mask") {
    if (channels != 1) malformed("mask must have one channel");
    if (*dtype == DType::kF32) malformed("mask dtype must be u8 or u16");
    ClassNames names;
    try {
      if (header.contains("classes")) {
        for (const auto& [key, value] : header.at("classes").items()) {
          names[std::stoi(key)] = value.get<std::string>();
        }
      }
    } catch (const std::exception& e) {
      malformed(std::string("classes: ") + e.what());
    }
    std::vector<Label> labels(count);
    for (std::size_t i = 0; i < count; ++i) {
      labels[i] = static_cast<Label>(get_value(p + i * stride, *dtype));
    }
    try {
      return LabelMask(std::move(grid), std::move(labels), std::move(names));
    } catch (const InvalidArgument& e) {
      malformed(e.what());
    }
  }
  if (kind == "prob") {
    if (*dtype != DType::kF32) malformed("prob dtype must be f32");
    std::vector<Label> labels;
    try {
      labels = header.at("labels").get<std::vector<Label>>();
    } catch (const json::exception& e) {
      malformed(e.what());
    }
    if (labels.size() != static_cast<std::size_t>(channels)) {
      malformed("prob labels count differs from channels");
    }
    std::vector<float> values(count);
    for (std::size_t i = 0; i < count; ++i) {
      values[i] = get_f32(p + i * 4);
      if (!(values[i] >= 0.0f && values[i] <= 1.0f)) {
        throw FormatError(FormatErrorKind::kProbabilityOutOfRange,
                          "probability out of range");
      }
    }
    try {
      return ProbabilityMap(std::move(grid), std::move(labels),
                            std::move(values));
    } catch (const InvalidArgument& e) {
      malformed(e.what());
    }
  }
  malformed("unknown kind '" + kind + "'");
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failed: " + path.string());
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

void write_tensor(const GridImage& image, const std::filesystem::path& path) {
  write_file(path, encode_tensor(image));
}
void write_tensor(const LabelMask& mask, const std::filesystem::path& path) {
  write_file(path, encode_tensor(mask));
}
void write_tensor(const ProbabilityMap& prob,
                  const std::filesystem::path& path) {
  write_file(path, encode_tensor(prob));
}

Tensor read_tensor(const std::filesystem::path& path) {
  return decode_tensor(read_file(path));
}

namespace {

bool is_pnm_path(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return ext == ".pgm" || ext == ".ppm" || ext == ".pnm";
}

template <typename T>
T expect_kind(Tensor t, const std::filesystem::path& path, const char* want) {
  if (auto* v = std::get_if<T>(&t)) return std::move(*v);
  throw FormatError(FormatErrorKind::kMalformedHeader,
                    path.string() + ": expected a " + want + " tensor");
}

}  // namespace

GridImage read_image(const std::filesystem::path& path) {
  if (is_pnm_path(path)) return read_pnm(path);
  return expect_kind<GridImage>(read_tensor(path), path, "image");
}

LabelMask read_mask(const std::filesystem::path& path) {
  return expect_kind<LabelMask>(read_tensor(path), path, "mask");
}

ProbabilityMap read_prob(const std::filesystem::path& path) {
  return expect_kind<ProbabilityMap>(read_tensor(path), path, "prob");
}

// --- PNM -------------------------------------------------------------------

namespace {

struct PnmCursor {
  const std::string& bytes;
  std::size_t pos = 0;

  void skip_space_and_comments() {
    while (pos < bytes.size()) {
      const char c = bytes[pos];
      if (c == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos;
      } else {
        break;
      }
    }
  }

  std::size_t number() {
    skip_space_and_comments();
    std::size_t start = pos;
    std::size_t v = 0;
    while (pos < bytes.size() &&
           std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
      v = v * 10 + static_cast<std::size_t>(bytes[pos] - '0');
      ++pos;
    }
    if (pos == start) {
      throw FormatError(FormatErrorKind::kMalformedHeader,
                        "malformed PNM header");
    }
    return v;
  }
};

}  // namespace

GridImage decode_pnm(const std::string& bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P') {
    throw FormatError(FormatErrorKind::kBadMagic, "bad magic");
  }
  int channels = 0;
  if (bytes[1] == '5') {
    channels = 1;
  } else if (bytes[1] == '6') {
    channels = 3;
  } else {
    throw FormatError(FormatErrorKind::kUnsupportedVariant,
                      std::string("unsupported PNM variant P") + bytes[1] +
                          " (only binary P5/P6)");
  }
  PnmCursor cur{bytes, 2};
  const std::size_t width = cur.number();
  const std::size_t height = cur.number();
  const std::size_t maxval = cur.number();
  if (maxval != 255) {
    throw FormatError(FormatErrorKind::kUnsupportedVariant,
                      "only maxval 255 is supported");
  }
  if (width == 0 || height == 0) {
    throw FormatError(FormatErrorKind::kMalformedHeader, "empty PNM image");
  }
  // Exactly one whitespace byte separates the header from the raster.
  if (cur.pos >= bytes.size() ||
      !std::isspace(static_cast<unsigned char>(bytes[cur.pos]))) {
    throw FormatError(FormatErrorKind::kMalformedHeader,
                      "malformed PNM header");
  }
  ++cur.pos;
  const std::size_t count = width * height * static_cast<std::size_t>(channels);
  if (bytes.size() - cur.pos < count) {
    throw FormatError(FormatErrorKind::kTruncatedPayload, "truncated payload");
  }
  std::vector<float> values(count);
  for (std::size_t i = 0; i < count; ++i) {
    values[i] = static_cast<unsigned char>(bytes[cur.pos + i]);
  }
  return GridImage(Grid{{height, width}, {1.0, 1.0}}, channels,
                   std::move(values), DType::kU8);
}

std::string encode_pnm(const GridImage& image) {
  if (image.grid().rank() != 2) {
    throw InvalidArgument("PNM supports 2-D images only");
  }
  std::string out = image.channels() == 1 ? "P5\n" : "P6\n";
  out += std::to_string(image.grid().dims[1]) + " " +
         std::to_string(image.grid().dims[0]) + "\n255\n";
  for (float v : image.values()) put_value(out, v, DType::kU8);
  return out;
}

GridImage read_pnm(const std::filesystem::path& path) {
  return decode_pnm(read_file(path));
}

void write_pnm(const GridImage& image, const std::filesystem::path& path) {
  write_file(path, encode_pnm(image));
}

// --- manifest --------------------------------------------------------------

void write_manifest(const AdaptManifest& manifest,
                    const std::filesystem::path& path) {
  json doc;
  doc["entries"] = json::array();
  for (const auto& e : manifest.entries) {
    doc["entries"].push_back({{"case", e.case_id},
                              {"image", e.image.generic_string()},
                              {"pseudo_label", e.pseudo_label.generic_string()}});
  }
  doc["provenance"] = manifest.provenance;
  write_file(path, doc.dump(2) + "\n");
}

AdaptManifest read_manifest(const std::filesystem::path& path) {
  AdaptManifest m;
  try {
    const json doc = json::parse(read_file(path));
    for (const auto& e : doc.at("entries")) {
      m.entries.push_back({e.at("case").get<std::string>(),
                           e.at("image").get<std::string>(),
                           e.at("pseudo_label").get<std::string>()});
    }
    if (doc.contains("provenance")) {
      m.provenance =
          doc.at("provenance").get<std::map<std::string, std::string>>();
    }
  } catch (const json::exception& e) {
    throw FormatError(FormatErrorKind::kMalformedHeader,
                      "malformed manifest: " + std::string(e.what()));
  }
  return m;
}

std::vector<std::string> validate_manifest(
    const AdaptManifest& manifest, const std::filesystem::path& base_dir) {
  auto resolve = [&](const std::filesystem::path& p) {
    return p.is_relative() ? base_dir / p : p;
  };
  std::vector<std::string> violations;
  for (const auto& e : manifest.entries) {
    bool present = true;
    for (const auto& p : {resolve(e.image), resolve(e.pseudo_label)}) {
      if (!std::filesystem::exists(p)) {
        violations.push_back(e.case_id + ": missing file " + p.string());
        present = false;
      }
    }
    if (!present) continue;
    try {
      const auto image = read_image(resolve(e.image));
      const auto mask = read_mask(resolve(e.pseudo_label));
      if (image.grid().dims != mask.grid().dims) {
        violations.push_back(e.case_id + ": dims mismatch");
      }
    } catch (const Error& err) {
      violations.push_back(e.case_id + ": " + err.what());
    }
  }
  return violations;
}

}  // namespace sfa
