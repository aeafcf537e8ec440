#pragma once

#include <csetjmp>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <jpeglib.h>
#include <png.h>

#include "das3d/error.hpp"
#include "das3d/image.hpp"
#include "json.hpp"

namespace das3d::io {

namespace fs = std::filesystem;

namespace detail {

using das3d::detail::require;

inline void require_exists(const fs::path& path) {
  std::error_code ec;
  require(fs::is_regular_file(path, ec), Errc::file_not_found, path.string());
}

inline std::uint8_t to_byte(double v) noexcept {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

inline std::vector<char> read_all(const fs::path& path) {
  require_exists(path);
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), Errc::io_failure, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_all(const fs::path& path, const std::string& bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), Errc::io_failure, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  require(static_cast<bool>(out), Errc::io_failure, "short write to " + path.string());
}

struct PngImage {
  png_image image{};
  PngImage() {
    image.version = PNG_IMAGE_VERSION;
  }
  ~PngImage() { png_image_free(&image); }
  PngImage(const PngImage&) = delete;
  PngImage& operator=(const PngImage&) = delete;
};

/// Reads a PNG into 8-bit pixels of the requested format. When `strict`, the
/// on-disk format must already match `want`.
inline std::vector<std::uint8_t> read_png(const fs::path& path, png_uint_32 want, bool strict,
                                          std::size_t& height, std::size_t& width) {
  require_exists(path);
  PngImage png;
  if (!png_image_begin_read_from_file(&png.image, path.c_str())) {
    throw Error(Errc::corrupt_header, path.string() + ": " + png.image.message);
  }
  if (strict) {
    const auto fmt = png.image.format & ~PNG_FORMAT_FLAG_COLORMAP;
    require(fmt == want, Errc::wrong_channels,
            path.string() + ": expected " + std::to_string(PNG_IMAGE_SAMPLE_CHANNELS(want)) +
                "-channel 8-bit PNG, found " + std::to_string(PNG_IMAGE_SAMPLE_CHANNELS(png.image.format)) +
                " channel(s)" + ((png.image.format & PNG_FORMAT_FLAG_LINEAR) ? " (16-bit)" : ""));
  }
  png.image.format = want;
  height = png.image.height;
  width = png.image.width;
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(png.image));
  png_color black{0, 0, 0};
  if (!png_image_finish_read(&png.image, &black, buffer.data(), 0, nullptr)) {
    throw Error(Errc::corrupt_header, path.string() + ": " + png.image.message);
  }
  return buffer;
}

inline void write_png(const fs::path& path, png_uint_32 format, std::size_t height, std::size_t width,
                      const std::vector<std::uint8_t>& pixels) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  PngImage png;
  png.image.width = static_cast<png_uint_32>(width);
  png.image.height = static_cast<png_uint_32>(height);
  png.image.format = format;
  if (!png_image_write_to_file(&png.image, path.c_str(), 0, pixels.data(), 0, nullptr)) {
    throw Error(Errc::io_failure, path.string() + ": " + png.image.message);
  }
}

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

inline void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

inline RgbImage read_jpeg(const fs::path& path) {
  const auto bytes = read_all(path);
  jpeg_decompress_struct cinfo{};
  JpegErrorManager err{};
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_exit;
  std::vector<std::uint8_t> pixels;
  std::size_t h = 0, w = 0;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw Error(Errc::corrupt_header, path.string() + ": " + err.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, reinterpret_cast<const unsigned char*>(bytes.data()),
               static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  h = cinfo.output_height;
  w = cinfo.output_width;
  pixels.resize(h * w * 3);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = pixels.data() + static_cast<std::size_t>(cinfo.output_scanline) * w * 3;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  RgbImage out(h, w);
  auto dst = out.data();
  for (std::size_t i = 0; i < pixels.size(); ++i) dst[i] = pixels[i] / 255.0;
  return out;
}

inline bool host_is_little_endian() noexcept {
  const std::uint16_t probe = 1;
  std::uint8_t first;
  std::memcpy(&first, &probe, 1);
  return first == 1;
}

inline std::uint32_t byteswap32(std::uint32_t v) noexcept {
  return (v >> 24) | ((v >> 8) & 0xff00u) | ((v << 8) & 0xff0000u) | (v << 24);
}

inline std::vector<float> decode_floats(const char* data, std::size_t count, bool little_endian) {
  std::vector<float> out(count);
  std::memcpy(out.data(), data, count * sizeof(float));
  if (little_endian != host_is_little_endian()) {
    for (auto& f : out) {
      std::uint32_t bits;
      std::memcpy(&bits, &f, 4);
      bits = byteswap32(bits);
      std::memcpy(&f, &bits, 4);
    }
  }
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// RGB (8-bit PNG)

/// Strict loader: the file must be an 8-bit, 3-channel PNG.
inline RgbImage load_rgb(const fs::path& path) {
  std::size_t h = 0, w = 0;
  const auto bytes = detail::read_png(path, PNG_FORMAT_RGB, true, h, w);
  RgbImage out(h, w);
  auto dst = out.data();
  for (std::size_t i = 0; i < bytes.size(); ++i) dst[i] = bytes[i] / 255.0;
  return out;
}

inline void save_rgb(const fs::path& path, const RgbImage& image) {
  std::vector<std::uint8_t> bytes(image.data().size());
  auto src = image.data();
  for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = detail::to_byte(src[i]);
  detail::write_png(path, PNG_FORMAT_RGB, image.height(), image.width(), bytes);
}

/// Lenient loader for texture images: PNG of any channel layout or JPEG,
/// converted to RGB.
inline RgbImage load_texture_image(const fs::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".jpg" || ext == ".jpeg") return detail::read_jpeg(path);
  std::size_t h = 0, w = 0;
  const auto bytes = detail::read_png(path, PNG_FORMAT_RGB, false, h, w);
  RgbImage out(h, w);
  auto dst = out.data();
  for (std::size_t i = 0; i < bytes.size(); ++i) dst[i] = bytes[i] / 255.0;
  return out;
}

// ---------------------------------------------------------------------------
// Masks (8-bit grayscale PNG, 0 / 255)

/// Any nonzero byte is foreground. With `strict`, bytes other than 0 and 255
/// and non-grayscale files are rejected.
inline BinaryMask load_mask(const fs::path& path, bool strict = false) {
  std::size_t h = 0, w = 0;
  const auto bytes = detail::read_png(path, PNG_FORMAT_GRAY, strict, h, w);
  BinaryMask out(h, w);
  auto dst = out.data();
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    if (strict) {
      das3d::detail::require(bytes[i] == 0 || bytes[i] == 255, Errc::corrupt_header,
                             path.string() + ": mask byte " + std::to_string(bytes[i]) + " is not 0 or 255");
    }
    dst[i] = bytes[i] != 0 ? 1 : 0;
  }
  return out;
}

inline void save_mask(const fs::path& path, const BinaryMask& mask) {
  std::vector<std::uint8_t> bytes(mask.pixels());
  auto src = mask.data();
  for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = src[i] ? 255 : 0;
  detail::write_png(path, PNG_FORMAT_GRAY, mask.height(), mask.width(), bytes);
}

// ---------------------------------------------------------------------------
// Float maps: PFM, or raw little-endian float32 with a JSON sidecar

struct FloatRaster {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 1;
  std::vector<float> values;  // row-major, top row first, interleaved channels
};

inline fs::path sidecar_path(const fs::path& raw) { return fs::path(raw.string() + ".json"); }

/// PFM ("Pf" gray / "PF" colour). Rows are stored bottom-to-top as in the
/// reference PFM definition; a negative scale marks little-endian data.
inline FloatRaster read_pfm_bytes(const std::vector<char>& bytes, const std::string& name) {
  using das3d::detail::require;
  require(bytes.size() >= 3 && bytes[0] == 'P' && (bytes[1] == 'f' || bytes[1] == 'F') &&
              std::isspace(static_cast<unsigned char>(bytes[2])),
          Errc::bad_magic, name + ": not a PFM file");
  FloatRaster r;
  r.channels = bytes[1] == 'F' ? 3 : 1;
  std::size_t pos = 2;
  auto next_token = [&]() {
    while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    const std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    require(pos < bytes.size() && pos > start, Errc::corrupt_header, name + ": truncated PFM header");
    return std::string(bytes.data() + start, pos - start);
  };
  double scale = 0.0;
  try {
    r.width = std::stoul(next_token());
    r.height = std::stoul(next_token());
    scale = std::stod(next_token());
  } catch (const std::logic_error&) {
    throw Error(Errc::corrupt_header, name + ": malformed PFM header");
  }
  require(r.width > 0 && r.height > 0 && scale != 0.0, Errc::corrupt_header, name + ": invalid PFM header values");
  ++pos;  // single whitespace byte terminates the header
  const std::size_t count = r.width * r.height * r.channels;
  require(bytes.size() - pos == count * sizeof(float), Errc::dimension_mismatch,
          name + ": PFM payload has " + std::to_string(bytes.size() - pos) + " bytes, header implies " +
              std::to_string(count * sizeof(float)));
  const auto rows_bottom_up = detail::decode_floats(bytes.data() + pos, count, scale < 0.0);
  r.values.resize(count);
  const std::size_t row_len = r.width * r.channels;
  for (std::size_t y = 0; y < r.height; ++y) {
    std::copy_n(rows_bottom_up.begin() + static_cast<std::ptrdiff_t>((r.height - 1 - y) * row_len), row_len,
                r.values.begin() + static_cast<std::ptrdiff_t>(y * row_len));
  }
  return r;
}

inline std::string encode_pfm(const FloatRaster& r) {
  std::ostringstream header;
  header << (r.channels == 3 ? "PF" : "Pf") << '\n' << r.width << ' ' << r.height << '\n'
         << (detail::host_is_little_endian() ? "-1.0" : "1.0") << '\n';
  std::string out = header.str();
  const std::size_t row_len = r.width * r.channels;
  const std::size_t start = out.size();
  out.resize(start + r.values.size() * sizeof(float));
  for (std::size_t y = 0; y < r.height; ++y) {
    std::memcpy(out.data() + start + y * row_len * sizeof(float), r.values.data() + (r.height - 1 - y) * row_len,
                row_len * sizeof(float));
  }
  return out;
}

inline FloatRaster read_raw_with_sidecar(const fs::path& path, const std::vector<char>& bytes) {
  using das3d::detail::require;
  const auto side = sidecar_path(path);
  const auto side_bytes = detail::read_all(side);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(side_bytes.begin(), side_bytes.end());
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::corrupt_header, side.string() + ": " + e.what());
  }
  FloatRaster r;
  try {
    r.height = header.at("height").get<std::size_t>();
    r.width = header.at("width").get<std::size_t>();
    r.channels = header.value("channels", std::size_t{1});
    require(header.at("dtype").get<std::string>() == "f32", Errc::corrupt_header, side.string() + ": dtype must be f32");
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::corrupt_header, side.string() + ": " + e.what());
  }
  const std::size_t count = r.height * r.width * r.channels;
  require(bytes.size() == count * sizeof(float), Errc::dimension_mismatch,
          path.string() + ": raw payload has " + std::to_string(bytes.size()) + " bytes, sidecar implies " +
              std::to_string(count * sizeof(float)));
  r.values = detail::decode_floats(bytes.data(), count, true);
  return r;
}

/// Reads a PFM file, or a raw little-endian float32 file described by
/// `<path>.json` ({"height":H,"width":W,"dtype":"f32"[,"channels":C]}).
inline FloatRaster read_float_raster(const fs::path& path) {
  const auto bytes = detail::read_all(path);
  if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == 'f' || bytes[1] == 'F')) {
    return read_pfm_bytes(bytes, path.string());
  }
  std::error_code ec;
  if (fs::is_regular_file(sidecar_path(path), ec)) return read_raw_with_sidecar(path, bytes);
  throw Error(Errc::bad_magic, path.string() + ": neither PFM nor raw float with sidecar");
}

inline void write_float_raster(const fs::path& path, const FloatRaster& r) {
  detail::write_all(path, encode_pfm(r));
}

inline void write_raw_with_sidecar(const fs::path& path, const FloatRaster& r) {
  const auto* p = reinterpret_cast<const char*>(r.values.data());
  std::string bytes(p, p + r.values.size() * sizeof(float));
  if (!detail::host_is_little_endian()) {
    auto swapped = detail::decode_floats(bytes.data(), r.values.size(), false);
    std::memcpy(bytes.data(), swapped.data(), bytes.size());
  }
  detail::write_all(path, bytes);
  nlohmann::json side{{"height", r.height}, {"width", r.width}, {"dtype", "f32"}};
  if (r.channels != 1) side["channels"] = r.channels;
  detail::write_all(sidecar_path(path), side.dump() + "\n");
}

template <typename Img>
Img load_single_channel(const fs::path& path) {
  const auto r = read_float_raster(path);
  das3d::detail::require(r.channels == 1, Errc::wrong_channels, path.string() + ": expected a single-channel float map");
  Img out(r.height, r.width);
  auto dst = out.data();
  for (std::size_t i = 0; i < r.values.size(); ++i) dst[i] = r.values[i];
  return out;
}

template <typename Img>
void save_single_channel(const fs::path& path, const Img& image) {
  FloatRaster r{image.height(), image.width(), 1, {}};
  r.values.assign(image.data().begin(), image.data().end());
  write_float_raster(path, r);
}

/// Values are read verbatim; normalize before synthesis.
inline DepthImage load_depth(const fs::path& path) { return load_single_channel<DepthImage>(path); }
inline void save_depth(const fs::path& path, const DepthImage& depth) { save_single_channel(path, depth); }

inline FloatMap load_float_map(const fs::path& path) { return load_single_channel<FloatMap>(path); }
inline void save_float_map(const fs::path& path, const FloatMap& map) { save_single_channel(path, map); }

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json load_json(const fs::path& path) {
  const auto bytes = detail::read_all(path);
  try {
    return nlohmann::json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::corrupt_header, path.string() + ": " + e.what());
  }
}

inline void save_json(const fs::path& path, const nlohmann::json& value) {
  detail::write_all(path, value.dump(2) + "\n");
}

}  // namespace das3d::io
