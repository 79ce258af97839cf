#ifndef RECURNET_IMAGE_IO_HPP
#define RECURNET_IMAGE_IO_HPP

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace recurnet {

/// 8-bit RGB image, interleaved, row-major.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  bool operator==(const RgbImage&) const = default;
};

std::vector<std::uint8_t> encode_ppm(const RgbImage& img);
RgbImage decode_ppm(std::span<const std::uint8_t> bytes);

/// Truecolor 8-bit PNG, one IDAT chunk, filter type 0 on every row.
std::vector<std::uint8_t> encode_png(const RgbImage& img);
/// Reads 8-bit truecolor, non-interlaced PNGs (all five row filters).
RgbImage decode_png(std::span<const std::uint8_t> bytes);

enum class ImageFormat { ppm, png };

/// Writes by format; throws DataError when the file cannot be created.
void write_image(const RgbImage& img, const std::filesystem::path& path, ImageFormat format);
/// Reads a .ppm or .png file, chosen by content.
RgbImage read_image(const std::filesystem::path& path);

}  // namespace recurnet

#endif  // RECURNET_IMAGE_IO_HPP
