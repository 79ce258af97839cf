#ifndef RECURNET_CLASSIFICATION_HPP
#define RECURNET_CLASSIFICATION_HPP

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "recurnet/tensor.hpp"

namespace recurnet {

/// Labelled images stored planar (all red, then green, then blue), row-major.
struct ClassificationSet {
  int channels = 3;
  int height = 32;
  int width = 32;
  std::vector<std::uint8_t> labels;
  std::vector<std::uint8_t> pixels;  // size() * channels * height * width

  std::size_t size() const { return labels.size(); }
  std::size_t image_bytes() const { return static_cast<std::size_t>(channels * height * width); }
  bool operator==(const ClassificationSet&) const = default;
};

// CIFAR binary records: 1 label byte followed by 3072 pixel bytes
// (1024 red, 1024 green, 1024 blue; each a row-major 32x32 plane).
inline constexpr std::size_t kCifarRecordBytes = 3073;
inline constexpr unsigned kCifarClasses = 10;

ClassificationSet decode_cifar_binary(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_cifar_binary(const ClassificationSet& set);
ClassificationSet read_cifar_binary(const std::filesystem::path& path);

/// Float NCHW batch with pixel values scaled to [0, 1].
TensorF image_batch(const ClassificationSet& set, std::span<const std::size_t> indices);
std::vector<std::int32_t> label_batch(const ClassificationSet& set, std::span<const std::size_t> indices);

}  // namespace recurnet

#endif  // RECURNET_CLASSIFICATION_HPP
