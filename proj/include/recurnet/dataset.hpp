#ifndef RECURNET_DATASET_HPP
#define RECURNET_DATASET_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "recurnet/maze.hpp"
#include "recurnet/tensor.hpp"

namespace recurnet {

/// Ordered maze samples sharing one grid size.
struct Dataset {
  int n = 0;
  int height = 0;
  int width = 0;
  std::vector<MazeSample> samples;

  std::size_t size() const { return samples.size(); }
  bool operator==(const Dataset&) const = default;
};

struct MazePreset {
  const char* name;
  int n;
  std::size_t train_count;
  std::size_t test_count;
};

inline constexpr MazePreset kMazePresets[] = {
    {"small", 9, 50000, 10000},
    {"medium", 11, 50000, 10000},
    {"large", 13, 50000, 10000},
};

/// Sample i is make_sample(n, seed + i). `threads` = 0 picks the hardware count.
Dataset build_dataset(int n, std::size_t count, std::uint64_t seed, unsigned threads = 1);

/// Concatenates datasets of equal grid size.
Dataset concat(const Dataset& a, const Dataset& b);

// File layout, little-endian:
//   "DTMZ" u16 version=1 u16 reserved u32 n u32 H u32 W u64 count
//   count x { u64 seed, u32 path_length, H*W*3 image bytes, H*W target bytes }
inline constexpr char kDatasetMagic[4] = {'D', 'T', 'M', 'Z'};
inline constexpr std::uint16_t kDatasetVersion = 1;

std::vector<std::uint8_t> encode_dataset(const Dataset& ds);
Dataset decode_dataset(std::span<const std::uint8_t> bytes);
void write_dataset(const Dataset& ds, const std::filesystem::path& path);
Dataset read_dataset(const std::filesystem::path& path);

struct DatasetStats {
  std::map<std::uint32_t, std::size_t> path_length_histogram;
  double mean_path_length = 0.0;
  double stderr_path_length = 0.0;
  std::size_t distinct = 0;
  double duplicate_rate = 0.0;  // (count - distinct) / count
};

/// Duplicates are samples whose wall set and endpoints both coincide.
DatasetStats dataset_stats(const Dataset& ds);

/// Float NCHW batch with pixel values scaled to [0, 1].
TensorF image_batch(const Dataset& ds, std::span<const std::size_t> indices);
/// Target labels in row-major (sample, row, col) order.
std::vector<std::int32_t> target_batch(const Dataset& ds, std::span<const std::size_t> indices);

}  // namespace recurnet

#endif  // RECURNET_DATASET_HPP
