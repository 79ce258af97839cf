#ifndef RECURNET_ANALYSIS_HPP
#define RECURNET_ANALYSIS_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "recurnet/image_io.hpp"
#include "recurnet/maze.hpp"
#include "recurnet/model.hpp"

namespace recurnet {

/// Relative per-channel activity across iterations.
///
/// counts(i, c, t) is the number of strictly positive entries of channel c of
/// the recurrent state after iteration t for image i; value(i, c, t) divides it
/// by the pair's maximum over t (0 when the channel never fires).
struct ReuseMatrix {
  std::size_t images = 0;
  std::size_t channels = 0;
  std::size_t iterations = 0;
  std::vector<std::size_t> counts;
  std::vector<double> values;

  std::size_t index(std::size_t i, std::size_t c, std::size_t t) const { return (i * channels + c) * iterations + t; }
  std::size_t count(std::size_t i, std::size_t c, std::size_t t) const { return counts[index(i, c, t)]; }
  double value(std::size_t i, std::size_t c, std::size_t t) const { return values[index(i, c, t)]; }
};

/// Builds values from counts laid out as (image, channel, iteration).
ReuseMatrix reuse_from_counts(std::size_t images, std::size_t channels, std::size_t iterations,
                              std::vector<std::size_t> counts);

inline constexpr std::size_t kReuseBins = 10;

struct ReuseSummary {
  ReuseMatrix matrix;
  /// Relative activities in [0, 1] over kReuseBins equal bins (the last bin
  /// closed), leaving out each active pair's most active iteration (the
  /// earliest one on ties). Inactive pairs contribute nothing.
  std::array<std::size_t, kReuseBins> histogram{};
  double threshold = 0.2;
  double reuse_fraction = 0.0;
  std::size_t active_pairs = 0;
};

/// Share of active (image, channel) pairs whose smallest relative activity
/// outside the most active iteration reaches `threshold`.
double reuse_fraction(const ReuseMatrix& m, double threshold);
std::array<std::size_t, kReuseBins> reuse_histogram(const ReuseMatrix& m);

/// Measures activity after the internal module's final layer each iteration.
/// Needs a recurrent model and at least two iterations.
ReuseSummary activation_reuse(const Model& model, const TensorF& images, int n_iters, double threshold = 0.2);

std::string reuse_histogram_csv(const ReuseSummary& s);

/// Monotone colormap from probability to RGB. The red channel carries the
/// 8-bit quantized probability q = round(255 p); green = round(230 q / 255),
/// blue = round(96 - 96 q / 255).
std::array<std::uint8_t, 3> heat_color(double probability);
/// Inverse of heat_color via the red channel.
double heat_probability(const std::array<std::uint8_t, 3>& rgb);

/// Per-pixel probability of class 1 for a 2 x H x W output.
std::vector<double> path_probability(const TensorF& output);
RgbImage heatmap_image(const std::vector<double>& probability, int height, int width);
RgbImage sample_image(const MazeSample& sample);
RgbImage target_image(const MazeSample& sample);

/// Writes input, target and iter_001 ... iter_NNN heatmaps for the given
/// outputs; returns the written paths in that order.
std::vector<std::filesystem::path> write_thoughts(std::span<const TensorF> outputs, const MazeSample& sample,
                                                  const std::filesystem::path& out_dir, ImageFormat format);

std::vector<std::filesystem::path> render_thoughts(const Model& model, const MazeSample& sample, int n_iters,
                                                   const std::filesystem::path& out_dir,
                                                   ImageFormat format = ImageFormat::png);

}  // namespace recurnet

#endif  // RECURNET_ANALYSIS_HPP
