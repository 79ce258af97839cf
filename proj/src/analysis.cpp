#include "recurnet/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "recurnet/errors.hpp"

namespace recurnet {

ReuseMatrix reuse_from_counts(std::size_t images, std::size_t channels, std::size_t iterations,
                              std::vector<std::size_t> counts) {
  if (counts.size() != images * channels * iterations)
    throw ShapeError("reuse counts hold " + std::to_string(counts.size()) + " entries, expected " +
                     std::to_string(images * channels * iterations));
  ReuseMatrix m{images, channels, iterations, std::move(counts), {}};
  m.values.assign(m.counts.size(), 0.0);
  for (std::size_t pair = 0; pair < images * channels; ++pair) {
    const std::size_t* c = m.counts.data() + pair * iterations;
    const std::size_t peak = *std::max_element(c, c + iterations);
    if (peak == 0) continue;
    for (std::size_t t = 0; t < iterations; ++t)
      m.values[pair * iterations + t] = static_cast<double>(c[t]) / static_cast<double>(peak);
  }
  return m;
}

namespace {

// Calls f(pair, peak_t) for every pair with nonzero activity.
template <typename F>
void for_active_pairs(const ReuseMatrix& m, F f) {
  for (std::size_t pair = 0; pair < m.images * m.channels; ++pair) {
    const std::size_t* c = m.counts.data() + pair * m.iterations;
    const std::size_t peak_t = static_cast<std::size_t>(std::max_element(c, c + m.iterations) - c);
    if (c[peak_t] > 0) f(pair, peak_t);
  }
}

}  // namespace

double reuse_fraction(const ReuseMatrix& m, double threshold) {
  std::size_t active = 0, reused = 0;
  for_active_pairs(m, [&](std::size_t pair, std::size_t peak_t) {
    ++active;
    double lowest = 1.0;
    for (std::size_t t = 0; t < m.iterations; ++t)
      if (t != peak_t) lowest = std::min(lowest, m.values[pair * m.iterations + t]);
    if (lowest >= threshold) ++reused;
  });
  return active ? static_cast<double>(reused) / static_cast<double>(active) : 0.0;
}

std::array<std::size_t, kReuseBins> reuse_histogram(const ReuseMatrix& m) {
  std::array<std::size_t, kReuseBins> h{};
  for_active_pairs(m, [&](std::size_t pair, std::size_t peak_t) {
    for (std::size_t t = 0; t < m.iterations; ++t) {
      if (t == peak_t) continue;
      const double v = m.values[pair * m.iterations + t];
      ++h[std::min(kReuseBins - 1, static_cast<std::size_t>(v * static_cast<double>(kReuseBins)))];
    }
  });
  return h;
}

ReuseSummary activation_reuse(const Model& model, const TensorF& images, int n_iters, double threshold) {
  if (model.spec().mode != Mode::recurrent)
    throw ShapeError("filter reuse is defined for recurrent models only");
  if (n_iters < 2) throw ShapeError("filter reuse needs at least two iterations");
  if (images.rank() != 4 || images.dim(0) == 0) throw ShapeError("filter reuse needs a nonempty NCHW batch");
  const std::vector<TensorF> states = model.forward_states(images, n_iters);
  const std::size_t n = images.dim(0);
  std::size_t channels = 0;
  std::vector<std::size_t> counts;
  for (std::size_t t = 0; t < states.size(); ++t) {
    const TensorF& s = states[t];
    if (s.rank() != 4) throw ShapeError("filter reuse needs convolutional feature maps");
    if (t == 0) {
      channels = s.dim(1);
      counts.assign(n * channels * states.size(), 0);
    }
    const std::size_t plane = s.dim(2) * s.dim(3);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t c = 0; c < channels; ++c) {
        const float* p = s.data() + (i * channels + c) * plane;
        counts[(i * channels + c) * states.size() + t] =
            static_cast<std::size_t>(std::count_if(p, p + plane, [](float v) { return v > 0.0f; }));
      }
  }
  ReuseSummary out;
  out.matrix = reuse_from_counts(n, channels, states.size(), std::move(counts));
  out.histogram = reuse_histogram(out.matrix);
  out.threshold = threshold;
  out.reuse_fraction = reuse_fraction(out.matrix, threshold);
  for_active_pairs(out.matrix, [&](std::size_t, std::size_t) { ++out.active_pairs; });
  return out;
}

std::string reuse_histogram_csv(const ReuseSummary& s) {
  std::ostringstream os;
  os << "bin_low,bin_high,count\n";
  char buf[64];
  for (std::size_t b = 0; b < kReuseBins; ++b) {
    std::snprintf(buf, sizeof buf, "%.1f,%.1f,", static_cast<double>(b) / kReuseBins,
                  static_cast<double>(b + 1) / kReuseBins);
    os << buf << s.histogram[b] << '\n';
  }
  return os.str();
}

std::array<std::uint8_t, 3> heat_color(double probability) {
  const double p = std::clamp(probability, 0.0, 1.0);
  const long q = std::lround(255.0 * p);
  return {static_cast<std::uint8_t>(q), static_cast<std::uint8_t>(std::lround(230.0 * q / 255.0)),
          static_cast<std::uint8_t>(std::lround(96.0 - 96.0 * q / 255.0))};
}

double heat_probability(const std::array<std::uint8_t, 3>& rgb) { return rgb[0] / 255.0; }

std::vector<double> path_probability(const TensorF& output) {
  const bool batched = output.rank() == 4 && output.dim(0) == 1;
  if (!(output.rank() == 3 || batched) || output.dim(batched ? 1 : 0) != 2)
    throw ShapeError("expected a 2 x H x W output, got " + shape_to_string(output.shape()));
  const std::size_t pixels = output.numel() / 2;
  std::vector<double> p(pixels);
  for (std::size_t k = 0; k < pixels; ++k)
    p[k] = 1.0 / (1.0 + std::exp(static_cast<double>(output[k]) - static_cast<double>(output[pixels + k])));
  return p;
}

RgbImage heatmap_image(const std::vector<double>& probability, int height, int width) {
  if (probability.size() != static_cast<std::size_t>(height) * static_cast<std::size_t>(width))
    throw ShapeError("probability map does not match " + std::to_string(height) + "x" + std::to_string(width));
  RgbImage img{width, height, {}};
  img.pixels.reserve(probability.size() * 3);
  for (double p : probability) {
    const auto rgb = heat_color(p);
    img.pixels.insert(img.pixels.end(), rgb.begin(), rgb.end());
  }
  return img;
}

RgbImage sample_image(const MazeSample& sample) { return {sample.width, sample.height, sample.image}; }

RgbImage target_image(const MazeSample& sample) {
  RgbImage img{sample.width, sample.height, {}};
  for (std::uint8_t t : sample.target) img.pixels.insert(img.pixels.end(), 3, t ? 255 : 0);
  return img;
}

std::vector<std::filesystem::path> write_thoughts(std::span<const TensorF> outputs, const MazeSample& sample,
                                                  const std::filesystem::path& out_dir, ImageFormat format) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec || !std::filesystem::is_directory(out_dir))
    throw DataError("cannot create output directory " + out_dir.string());
  const std::string ext = format == ImageFormat::ppm ? ".ppm" : ".png";
  std::vector<std::filesystem::path> written;
  auto emit = [&](const RgbImage& img, const std::string& name) {
    const auto path = out_dir / (name + ext);
    write_image(img, path, format);
    written.push_back(path);
  };
  emit(sample_image(sample), "input");
  emit(target_image(sample), "target");
  for (std::size_t t = 0; t < outputs.size(); ++t) {
    char name[32];
    std::snprintf(name, sizeof name, "iter_%03zu", t + 1);
    emit(heatmap_image(path_probability(outputs[t]), sample.height, sample.width), name);
  }
  return written;
}

std::vector<std::filesystem::path> render_thoughts(const Model& model, const MazeSample& sample, int n_iters,
                                                   const std::filesystem::path& out_dir, ImageFormat format) {
  if (model.spec().family != Family::maze_residual) throw ShapeError("thought rendering needs a maze model");
  TensorF x({1, 3, static_cast<std::size_t>(sample.height), static_cast<std::size_t>(sample.width)});
  const std::size_t hw = static_cast<std::size_t>(sample.height * sample.width);
  for (std::size_t p = 0; p < hw; ++p)
    for (std::size_t c = 0; c < 3; ++c) x[c * hw + p] = static_cast<float>(sample.image[p * 3 + c]) / 255.0f;
  const std::vector<TensorF> outputs = model.forward_iterations(x, n_iters);
  return write_thoughts(outputs, sample, out_dir, format);
}

}  // namespace recurnet
