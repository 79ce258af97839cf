#include "recurnet/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <thread>
#include <unordered_set>

#include "recurnet/binary_io.hpp"
#include "recurnet/errors.hpp"

namespace recurnet {

Dataset build_dataset(int n, std::size_t count, std::uint64_t seed, unsigned threads) {
  if (count < 1) throw DataError("dataset count must be at least 1");
  if (n < 1) throw DataError("maze grid size must be at least 1, got " + std::to_string(n));
  Dataset ds;
  ds.n = n;
  ds.height = ds.width = 2 * n + 1;
  ds.samples.resize(count);
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) ds.samples[i] = make_sample(n, seed + i);
  };
  if (threads <= 1) {
    work(0, count);
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (count + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t)
      pool.emplace_back(work, std::min(count, t * chunk), std::min(count, (t + 1) * chunk));
  }
  return ds;
}

Dataset concat(const Dataset& a, const Dataset& b) {
  if (a.n != b.n) throw DataError("cannot concatenate datasets of grid size " + std::to_string(a.n) + " and " +
                                  std::to_string(b.n));
  Dataset out = a;
  out.samples.insert(out.samples.end(), b.samples.begin(), b.samples.end());
  return out;
}

std::vector<std::uint8_t> encode_dataset(const Dataset& ds) {
  ByteWriter w;
  w.bytes({reinterpret_cast<const std::uint8_t*>(kDatasetMagic), 4});
  w.put<std::uint16_t>(kDatasetVersion);
  w.put<std::uint16_t>(0);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(ds.n));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(ds.height));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(ds.width));
  w.put<std::uint64_t>(ds.samples.size());
  const std::size_t pixels = static_cast<std::size_t>(ds.height * ds.width);
  for (const MazeSample& s : ds.samples) {
    if (s.height != ds.height || s.width != ds.width || s.image.size() != pixels * 3 || s.target.size() != pixels)
      throw DataError("sample with seed " + std::to_string(s.seed) + " does not match the dataset geometry");
    w.put<std::uint64_t>(s.seed);
    w.put<std::uint32_t>(s.path_length);
    w.bytes(s.image);
    w.bytes(s.target);
  }
  return w.buffer();
}

Dataset decode_dataset(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  auto magic = r.take(4, "magic");
  if (std::memcmp(magic.data(), kDatasetMagic, 4) != 0)
    throw FormatError("bad magic: expected \"DTMZ\"", 0);
  const std::uint64_t version_at = r.offset();
  const auto version = r.get<std::uint16_t>("version");
  if (version != kDatasetVersion)
    throw FormatError("unsupported dataset version " + std::to_string(version), version_at);
  r.get<std::uint16_t>("reserved");
  Dataset ds;
  const std::uint64_t n_at = r.offset();
  ds.n = static_cast<int>(r.get<std::uint32_t>("grid size"));
  const std::uint64_t h_at = r.offset();
  ds.height = static_cast<int>(r.get<std::uint32_t>("height"));
  ds.width = static_cast<int>(r.get<std::uint32_t>("width"));
  if (ds.n < 1 || ds.n > 4096) throw FormatError("implausible grid size " + std::to_string(ds.n), n_at);
  if (ds.height != 2 * ds.n + 1 || ds.width != 2 * ds.n + 1)
    throw FormatError("image size " + std::to_string(ds.height) + "x" + std::to_string(ds.width) +
                          " inconsistent with grid size " + std::to_string(ds.n),
                      h_at);
  const auto count = r.get<std::uint64_t>("count");
  const std::uint64_t pixels = static_cast<std::uint64_t>(ds.height) * static_cast<std::uint64_t>(ds.width);
  const std::uint64_t record = 8 + 4 + pixels * 4;
  ds.samples.reserve(static_cast<std::size_t>(std::min(count, r.remaining() / record)));
  for (std::uint64_t i = 0; i < count; ++i) {
    MazeSample& s = ds.samples.emplace_back();
    s.height = ds.height;
    s.width = ds.width;
    s.seed = r.get<std::uint64_t>("record seed");
    s.path_length = r.get<std::uint32_t>("record path length");
    auto image = r.take(pixels * 3, "record image");
    s.image.assign(image.begin(), image.end());
    const std::uint64_t target_at = r.offset();
    auto target = r.take(pixels, "record target");
    for (std::size_t k = 0; k < target.size(); ++k)
      if (target[k] > 1) throw FormatError("target byte " + std::to_string(target[k]) + " not in {0,1}", target_at + k);
    s.target.assign(target.begin(), target.end());
  }
  if (!r.at_end()) throw FormatError(std::to_string(r.remaining()) + " trailing bytes after last record", r.offset());
  return ds;
}

void write_dataset(const Dataset& ds, const std::filesystem::path& path) {
  write_file_bytes(path, encode_dataset(ds));
}

Dataset read_dataset(const std::filesystem::path& path) { return decode_dataset(read_file_bytes(path)); }

DatasetStats dataset_stats(const Dataset& ds) {
  if (ds.samples.empty()) throw DataError("dataset_stats on an empty dataset");
  DatasetStats st;
  double sum = 0.0, sum_sq = 0.0;
  std::unordered_set<std::string> seen;
  for (const MazeSample& s : ds.samples) {
    ++st.path_length_histogram[s.path_length];
    sum += s.path_length;
    sum_sq += static_cast<double>(s.path_length) * s.path_length;
    const CellMaze m = unrasterize(s);
    std::string key;
    key.reserve(m.removed_walls.size() * 4 + 4);
    auto put = [&key](const Cell& c) {
      key.push_back(static_cast<char>(c.row));
      key.push_back(static_cast<char>(c.col));
    };
    put(m.start);
    put(m.end);
    for (const Wall& w : m.removed_walls) {
      put(w.a);
      put(w.b);
    }
    seen.insert(std::move(key));
  }
  const double count = static_cast<double>(ds.samples.size());
  st.mean_path_length = sum / count;
  if (ds.samples.size() > 1) {
    const double var = std::max(0.0, (sum_sq - count * st.mean_path_length * st.mean_path_length) / (count - 1));
    st.stderr_path_length = std::sqrt(var / count);
  }
  st.distinct = seen.size();
  st.duplicate_rate = (count - static_cast<double>(st.distinct)) / count;
  return st;
}

TensorF image_batch(const Dataset& ds, std::span<const std::size_t> indices) {
  const std::size_t hw = static_cast<std::size_t>(ds.height * ds.width);
  TensorF x({indices.size(), 3, static_cast<std::size_t>(ds.height), static_cast<std::size_t>(ds.width)});
  float* out = x.data();
  for (std::size_t b = 0; b < indices.size(); ++b) {
    const auto& img = ds.samples.at(indices[b]).image;
    for (std::size_t p = 0; p < hw; ++p)
      for (std::size_t c = 0; c < 3; ++c) out[(b * 3 + c) * hw + p] = static_cast<float>(img[p * 3 + c]) / 255.0f;
  }
  return x;
}

std::vector<std::int32_t> target_batch(const Dataset& ds, std::span<const std::size_t> indices) {
  std::vector<std::int32_t> t;
  t.reserve(indices.size() * static_cast<std::size_t>(ds.height * ds.width));
  for (std::size_t i : indices) {
    const auto& tg = ds.samples.at(i).target;
    t.insert(t.end(), tg.begin(), tg.end());
  }
  return t;
}

}  // namespace recurnet
