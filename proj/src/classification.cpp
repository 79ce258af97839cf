#include "recurnet/classification.hpp"

#include "recurnet/binary_io.hpp"
#include "recurnet/errors.hpp"

namespace recurnet {

ClassificationSet decode_cifar_binary(std::span<const std::uint8_t> bytes) {
  if (bytes.empty()) throw FormatError("empty classification file", 0);
  if (bytes.size() % kCifarRecordBytes != 0)
    throw FormatError("file length " + std::to_string(bytes.size()) + " is not a multiple of " +
                          std::to_string(kCifarRecordBytes) + "; incomplete record",
                      bytes.size() / kCifarRecordBytes * kCifarRecordBytes);
  ClassificationSet set;
  const std::size_t count = bytes.size() / kCifarRecordBytes;
  set.labels.reserve(count);
  set.pixels.reserve(count * set.image_bytes());
  for (std::size_t r = 0; r < count; ++r) {
    const auto rec = bytes.subspan(r * kCifarRecordBytes, kCifarRecordBytes);
    if (rec[0] >= kCifarClasses)
      throw FormatError("label " + std::to_string(rec[0]) + " outside 0.." + std::to_string(kCifarClasses - 1),
                        r * kCifarRecordBytes);
    set.labels.push_back(rec[0]);
    set.pixels.insert(set.pixels.end(), rec.begin() + 1, rec.end());
  }
  return set;
}

std::vector<std::uint8_t> encode_cifar_binary(const ClassificationSet& set) {
  if (set.channels != 3 || set.height != 32 || set.width != 32)
    throw DataError("CIFAR records hold 3x32x32 images");
  if (set.pixels.size() != set.size() * set.image_bytes())
    throw DataError("pixel buffer does not match the label count");
  ByteWriter w;
  for (std::size_t i = 0; i < set.size(); ++i) {
    w.put<std::uint8_t>(set.labels[i]);
    w.bytes(std::span(set.pixels).subspan(i * set.image_bytes(), set.image_bytes()));
  }
  return w.buffer();
}

ClassificationSet read_cifar_binary(const std::filesystem::path& path) {
  return decode_cifar_binary(read_file_bytes(path));
}

TensorF image_batch(const ClassificationSet& set, std::span<const std::size_t> indices) {
  const std::size_t per = set.image_bytes();
  TensorF x({indices.size(), static_cast<std::size_t>(set.channels), static_cast<std::size_t>(set.height),
             static_cast<std::size_t>(set.width)});
  float* out = x.data();
  for (std::size_t b = 0; b < indices.size(); ++b) {
    if (indices[b] >= set.size()) throw DataError("image index " + std::to_string(indices[b]) + " out of range");
    const std::uint8_t* src = set.pixels.data() + indices[b] * per;
    for (std::size_t k = 0; k < per; ++k) out[b * per + k] = static_cast<float>(src[k]) / 255.0f;
  }
  return x;
}

std::vector<std::int32_t> label_batch(const ClassificationSet& set, std::span<const std::size_t> indices) {
  std::vector<std::int32_t> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(set.labels.at(i));
  return out;
}

}  // namespace recurnet
