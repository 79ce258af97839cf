#include "recurnet/checkpoint.hpp"

#include <cstring>
#include <string>

#include "recurnet/binary_io.hpp"

namespace recurnet {

std::vector<std::uint8_t> encode_checkpoint(const Model& model) {
  ByteWriter w;
  w.bytes({reinterpret_cast<const std::uint8_t*>(kCheckpointMagic), 4});
  w.put<std::uint16_t>(kCheckpointVersion);
  const std::string spec = model.spec().to_text();
  w.put<std::uint32_t>(static_cast<std::uint32_t>(spec.size()));
  w.text(spec);
  for (const TensorF& t : model.state_tensors()) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(t.rank()));
    for (std::size_t e : t.shape()) w.put<std::uint32_t>(static_cast<std::uint32_t>(e));
    for (std::size_t i = 0; i < t.numel(); ++i) w.put<float>(t[i]);
  }
  return w.buffer();
}

Model decode_checkpoint(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  auto magic = r.take(4, "magic");
  if (std::memcmp(magic.data(), kCheckpointMagic, 4) != 0) throw FormatError("bad magic: expected \"DTCK\"", 0);
  const std::uint64_t version_at = r.offset();
  const auto version = r.get<std::uint16_t>("version");
  if (version != kCheckpointVersion)
    throw FormatError("unsupported checkpoint version " + std::to_string(version), version_at);
  const std::uint64_t spec_at = r.offset();
  const auto spec_len = r.get<std::uint32_t>("spec length");
  auto spec_bytes = r.take(spec_len, "model spec");
  ModelSpec spec;
  try {
    spec = ModelSpec::from_text(std::string(spec_bytes.begin(), spec_bytes.end()));
    validate_spec(spec);
  } catch (const std::exception& e) {
    throw FormatError(std::string("invalid model spec: ") + e.what(), spec_at);
  }
  Model model(spec);
  const std::vector<TensorF> expected = model.state_tensors();
  std::vector<TensorF> loaded;
  loaded.reserve(expected.size());
  for (const TensorF& want : expected) {
    const std::uint64_t at = r.offset();
    const auto rank = r.get<std::uint32_t>("tensor rank");
    Shape shape;
    for (std::uint32_t k = 0; k < rank; ++k) shape.push_back(r.get<std::uint32_t>("tensor extent"));
    if (shape != want.shape())
      throw FormatError("tensor " + std::to_string(loaded.size()) + " has shape " + shape_to_string(shape) +
                            ", expected " + shape_to_string(want.shape()),
                        at);
    TensorF t(shape);
    auto raw = r.take(t.numel() * sizeof(float), "tensor values");
    std::memcpy(t.data(), raw.data(), raw.size());
    loaded.push_back(std::move(t));
  }
  if (!r.at_end()) throw FormatError(std::to_string(r.remaining()) + " trailing bytes after last tensor", r.offset());
  model.load_state_tensors(loaded);
  return model;
}

void save_checkpoint(const Model& model, const std::filesystem::path& path) {
  write_file_bytes(path, encode_checkpoint(model));
}

Model load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(read_file_bytes(path)); }

}  // namespace recurnet
