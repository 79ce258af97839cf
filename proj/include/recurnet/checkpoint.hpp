#ifndef RECURNET_CHECKPOINT_HPP
#define RECURNET_CHECKPOINT_HPP

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "recurnet/model.hpp"

namespace recurnet {

// File layout, little-endian:
//   "DTCK" u16 version=1
//   u32 spec_length, spec_length bytes of ModelSpec::to_text() (UTF-8)
//   per state tensor in Model::state_tensors() order:
//     u32 rank, rank x u32 extents, numel x f32
inline constexpr char kCheckpointMagic[4] = {'D', 'T', 'C', 'K'};
inline constexpr std::uint16_t kCheckpointVersion = 1;

std::vector<std::uint8_t> encode_checkpoint(const Model& model);
Model decode_checkpoint(std::span<const std::uint8_t> bytes);
void save_checkpoint(const Model& model, const std::filesystem::path& path);
Model load_checkpoint(const std::filesystem::path& path);

}  // namespace recurnet

#endif  // RECURNET_CHECKPOINT_HPP
