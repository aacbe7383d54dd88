#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "uwbench/perceptual.hpp"
#include "uwbench/waternet.hpp"

namespace uw::net {

// Weight file layout (all integers 32-bit little-endian, parameters IEEE float32 LE):
//
//   "UWNET1"                         6-byte magic; the trailing digit is the format version
//   u32 kind                         1 = Water-Net model, 2 = feature extractor
//   model:     u32 seed_lo, u32 seed_hi, u32 trunk_layers, u32 ftu_layers[3]
//   extractor: u32 stage_count, u32 tap_index, then per stage a u32 kind (0 conv, 1 maxpool)
//   conv record: i32 in_c, i32 out_c, i32 k, i32 activation, f32 kernel[out*in*k*k], f32 bias[out]
//   u32 CRC-32 of every preceding byte
//
// Model conv records appear in WaterNetModel::layers() order.
inline constexpr char kWeightMagic[] = "UWNET";
inline constexpr char kWeightVersion = '1';

std::vector<std::uint8_t> serialize_model(const WaterNetModel& model);
WaterNetModel deserialize_model(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> serialize_extractor(const FeatureExtractor& fx);
FeatureExtractor deserialize_extractor(const std::vector<std::uint8_t>& bytes);

// Parameters are written as float32; call quantize_to_float first for a bit-exact round trip.
void save_model(const WaterNetModel& model, const std::filesystem::path& path);
// Throws VersionError, CorruptionError (truncated / checksum) or DimensionError (bad shapes).
WaterNetModel load_model(const std::filesystem::path& path);

void save_extractor(const FeatureExtractor& fx, const std::filesystem::path& path);
FeatureExtractor load_extractor(const std::filesystem::path& path);

}  // namespace uw::net
