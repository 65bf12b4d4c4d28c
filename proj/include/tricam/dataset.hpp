#pragma once

// On-disk dataset container. See docs/FORMATS.md for the byte layout.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tricam/synthgen.hpp"

namespace tricam::synth {

inline constexpr std::uint32_t kDatasetVersion = 1;
inline constexpr std::size_t kRecordBytes = 8 + 16 + 48 + kChannels * 44 + kChannels * kEyeImagePixels * 2;

struct Dataset {
  SceneConfig scene;
  std::uint64_t seed = 0;
  std::vector<Sample> samples;
  std::string samples_hash;
};

/// Generates n samples and writes manifest.json + samples.bin into out_dir.
/// Throws Error(kEmptyDataset) when n == 0.
Dataset gen_dataset(const SceneConfig& cfg, std::size_t n, std::uint64_t seed,
                    const std::filesystem::path& out_dir);

void write_dataset(const Dataset& ds, const std::filesystem::path& out_dir);
Dataset load_dataset(const std::filesystem::path& dir);

/// Serializes one record; exposed for format tests.
std::vector<std::uint8_t> encode_record(const Sample& s);
Sample decode_record(const std::uint8_t* bytes);

}  // namespace tricam::synth
