#pragma once

#include "sgm/types.hpp"

#include <filesystem>

namespace sgm {

enum class WavEncoding { Pcm16, Pcm24, Float32 };

/// Reads RIFF/WAVE (PCM 16/24-bit or IEEE float 32-bit, mono or stereo).
/// Stereo is mixed to mono by averaging the channels.
SampleStream read_audio(const std::filesystem::path& path);

/// Writes a mono file. PCM encodings round to nearest and clip to full scale.
void write_audio(const std::filesystem::path& path, const SampleStream& stream,
                 WavEncoding encoding = WavEncoding::Float32);

}  // namespace sgm
