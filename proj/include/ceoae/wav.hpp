#ifndef CEOAE_WAV_HPP
#define CEOAE_WAV_HPP

#include "ceoae/pipeline.hpp"

#include <filesystem>
#include <vector>

namespace ceoae {

enum class WavEncoding { Pcm16, Pcm24, Pcm32, Float32 };

/// Mono RIFF/WAVE in 16/24/32-bit integer or 32-bit float PCM. Samples are
/// scaled to full scale +-1 and then by `pascals_per_full_scale`.
SampleBuffer read_wav(const std::filesystem::path& path, double pascals_per_full_scale = 1.0);

/// Writes `buf.samples / pascals_per_full_scale` as mono WAV. Integer
/// encodings clip to full scale.
void write_wav(const std::filesystem::path& path, const SampleBuffer& buf, WavEncoding encoding,
               double pascals_per_full_scale = 1.0);

} // namespace ceoae

#endif
