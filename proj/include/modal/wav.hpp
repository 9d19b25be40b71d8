#pragma once

#include <filesystem>

#include "modal/types.hpp"

namespace modal {

struct WavFile {
    std::vector<std::vector<double>> channels;
    double sample_rate = 0.0;

    std::size_t frames() const { return channels.empty() ? 0 : channels[0].size(); }
    // Channel average; flags whether a downmix actually happened.
    std::vector<double> mono(bool* downmixed = nullptr) const;
};

/// Reads RIFF/WAVE with PCM16/24/32 or float32 samples (plain or extensible
/// headers). Anything else is rejected by name.
WavFile read_wav(const std::filesystem::path& path);

/// Writes mono float32, bit-exact on round trip. Atomic: temp file + rename.
void write_wav_float32(const std::filesystem::path& path, const std::vector<double>& samples,
                       double sample_rate);

} // namespace modal
