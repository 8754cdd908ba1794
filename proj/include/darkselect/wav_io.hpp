#pragma once

#include <filesystem>
#include <vector>

namespace darkselect {

struct WavAudio {
    int sample_rate = 16000;
    std::vector<float> samples;  // mono, in [-1, 1]
};

// Minimal RIFF reader: mono 16-bit PCM only, which is what the collection
// step normalizes everything to.
WavAudio read_wav(const std::filesystem::path& path);
void write_wav(const WavAudio& audio, const std::filesystem::path& path);

}  // namespace darkselect
