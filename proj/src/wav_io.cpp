#include "darkselect/wav_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "darkselect/error.hpp"

namespace darkselect {

namespace {

std::uint32_t rd_u32(std::ifstream& in) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 4);
    return v;
}

std::uint16_t rd_u16(std::ifstream& in) {
    std::uint16_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 2);
    return v;
}

void wr_u32(std::ofstream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), 4);
}

void wr_u16(std::ofstream& out, std::uint16_t v) {
    out.write(reinterpret_cast<const char*>(&v), 2);
}

}  // namespace

WavAudio read_wav(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open wav: " + path.string());

    char id[4];
    in.read(id, 4);
    if (!in || std::memcmp(id, "RIFF", 4) != 0)
        throw ValidationError("not a RIFF file: " + path.string());
    rd_u32(in);  // riff size
    in.read(id, 4);
    if (!in || std::memcmp(id, "WAVE", 4) != 0)
        throw ValidationError("not a WAVE file: " + path.string());

    WavAudio audio;
    std::uint16_t channels = 0, bits = 0;
    bool have_fmt = false;
    while (in.read(id, 4)) {
        const std::uint32_t chunk = rd_u32(in);
        if (std::memcmp(id, "fmt ", 4) == 0) {
            const std::uint16_t format = rd_u16(in);
            channels = rd_u16(in);
            audio.sample_rate = int(rd_u32(in));
            rd_u32(in);  // byte rate
            rd_u16(in);  // block align
            bits = rd_u16(in);
            if (chunk > 16) in.seekg(chunk - 16, std::ios::cur);
            if (format != 1 || channels != 1 || bits != 16)
                throw ValidationError(path.string() +
                                      ": only mono 16-bit PCM wav is supported");
            have_fmt = true;
        } else if (std::memcmp(id, "data", 4) == 0) {
            if (!have_fmt) throw ValidationError("wav data before fmt chunk");
            const std::size_t n = chunk / 2;
            std::vector<std::int16_t> raw(n);
            in.read(reinterpret_cast<char*>(raw.data()), std::streamsize(chunk));
            if (!in) throw IoError("short read in wav data: " + path.string());
            audio.samples.resize(n);
            for (std::size_t i = 0; i < n; ++i)
                audio.samples[i] = float(raw[i]) / 32768.0f;
            return audio;
        } else {
            in.seekg(chunk + (chunk & 1), std::ios::cur);
        }
    }
    throw ValidationError("wav has no data chunk: " + path.string());
}

void write_wav(const WavAudio& audio, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot create wav: " + path.string());
    const std::uint32_t data_bytes = std::uint32_t(audio.samples.size()) * 2;
    out.write("RIFF", 4);
    wr_u32(out, 36 + data_bytes);
    out.write("WAVE", 4);
    out.write("fmt ", 4);
    wr_u32(out, 16);
    wr_u16(out, 1);  // PCM
    wr_u16(out, 1);  // mono
    wr_u32(out, std::uint32_t(audio.sample_rate));
    wr_u32(out, std::uint32_t(audio.sample_rate) * 2);
    wr_u16(out, 2);
    wr_u16(out, 16);
    out.write("data", 4);
    wr_u32(out, data_bytes);
    for (float s : audio.samples) {
        const float clamped = std::clamp(s, -1.0f, 1.0f);
        const std::int16_t v = std::int16_t(std::lrintf(clamped * 32767.0f));
        out.write(reinterpret_cast<const char*>(&v), 2);
    }
    if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace darkselect
