#include "modal/wav.hpp"

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace modal {

namespace {

constexpr std::uint16_t kFormatPcm = 0x0001;
constexpr std::uint16_t kFormatFloat = 0x0003;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint32_t rd_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t rd_u16(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void wr_u32(std::vector<unsigned char>& out, std::uint32_t v) {
    out.push_back(static_cast<unsigned char>(v & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 16) & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 24) & 0xff));
}

void wr_u16(std::vector<unsigned char>& out, std::uint16_t v) {
    out.push_back(static_cast<unsigned char>(v & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
}

} // namespace

std::vector<double> WavFile::mono(bool* downmixed) const {
    if (downmixed)
        *downmixed = channels.size() > 1;
    if (channels.empty())
        return {};
    if (channels.size() == 1)
        return channels[0];
    std::vector<double> out(frames(), 0.0);
    for (const auto& ch : channels)
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] += ch[i];
    const double scale = 1.0 / static_cast<double>(channels.size());
    for (double& v : out)
        v *= scale;
    return out;
}

WavFile read_wav(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw input_error("cannot open WAV file: " + path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
        throw input_error("not a RIFF/WAVE file: " + path.string());

    std::uint16_t format = 0, channels = 0, bits = 0;
    std::uint32_t rate = 0;
    bool have_fmt = false;
    const unsigned char* data = nullptr;
    std::uint32_t data_len = 0;

    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const char* id = reinterpret_cast<const char*>(bytes.data() + pos);
        const std::uint32_t len = rd_u32(bytes.data() + pos + 4);
        const std::size_t body = pos + 8;
        if (body + len > bytes.size())
            throw input_error("truncated WAV chunk in " + path.string());
        if (std::memcmp(id, "fmt ", 4) == 0) {
            if (len < 16)
                throw input_error("malformed fmt chunk in " + path.string());
            format = rd_u16(bytes.data() + body);
            channels = rd_u16(bytes.data() + body + 2);
            rate = rd_u32(bytes.data() + body + 4);
            bits = rd_u16(bytes.data() + body + 14);
            if (format == kFormatExtensible) {
                if (len < 40)
                    throw input_error("malformed extensible fmt chunk in " + path.string());
                format = rd_u16(bytes.data() + body + 24); // first two GUID bytes
            }
            have_fmt = true;
        } else if (std::memcmp(id, "data", 4) == 0) {
            data = bytes.data() + body;
            data_len = len;
        }
        pos = body + len + (len & 1); // chunks are word aligned
    }

    if (!have_fmt || data == nullptr)
        throw input_error("WAV file missing fmt or data chunk: " + path.string());
    if (channels == 0 || rate == 0)
        throw input_error("WAV file with zero channels or rate: " + path.string());

    const bool is_float = format == kFormatFloat;
    if (format != kFormatPcm && !is_float)
        throw input_error("unsupported WAV format tag " + std::to_string(format) +
                          " (only PCM and IEEE float)");
    if (is_float && bits != 32)
        throw input_error("unsupported float WAV bit depth " + std::to_string(bits) +
                          " (only float32)");
    if (!is_float && bits != 16 && bits != 24 && bits != 32)
        throw input_error("unsupported PCM WAV bit depth " + std::to_string(bits) +
                          " (only 16/24/32)");

    const std::size_t bytes_per_sample = bits / 8;
    const std::size_t stride = bytes_per_sample * channels;
    const std::size_t frames = data_len / stride;

    WavFile wav;
    wav.sample_rate = static_cast<double>(rate);
    wav.channels.assign(channels, std::vector<double>(frames));
    for (std::size_t f = 0; f < frames; ++f) {
        for (std::size_t c = 0; c < channels; ++c) {
            const unsigned char* p = data + f * stride + c * bytes_per_sample;
            double v = 0.0;
            if (is_float) {
                float fv;
                std::memcpy(&fv, p, 4);
                v = static_cast<double>(fv);
            } else if (bits == 16) {
                auto s = static_cast<std::int16_t>(p[0] | (p[1] << 8));
                v = static_cast<double>(s) / 32768.0;
            } else if (bits == 24) {
                std::int32_t s = p[0] | (p[1] << 8) | (p[2] << 16);
                if (s & 0x800000)
                    s |= ~0xFFFFFF;
                v = static_cast<double>(s) / 8388608.0;
            } else {
                std::int32_t s;
                std::memcpy(&s, p, 4);
                v = static_cast<double>(s) / 2147483648.0;
            }
            wav.channels[c][f] = v;
        }
    }
    return wav;
}

void write_wav_float32(const std::filesystem::path& path, const std::vector<double>& samples,
                       double sample_rate) {
    if (samples.empty())
        throw input_error("write_wav_float32: no samples");
    if (!(sample_rate > 0.0))
        throw input_error("write_wav_float32: bad sample rate");

    const std::uint32_t rate = static_cast<std::uint32_t>(sample_rate + 0.5);
    const std::uint32_t data_len = static_cast<std::uint32_t>(samples.size() * 4);

    std::vector<unsigned char> out;
    out.reserve(58 + data_len);
    auto put = [&out](const char* s) { out.insert(out.end(), s, s + 4); };
    put("RIFF");
    wr_u32(out, 4 + 8 + 16 + 8 + data_len);
    put("WAVE");
    put("fmt ");
    wr_u32(out, 16);
    wr_u16(out, kFormatFloat);
    wr_u16(out, 1);
    wr_u32(out, rate);
    wr_u32(out, rate * 4);
    wr_u16(out, 4);
    wr_u16(out, 32);
    put("data");
    wr_u32(out, data_len);
    for (double v : samples) {
        float f = static_cast<float>(v);
        std::array<unsigned char, 4> b;
        std::memcpy(b.data(), &f, 4);
        out.insert(out.end(), b.begin(), b.end());
    }

    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os)
            throw input_error("cannot write " + tmp.string());
        os.write(reinterpret_cast<const char*>(out.data()),
                 static_cast<std::streamsize>(out.size()));
        if (!os)
            throw input_error("short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

} // namespace modal
