#include "ceoae/wav.hpp"

#include "ceoae/errors.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace ceoae {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint32_t read_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xFF));
}

void put_u16(std::vector<unsigned char>& out, std::uint16_t v) {
    out.push_back(static_cast<unsigned char>(v & 0xFF));
    out.push_back(static_cast<unsigned char>(v >> 8));
}

[[noreturn]] void malformed(const std::filesystem::path& path, const std::string& what) {
    throw InputError("malformed WAV '" + path.string() + "': " + what);
}

} // namespace

SampleBuffer read_wav(const std::filesystem::path& path, double pascals_per_full_scale) {
    if (!std::isfinite(pascals_per_full_scale) || pascals_per_full_scale <= 0.0) {
        throw InputError("calibration (pascals per full scale) must be positive");
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError("cannot open WAV '" + path.string() + "'");
    }
    const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                           std::istreambuf_iterator<char>());
    if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
        malformed(path, "missing RIFF/WAVE header");
    }

    std::uint16_t format = 0, channels = 0, bits = 0;
    std::uint32_t rate = 0;
    const unsigned char* data = nullptr;
    std::size_t data_size = 0;

    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const unsigned char* chunk = bytes.data() + pos;
        const std::size_t size = read_u32(chunk + 4);
        const std::size_t body = pos + 8;
        const std::size_t available = std::min(size, bytes.size() - body);
        if (std::memcmp(chunk, "fmt ", 4) == 0) {
            if (available < 16) malformed(path, "short fmt chunk");
            format = read_u16(chunk + 8);
            channels = read_u16(chunk + 10);
            rate = read_u32(chunk + 12);
            bits = read_u16(chunk + 22);
            if (format == kFormatExtensible) {
                if (available < 40) malformed(path, "short extensible fmt chunk");
                format = read_u16(chunk + 8 + 24); // first two bytes of the sub-format GUID
            }
        } else if (std::memcmp(chunk, "data", 4) == 0) {
            data = bytes.data() + body;
            data_size = available;
        }
        pos = body + size + (size & 1U);
    }

    if (format == 0) malformed(path, "no fmt chunk");
    if (data == nullptr) malformed(path, "no data chunk");
    if (channels != 1) {
        malformed(path, "expected mono, found " + std::to_string(channels) + " channels");
    }
    if (rate == 0) malformed(path, "zero sample rate");

    const bool is_float = format == kFormatFloat && bits == 32;
    const bool is_pcm = format == kFormatPcm && (bits == 16 || bits == 24 || bits == 32);
    if (!is_float && !is_pcm) {
        malformed(path, "unsupported encoding (format " + std::to_string(format) + ", " +
                            std::to_string(bits) + " bits)");
    }

    const std::size_t width = bits / 8;
    const std::size_t count = data_size / width;
    SampleBuffer buf;
    buf.sample_rate = static_cast<double>(rate);
    buf.samples.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        const unsigned char* p = data + i * width;
        double v = 0.0;
        if (is_float) {
            v = static_cast<double>(std::bit_cast<float>(read_u32(p)));
        } else if (bits == 16) {
            v = static_cast<double>(static_cast<std::int16_t>(read_u16(p))) / 32768.0;
        } else if (bits == 24) {
            std::uint32_t raw = static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
                                (static_cast<std::uint32_t>(p[2]) << 16);
            if (raw & 0x800000U) raw |= 0xFF000000U;
            v = static_cast<double>(static_cast<std::int32_t>(raw)) / 8388608.0;
        } else {
            v = static_cast<double>(static_cast<std::int32_t>(read_u32(p))) / 2147483648.0;
        }
        buf.samples[i] = v * pascals_per_full_scale;
    }
    buf.validate();
    return buf;
}

void write_wav(const std::filesystem::path& path, const SampleBuffer& buf, WavEncoding encoding,
               double pascals_per_full_scale) {
    buf.validate();
    if (!std::isfinite(pascals_per_full_scale) || pascals_per_full_scale <= 0.0) {
        throw InputError("calibration (pascals per full scale) must be positive");
    }
    std::uint16_t bits = 16;
    std::uint16_t format = kFormatPcm;
    switch (encoding) {
    case WavEncoding::Pcm16: bits = 16; break;
    case WavEncoding::Pcm24: bits = 24; break;
    case WavEncoding::Pcm32: bits = 32; break;
    case WavEncoding::Float32: bits = 32; format = kFormatFloat; break;
    }
    const std::uint32_t width = bits / 8U;
    const auto rate = static_cast<std::uint32_t>(std::lround(buf.sample_rate));
    const auto data_size = static_cast<std::uint32_t>(buf.samples.size() * width);

    std::vector<unsigned char> out;
    out.reserve(44 + data_size);
    out.insert(out.end(), {'R', 'I', 'F', 'F'});
    put_u32(out, 36 + data_size);
    out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
    put_u32(out, 16);
    put_u16(out, format);
    put_u16(out, 1);
    put_u32(out, rate);
    put_u32(out, rate * width);
    put_u16(out, static_cast<std::uint16_t>(width));
    put_u16(out, bits);
    out.insert(out.end(), {'d', 'a', 't', 'a'});
    put_u32(out, data_size);

    for (double s : buf.samples) {
        const double v = s / pascals_per_full_scale;
        if (encoding == WavEncoding::Float32) {
            put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
            continue;
        }
        const double full = std::ldexp(1.0, bits - 1);
        const double q = std::clamp(std::round(v * full), -full, full - 1.0);
        const auto iv = static_cast<std::uint32_t>(static_cast<std::int32_t>(q));
        for (std::uint32_t b = 0; b < width; ++b) {
            out.push_back(static_cast<unsigned char>((iv >> (8 * b)) & 0xFF));
        }
    }

    std::ofstream file(path, std::ios::binary);
    if (!file) {
        throw InputError("cannot write WAV '" + path.string() + "'");
    }
    file.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
}

} // namespace ceoae
