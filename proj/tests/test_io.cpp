#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ceoae/errors.hpp"
#include "ceoae/matrix_io.hpp"
#include "ceoae/wav.hpp"
#include "oracles.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <string>

using namespace ceoae;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        std::random_device rd;
        path = fs::temp_directory_path() / ("ceoae-io-" + std::to_string(rd()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

SampleBuffer sweep(std::size_t len, double fs_hz, double amplitude) {
    SampleBuffer b;
    b.sample_rate = fs_hz;
    b.samples.resize(len);
    for (std::size_t i = 0; i < len; ++i) {
        b.samples[i] = amplitude * std::sin(0.001 * static_cast<double>(i * i % 100000));
    }
    return b;
}

void put_le(std::string& s, std::uint32_t v, int bytes) {
    for (int i = 0; i < bytes; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

// Hand-built RIFF header, independent of the writer.
std::string wav_bytes(std::uint16_t format, std::uint16_t channels, std::uint32_t rate, std::uint16_t bits,
                      const std::string& data) {
    std::string fmt;
    put_le(fmt, format, 2);
    put_le(fmt, channels, 2);
    put_le(fmt, rate, 4);
    put_le(fmt, rate * channels * bits / 8, 4);
    put_le(fmt, channels * bits / 8, 2);
    put_le(fmt, bits, 2);
    std::string s = "RIFF";
    put_le(s, static_cast<std::uint32_t>(4 + 8 + fmt.size() + 8 + data.size()), 4);
    s += "WAVEfmt ";
    put_le(s, static_cast<std::uint32_t>(fmt.size()), 4);
    s += fmt;
    s += "data";
    put_le(s, static_cast<std::uint32_t>(data.size()), 4);
    s += data;
    return s;
}

void write_bytes(const fs::path& p, const std::string& bytes) {
    std::ofstream(p, std::ios::binary).write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

} // namespace

TEST_SUITE("wav") {
    TEST_CASE("round trip in every encoding") {
        TempDir tmp;
        const double ppfs = 2.5;
        const SampleBuffer in = sweep(3000, 44100.0, 0.9 * ppfs);
        const struct {
            WavEncoding enc;
            double tol;
        } cases[] = {{WavEncoding::Pcm16, 1.0 / 32768.0},
                     {WavEncoding::Pcm24, 1.0 / 8388608.0},
                     {WavEncoding::Pcm32, 1.0 / 2147483648.0},
                     {WavEncoding::Float32, 1e-7}};
        for (const auto& c : cases) {
            const fs::path p = tmp.path / "x.wav";
            write_wav(p, in, c.enc, ppfs);
            const SampleBuffer out = read_wav(p, ppfs);
            CHECK(out.sample_rate == 44100.0);
            REQUIRE(out.samples.size() == in.samples.size());
            double worst = 0.0;
            for (std::size_t i = 0; i < in.samples.size(); ++i) {
                worst = std::max(worst, std::abs(out.samples[i] - in.samples[i]) / ppfs);
            }
            CHECK(worst <= c.tol);
        }
    }

    TEST_CASE("reads a hand-built 16-bit file") {
        TempDir tmp;
        std::string data;
        for (std::int16_t v : {0, 16384, -32768, 32767}) put_le(data, static_cast<std::uint16_t>(v), 2);
        write_bytes(tmp.path / "h.wav", wav_bytes(1, 1, 8000, 16, data));
        const SampleBuffer b = read_wav(tmp.path / "h.wav", 2.0);
        REQUIRE(b.samples.size() == 4);
        CHECK(b.sample_rate == 8000.0);
        CHECK(b.samples[0] == 0.0);
        CHECK(b.samples[1] == 1.0);
        CHECK(b.samples[2] == -2.0);
    }

    TEST_CASE("malformed and unsupported files are input errors") {
        TempDir tmp;
        write_bytes(tmp.path / "junk.wav", "not a wave file at all");
        CHECK_THROWS_AS(read_wav(tmp.path / "junk.wav"), InputError);

        std::string stereo;
        put_le(stereo, 0, 4);
        write_bytes(tmp.path / "stereo.wav", wav_bytes(1, 2, 8000, 16, stereo));
        CHECK_THROWS_AS(read_wav(tmp.path / "stereo.wav"), InputError);

        std::string eight;
        put_le(eight, 0x80, 1);
        write_bytes(tmp.path / "u8.wav", wav_bytes(1, 1, 8000, 8, eight));
        CHECK_THROWS_AS(read_wav(tmp.path / "u8.wav"), InputError);

        const std::string full = wav_bytes(1, 1, 8000, 16, std::string(200, '\0'));
        write_bytes(tmp.path / "cut.wav", full.substr(0, 30));
        CHECK_THROWS_AS(read_wav(tmp.path / "cut.wav"), InputError);

        CHECK_THROWS_AS(read_wav(tmp.path / "missing.wav"), InputError);
    }
}

TEST_SUITE("csv") {
    TEST_CASE("write then read is bit exact") {
        TempDir tmp;
        std::mt19937_64 eng(2024);
        std::uniform_int_distribution<int> expo(-300, 300);
        std::normal_distribution<double> mant(0.0, 1.0);
        for (int trial = 0; trial < 20; ++trial) {
            const Eigen::Index p = 1 + trial % 7;
            const Eigen::Index n = 1 + (trial * 3) % 5;
            Eigen::MatrixXd m(p, n);
            for (Eigen::Index j = 0; j < n; ++j)
                for (Eigen::Index i = 0; i < p; ++i) m(i, j) = mant(eng) * std::pow(10.0, expo(eng));
            m(0, 0) = std::numeric_limits<double>::denorm_min();
            if (m.size() > 1) m(m.rows() - 1, m.cols() - 1) = -0.1;
            const fs::path path = tmp.path / "m.csv";
            write_matrix_csv(path, m);
            const Eigen::MatrixXd back = read_matrix_csv(path);
            REQUIRE(back.rows() == p);
            REQUIRE(back.cols() == n);
            CHECK(std::memcmp(back.data(), m.data(), sizeof(double) * static_cast<std::size_t>(m.size())) == 0);
        }
    }

    TEST_CASE("vectors are single-column files") {
        TempDir tmp;
        const Eigen::VectorXd v = oracle::gaussian_matrix(9, 1, 1e-6, 3).col(0);
        write_vector_csv(tmp.path / "v.csv", v);
        CHECK(read_vector_csv(tmp.path / "v.csv") == v);
        CHECK(read_matrix_csv(tmp.path / "v.csv").cols() == 1);
        write_matrix_csv(tmp.path / "wide.csv", Eigen::MatrixXd::Ones(2, 3));
        CHECK_THROWS_AS(read_vector_csv(tmp.path / "wide.csv"), InputError);
    }

    TEST_CASE("ragged or non-numeric input is an input error") {
        TempDir tmp;
        write_bytes(tmp.path / "ragged.csv", "1,2,3\n4,5\n");
        CHECK_THROWS_AS(read_matrix_csv(tmp.path / "ragged.csv"), InputError);
        write_bytes(tmp.path / "text.csv", "1,abc\n");
        CHECK_THROWS_AS(read_matrix_csv(tmp.path / "text.csv"), InputError);
        write_bytes(tmp.path / "empty.csv", "");
        CHECK_THROWS_AS(read_matrix_csv(tmp.path / "empty.csv"), InputError);
        CHECK_THROWS_AS(read_matrix_csv(tmp.path / "absent.csv"), InputError);
    }
}

TEST_SUITE("sidecar") {
    TEST_CASE("path and round trip") {
        TempDir tmp;
        CHECK(sidecar_path("/a/b/Y.csv") == fs::path("/a/b/Y.json"));
        MatrixSidecar meta;
        meta.sample_rate = 44100.0;
        meta.p = 882;
        meta.n = 17;
        meta.sigma = 3.56e-4;
        meta.per_unit_sigmas = {3.5e-4, 3.6e-4};
        meta.provenance = {{"command", "segment"}, {"units", 17}};
        write_sidecar(tmp.path / "Y.json", meta);
        const MatrixSidecar back = read_sidecar(tmp.path / "Y.json");
        CHECK(back.sample_rate == meta.sample_rate);
        CHECK(back.p == 882);
        CHECK(back.n == 17);
        REQUIRE(back.sigma.has_value());
        CHECK(*back.sigma == *meta.sigma);
        CHECK(back.per_unit_sigmas == meta.per_unit_sigmas);
        CHECK(back.provenance == meta.provenance);

        meta.sigma.reset();
        write_sidecar(tmp.path / "Z.json", meta);
        CHECK_FALSE(read_sidecar(tmp.path / "Z.json").sigma.has_value());
    }

    TEST_CASE("malformed json is an input error") {
        TempDir tmp;
        write_bytes(tmp.path / "bad.json", "{ not json");
        CHECK_THROWS_AS(read_json(tmp.path / "bad.json"), InputError);
        CHECK_THROWS_AS(read_sidecar(tmp.path / "bad.json"), InputError);
    }
}
