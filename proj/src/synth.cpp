#include "ceoae/synth.hpp"

#include "ceoae/errors.hpp"
#include "ceoae/eval.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

namespace ceoae {

namespace {

Eigen::VectorXd chirp(Eigen::Index p, double sample_rate, double f_start, double f_end,
                      double tau_s, double peak_s) {
    Eigen::VectorXd out(p);
    const double sweep = f_start - f_end;
    for (Eigen::Index j = 0; j < p; ++j) {
        const double t = static_cast<double>(j) / sample_rate;
        const double phase =
            2.0 * std::numbers::pi * (f_end * t + sweep * tau_s * (1.0 - std::exp(-t / tau_s)));
        const double u = t / peak_s;
        const double envelope = u * u * std::exp(2.0 * (1.0 - u)); // peaks at 1 when t = peak
        out(j) = envelope * std::sin(phase);
    }
    return out;
}

void scale_to_rms(Eigen::VectorXd& v, double target_rms) {
    const double rms = std::sqrt(v.squaredNorm() / static_cast<double>(v.size()));
    if (rms == 0.0) {
        throw InputError("synthetic template is silent; check its timing parameters");
    }
    v *= target_rms / rms;
}

} // namespace

void SynthConfig::validate() const {
    std::ostringstream os;
    if (p < 2) {
        os << "p must be at least 2";
    } else if (!(sample_rate > 0.0)) {
        os << "sample rate must be positive";
    } else if (!(f_start_hz > f_end_hz && f_end_hz > 0.0)) {
        os << "need f_start > f_end > 0 (got " << f_start_hz << ", " << f_end_hz << ")";
    } else if (!(f_start_hz < sample_rate / 2.0)) {
        os << "f_start must lie below Nyquist";
    } else if (static_cast<double>(p) / sample_rate < 0.010 - 1e-12) {
        os << "p / sample_rate must cover at least 10 ms";
    } else if (!(if_decay_ms > 0.0 && envelope_peak_ms > 0.0)) {
        os << "IF decay and envelope peak times must be positive";
    } else if (!std::isfinite(rms_level_db_spl)) {
        os << "RMS level must be finite";
    } else if (!(gain_std >= 0.0) || !std::isfinite(gain_std)) {
        os << "gain_std must be non-negative";
    } else if (!(second_component >= 0.0) || !std::isfinite(second_component)) {
        os << "second_component must be non-negative";
    }
    if (!os.str().empty()) {
        throw InputError(os.str());
    }
}

Eigen::VectorXd chirp_template(const SynthConfig& cfg) {
    cfg.validate();
    Eigen::VectorXd v = chirp(cfg.p, cfg.sample_rate, cfg.f_start_hz, cfg.f_end_hz,
                              cfg.if_decay_ms / 1000.0, cfg.envelope_peak_ms / 1000.0);
    scale_to_rms(v, pressure_from_db_spl(cfg.rms_level_db_spl));
    return v;
}

Eigen::VectorXd secondary_template(const SynthConfig& cfg) {
    cfg.validate();
    // Half the frequencies, twice as slow, peaking later in the window.
    Eigen::VectorXd v = chirp(cfg.p, cfg.sample_rate, cfg.f_start_hz / 2.0, cfg.f_end_hz / 2.0,
                              2.0 * cfg.if_decay_ms / 1000.0, 2.0 * cfg.envelope_peak_ms / 1000.0);
    scale_to_rms(v, pressure_from_db_spl(cfg.rms_level_db_spl));
    return v;
}

Eigen::VectorXd synth_clean_column(const SynthConfig& cfg, CounterRng& rng) {
    Eigen::VectorXd v = chirp_template(cfg);
    if (cfg.gain_std > 0.0) {
        v *= rng.normal(1.0, cfg.gain_std);
    }
    return v;
}

Eigen::MatrixXd make_signal_matrix(const SynthConfig& cfg, Eigen::Index n, CounterRng& rng) {
    if (n < 2) {
        throw InputError("signal matrix needs at least 2 columns");
    }
    const Eigen::VectorXd base = chirp_template(cfg);
    Eigen::VectorXd gains(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        gains(i) = cfg.gain_std > 0.0 ? rng.normal(1.0, cfg.gain_std) : 1.0;
    }
    Eigen::MatrixXd x = base * gains.transpose();
    if (cfg.second_component > 0.0) {
        const Eigen::VectorXd second = cfg.second_component * secondary_template(cfg);
        Eigen::VectorXd weights(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            weights(i) = rng.normal();
        }
        x += second * weights.transpose();
    }
    return x;
}

Eigen::MatrixXd white_noise_matrix(Eigen::Index p, Eigen::Index n, double sigma, CounterRng& rng) {
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
        throw InputError("noise sigma must be non-negative");
    }
    Eigen::MatrixXd z(p, n);
    if (sigma == 0.0) {
        z.setZero();
        return z;
    }
    // Column-major fill keeps the draw order independent of the matrix type.
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i < p; ++i) {
            z(i, j) = sigma * rng.normal();
        }
    }
    return z;
}

SampleBuffer resample(const SampleBuffer& buf, double target_rate) {
    buf.validate();
    if (!(target_rate > 0.0) || !std::isfinite(target_rate)) {
        throw InputError("target sample rate must be positive");
    }
    if (target_rate == buf.sample_rate) {
        return buf;
    }
    const double ratio = target_rate / buf.sample_rate;
    const double cutoff = std::min(1.0, ratio);   // relative to the input Nyquist
    constexpr double kZeroCrossings = 16.0;
    const double half_width = kZeroCrossings / cutoff;
    const auto in_len = static_cast<std::ptrdiff_t>(buf.samples.size());
    const auto out_len = static_cast<std::size_t>(std::floor(static_cast<double>(in_len) * ratio));

    SampleBuffer out;
    out.sample_rate = target_rate;
    out.samples.resize(out_len);
    for (std::size_t k = 0; k < out_len; ++k) {
        const double t = static_cast<double>(k) / ratio;
        const auto lo = std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(std::ceil(t - half_width)));
        const auto hi = std::min<std::ptrdiff_t>(in_len - 1, static_cast<std::ptrdiff_t>(std::floor(t + half_width)));
        double acc = 0.0;
        for (std::ptrdiff_t j = lo; j <= hi; ++j) {
            const double d = t - static_cast<double>(j);
            const double arg = cutoff * d;
            const double sinc = arg == 0.0 ? 1.0 : std::sin(std::numbers::pi * arg) / (std::numbers::pi * arg);
            const double window = 0.5 * (1.0 + std::cos(std::numbers::pi * d / half_width));
            acc += buf.samples[static_cast<std::size_t>(j)] * cutoff * sinc * window;
        }
        out.samples[k] = acc;
    }
    return out;
}

SampleBuffer normalize_recording(const SampleBuffer& buf) {
    buf.validate();
    if (buf.samples.size() < 2) {
        throw InputError("recording too short to normalize");
    }
    const double mean = std::accumulate(buf.samples.begin(), buf.samples.end(), 0.0) /
                        static_cast<double>(buf.samples.size());
    const double sd = population_stddev(buf.samples);
    double peak = 0.0;
    for (double v : buf.samples) {
        peak = std::max(peak, std::abs(v));
    }
    // A constant recording can leave round-off residue in the deviation.
    if (!(sd > 1e-12 * peak)) {
        throw InputError("recording has zero variance and cannot be normalized");
    }
    SampleBuffer out;
    out.sample_rate = buf.sample_rate;
    out.samples.resize(buf.samples.size());
    std::transform(buf.samples.begin(), buf.samples.end(), out.samples.begin(),
                   [mean, sd](double v) { return (v - mean) / sd; });
    return out;
}

Eigen::MatrixXd ambient_window(const SampleBuffer& normalized, Eigen::Index p, Eigen::Index n,
                               double sigma, CounterRng& rng) {
    if (p < 1 || n < 1) {
        throw InputError("ambient noise matrix needs positive dimensions");
    }
    const auto need = static_cast<std::size_t>(p) * static_cast<std::size_t>(n);
    const std::size_t total = normalized.samples.size();
    if (total < need) {
        std::ostringstream os;
        os << "ambient recording has " << total << " samples, need at least " << need;
        throw InputError(os.str());
    }
    const std::size_t offset = static_cast<std::size_t>(rng.uniform_index(total - need + 1));
    Eigen::MatrixXd z(p, n);
    std::size_t k = offset;
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i < p; ++i) {
            z(i, j) = sigma * normalized.samples[k++];
        }
    }
    return z;
}

Eigen::MatrixXd ambient_noise_matrix(const SampleBuffer& buf, Eigen::Index p, Eigen::Index n,
                                     double sigma, CounterRng& rng, double target_rate) {
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
        throw InputError("noise sigma must be non-negative");
    }
    const SampleBuffer normalized = normalize_recording(resample(buf, target_rate));
    return ambient_window(normalized, p, n, sigma, rng);
}

SampleBuffer colored_noise_recording(std::size_t length, double sample_rate, CounterRng& rng) {
    if (length < 2) {
        throw InputError("colored noise recording needs at least 2 samples");
    }
    // Kellet's refined pink filter, run past its settling time first.
    std::array<double, 7> b{};
    auto step = [&b](double white) {
        b[0] = 0.99886 * b[0] + white * 0.0555179;
        b[1] = 0.99332 * b[1] + white * 0.0750759;
        b[2] = 0.96900 * b[2] + white * 0.1538520;
        b[3] = 0.86650 * b[3] + white * 0.3104856;
        b[4] = 0.55000 * b[4] + white * 0.5329522;
        b[5] = -0.7616 * b[5] - white * 0.0168980;
        const double pink = b[0] + b[1] + b[2] + b[3] + b[4] + b[5] + b[6] + white * 0.5362;
        b[6] = white * 0.115926;
        return pink;
    };
    for (int i = 0; i < 8192; ++i) {
        step(rng.normal());
    }
    SampleBuffer out;
    out.sample_rate = sample_rate;
    out.samples.resize(length);
    for (double& v : out.samples) {
        v = step(rng.normal());
    }
    return normalize_recording(out);
}

} // namespace ceoae
