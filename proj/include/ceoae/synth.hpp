#ifndef CEOAE_SYNTH_HPP
#define CEOAE_SYNTH_HPP

#include "ceoae/pipeline.hpp"
#include "ceoae/rng.hpp"

#include <Eigen/Dense>

#include <cstdint>

namespace ceoae {

/// Parameters of the chirp surrogate used in place of a cochlear model: the
/// instantaneous frequency decays exponentially from f_start toward f_end
/// under a rise-decay envelope.
struct SynthConfig {
    Eigen::Index p = 1280;
    double sample_rate = 64000.0;
    double f_start_hz = 6000.0;
    double f_end_hz = 1000.0;
    double if_decay_ms = 3.0;
    double envelope_peak_ms = 4.0;
    double rms_level_db_spl = -1.30;
    /// Per-column gain ~ Normal(1, gain_std^2).
    double gain_std = 0.1;
    /// Relative amplitude of an optional second chirp with independent
    /// Normal(0, 1) column weights. 0 keeps the matrix rank 1.
    double second_component = 0.0;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Noise-free base waveform at the configured RMS level (pascals).
Eigen::VectorXd chirp_template(const SynthConfig& cfg);

/// Second, slower chirp used by the rank-2 extension, at the base RMS level.
Eigen::VectorXd secondary_template(const SynthConfig& cfg);

/// One column: gain * chirp_template, gain ~ Normal(1, gain_std^2).
Eigen::VectorXd synth_clean_column(const SynthConfig& cfg, CounterRng& rng);

/// p x n clean matrix, column i = g_i * base (+ optional second component).
Eigen::MatrixXd make_signal_matrix(const SynthConfig& cfg, Eigen::Index n, CounterRng& rng);

/// i.i.d. Normal(0, sigma^2) entries.
Eigen::MatrixXd white_noise_matrix(Eigen::Index p, Eigen::Index n, double sigma, CounterRng& rng);

/// Windowed-sinc sample rate conversion.
SampleBuffer resample(const SampleBuffer& buf, double target_rate);

/// Zero mean, unit variance copy. Throws InputError for a constant recording.
SampleBuffer normalize_recording(const SampleBuffer& buf);

/// Picks a uniformly random contiguous window of p * n samples from the
/// normalized recording (resampled to `target_rate` first if needed) and
/// fills columns sequentially, scaled by sigma.
Eigen::MatrixXd ambient_noise_matrix(const SampleBuffer& buf, Eigen::Index p, Eigen::Index n,
                                     double sigma, CounterRng& rng, double target_rate);

/// Same, for a recording that is already normalized and at the target rate.
Eigen::MatrixXd ambient_window(const SampleBuffer& normalized, Eigen::Index p, Eigen::Index n,
                               double sigma, CounterRng& rng);

/// White noise shaped by a 1/f (pink) filter, normalized to unit variance.
/// Stand-in for a real ambient recording.
SampleBuffer colored_noise_recording(std::size_t length, double sample_rate, CounterRng& rng);

} // namespace ceoae

#endif
