#ifndef CEOAE_PIPELINE_HPP
#define CEOAE_PIPELINE_HPP

#include "ceoae/shrinkage.hpp"

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

namespace ceoae {

/// Calibrated pressure waveform.
struct SampleBuffer {
    std::vector<double> samples; // pascals
    double sample_rate = 0.0;    // Hz

    /// Throws InputError unless sample_rate > 0 and all samples are finite.
    void validate() const;
    double duration_s() const noexcept {
        return static_cast<double>(samples.size()) / sample_rate;
    }
};

/// One stimulus repetition: three click periods, 3 * T samples.
struct RawUnit {
    std::vector<double> samples;
    std::size_t start_index = 0;
};

enum class RejectionReason { ExceedsLevel };

std::string_view rejection_reason_name(RejectionReason r) noexcept;

/// Nonlinear-protocol response of a unit: T samples.
struct ResponseUnit {
    std::vector<double> samples;
    bool rejected = false;
    std::optional<RejectionReason> rejection_reason;
    std::size_t source_unit = 0;
};

struct PipelineConfig {
    std::size_t click_interval_samples = 4400;
    double bandpass_low_hz = 800.0;
    double bandpass_high_hz = 10000.0;
    double reject_threshold_db_spl = 50.0;
    double reject_guard_ms = 5.0;
    double analysis_window_ms = 20.0;
    double noise_tail_ms = 40.0;
    double max_reject_fraction = 0.8;

    /// Throws InputError when band edges or windows do not fit the rate.
    void validate(double sample_rate) const;
};

/// Whole samples in a window of `ms` milliseconds (rounded down).
std::size_t samples_in_ms(double ms, double sample_rate);

struct RejectionStats {
    std::size_t total = 0;
    std::size_t kept = 0;
    std::size_t rejected = 0;
    bool abandoned = false;

    double rejected_fraction() const noexcept {
        return total == 0 ? 0.0 : static_cast<double>(rejected) / static_cast<double>(total);
    }
};

struct RejectionResult {
    std::vector<ResponseUnit> kept;
    /// Flagged copies of the dropped responses, in input order.
    std::vector<ResponseUnit> rejected;
    RejectionStats stats;
};

/// Zero-phase band-pass: Butterworth high-pass and low-pass cascades applied
/// forward and backward.
SampleBuffer bandpass(const SampleBuffer& buf, const PipelineConfig& cfg);

/// Index of the first local maximum of |x| above 40% of the global maximum.
/// Throws DetectionError for a silent buffer.
std::size_t detect_first_click(const SampleBuffer& buf);

/// Consecutive non-overlapping 3T windows from t0; a trailing partial unit is
/// dropped.
std::vector<RawUnit> segment_units(const SampleBuffer& buf, std::size_t t0,
                                   const PipelineConfig& cfg);

/// r[j] = u[j] + u[j + T] + u[j + 2T].
ResponseUnit extract_response(const RawUnit& unit, const PipelineConfig& cfg);

/// Drops responses with any sample past the guard window louder than the
/// rejection level. Order preserving.
RejectionResult reject_artifacts(const std::vector<ResponseUnit>& responses,
                                 const PipelineConfig& cfg, double sample_rate);

/// Per-unit population deviation of the trailing noise_tail_ms; sigma is
/// their mean.
NoiseEstimate estimate_noise(const std::vector<ResponseUnit>& responses,
                             const PipelineConfig& cfg, double sample_rate);

/// Columns are the leading analysis_window_ms of each response.
UnitMatrix build_matrix(const std::vector<ResponseUnit>& kept, const PipelineConfig& cfg,
                        double sample_rate);

struct PipelineOutput {
    std::size_t first_click = 0;
    std::size_t units = 0;
    RejectionStats stats;
    std::optional<NoiseEstimate> noise;
    /// Absent when the recording is abandoned or fewer than two units survive.
    std::optional<UnitMatrix> matrix;
};

/// bandpass -> detect -> segment -> extract -> reject -> noise -> matrix.
PipelineOutput run_pipeline(const SampleBuffer& raw, const PipelineConfig& cfg);

} // namespace ceoae

#endif
