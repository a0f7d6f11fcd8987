#include "ceoae/pipeline.hpp"

#include "butterworth.hpp"
#include "ceoae/errors.hpp"
#include "ceoae/eval.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ceoae {

namespace {

// Order of each Butterworth edge. Forward-backward application doubles the
// attenuation in dB.
constexpr int kEdgeOrder = 6;

constexpr double kClickThreshold = 0.4;

void require_length(const std::vector<double>& v, std::size_t expected, const char* what) {
    if (v.size() != expected) {
        std::ostringstream os;
        os << what << " has " << v.size() << " samples, expected " << expected;
        throw InputError(os.str());
    }
}

} // namespace

void SampleBuffer::validate() const {
    if (!std::isfinite(sample_rate) || sample_rate <= 0.0) {
        throw InputError("sample rate must be positive");
    }
    for (double v : samples) {
        if (!std::isfinite(v)) {
            throw InputError("sample buffer contains non-finite samples");
        }
    }
}

std::string_view rejection_reason_name(RejectionReason r) noexcept {
    switch (r) {
    case RejectionReason::ExceedsLevel: return "exceeds_level";
    }
    return "?";
}

std::size_t samples_in_ms(double ms, double sample_rate) {
    if (!std::isfinite(ms) || ms < 0.0) {
        throw InputError("window length must be non-negative");
    }
    // The small bias absorbs round-off in products that should be whole numbers.
    return static_cast<std::size_t>(std::floor(ms * sample_rate / 1000.0 + 1e-9));
}

void PipelineConfig::validate(double sample_rate) const {
    std::ostringstream os;
    if (!(sample_rate > 0.0)) {
        os << "sample rate must be positive";
    } else if (click_interval_samples == 0) {
        os << "click interval must be at least one sample";
    } else if (!(bandpass_low_hz > 0.0 && bandpass_low_hz < bandpass_high_hz &&
                 bandpass_high_hz < sample_rate / 2.0)) {
        os << "band edges must satisfy 0 < low < high < Nyquist (" << bandpass_low_hz << ", "
           << bandpass_high_hz << ", Nyquist " << sample_rate / 2.0 << ")";
    } else if (!(max_reject_fraction >= 0.0 && max_reject_fraction <= 1.0)) {
        os << "max reject fraction must lie in [0, 1]";
    } else if (!std::isfinite(reject_threshold_db_spl)) {
        os << "rejection threshold must be finite";
    } else {
        const std::size_t unit = click_interval_samples;
        const struct {
            const char* name;
            double ms;
        } windows[] = {{"guard", reject_guard_ms},
                       {"analysis", analysis_window_ms},
                       {"noise tail", noise_tail_ms}};
        for (const auto& w : windows) {
            if (!std::isfinite(w.ms) || w.ms < 0.0 || samples_in_ms(w.ms, sample_rate) > unit) {
                os << w.name << " window of " << w.ms << " ms does not fit a " << unit
                   << "-sample click period";
                break;
            }
        }
    }
    if (!os.str().empty()) {
        throw InputError(os.str());
    }
}

SampleBuffer bandpass(const SampleBuffer& buf, const PipelineConfig& cfg) {
    buf.validate();
    const double fs = buf.sample_rate;
    if (!(cfg.bandpass_low_hz > 0.0 && cfg.bandpass_low_hz < cfg.bandpass_high_hz &&
          cfg.bandpass_high_hz < fs / 2.0)) {
        std::ostringstream os;
        os << "band edges " << cfg.bandpass_low_hz << "-" << cfg.bandpass_high_hz
           << " Hz are not inside (0, " << fs / 2.0 << ") Hz";
        throw InputError(os.str());
    }
    if (buf.samples.empty()) {
        return buf;
    }

    std::vector<detail::Biquad> sections =
        detail::butterworth_sections(detail::EdgeKind::HighPass, kEdgeOrder, cfg.bandpass_low_hz, fs);
    const auto lp =
        detail::butterworth_sections(detail::EdgeKind::LowPass, kEdgeOrder, cfg.bandpass_high_hz, fs);
    sections.insert(sections.end(), lp.begin(), lp.end());

    // Odd extension at both ends, several periods of the low edge long.
    const std::size_t len = buf.samples.size();
    const std::size_t pad =
        std::min<std::size_t>(len - 1, static_cast<std::size_t>(std::ceil(10.0 * fs / cfg.bandpass_low_hz)));
    std::vector<double> x;
    x.reserve(len + 2 * pad);
    const double first = buf.samples.front();
    const double last = buf.samples.back();
    for (std::size_t i = pad; i >= 1; --i) {
        x.push_back(2.0 * first - buf.samples[i]);
    }
    x.insert(x.end(), buf.samples.begin(), buf.samples.end());
    for (std::size_t i = 1; i <= pad; ++i) {
        x.push_back(2.0 * last - buf.samples[len - 1 - i]);
    }

    detail::run_cascade(sections, x);
    std::reverse(x.begin(), x.end());
    detail::run_cascade(sections, x);
    std::reverse(x.begin(), x.end());

    SampleBuffer out;
    out.sample_rate = fs;
    out.samples.assign(x.begin() + static_cast<std::ptrdiff_t>(pad),
                       x.begin() + static_cast<std::ptrdiff_t>(pad + len));
    return out;
}

std::size_t detect_first_click(const SampleBuffer& buf) {
    buf.validate();
    double peak = 0.0;
    for (double v : buf.samples) {
        peak = std::max(peak, std::abs(v));
    }
    if (peak == 0.0) {
        throw DetectionError("no click found: buffer is silent");
    }
    // The -2 click of a unit is the global peak, so the leading +1 click sits at
    // half of it; the threshold has to clear that with margin.
    const double threshold = kClickThreshold * peak;
    const auto& s = buf.samples;
    std::size_t first = 0;
    while (std::abs(s[first]) <= threshold) {
        ++first;
    }
    // Refine to the largest |x| within 1 ms of the threshold crossing.
    const std::size_t reach = std::max<std::size_t>(1, samples_in_ms(1.0, buf.sample_rate));
    const std::size_t end = std::min(s.size(), first + reach + 1);
    std::size_t best = first;
    for (std::size_t i = first + 1; i < end; ++i) {
        if (std::abs(s[i]) > std::abs(s[best])) {
            best = i;
        }
    }
    return best;
}

std::vector<RawUnit> segment_units(const SampleBuffer& buf, std::size_t t0,
                                   const PipelineConfig& cfg) {
    const std::size_t unit_len = 3 * cfg.click_interval_samples;
    if (unit_len == 0) {
        throw InputError("click interval must be at least one sample");
    }
    if (t0 >= buf.samples.size() || buf.samples.size() - t0 < unit_len) {
        std::ostringstream os;
        os << "recording holds no complete " << unit_len << "-sample unit after sample " << t0
           << " (length " << buf.samples.size() << ")";
        throw InputError(os.str());
    }
    const std::size_t count = (buf.samples.size() - t0) / unit_len;
    std::vector<RawUnit> units;
    units.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        RawUnit u;
        u.start_index = t0 + k * unit_len;
        const auto begin = buf.samples.begin() + static_cast<std::ptrdiff_t>(u.start_index);
        u.samples.assign(begin, begin + static_cast<std::ptrdiff_t>(unit_len));
        units.push_back(std::move(u));
    }
    return units;
}

ResponseUnit extract_response(const RawUnit& unit, const PipelineConfig& cfg) {
    const std::size_t t = cfg.click_interval_samples;
    require_length(unit.samples, 3 * t, "raw unit");
    ResponseUnit r;
    r.samples.resize(t);
    for (std::size_t j = 0; j < t; ++j) {
        r.samples[j] = unit.samples[j] + unit.samples[j + t] + unit.samples[j + 2 * t];
    }
    return r;
}

RejectionResult reject_artifacts(const std::vector<ResponseUnit>& responses,
                                 const PipelineConfig& cfg, double sample_rate) {
    if (responses.empty()) {
        throw InputError("artifact rejection needs at least one response");
    }
    const double limit = pressure_from_db_spl(cfg.reject_threshold_db_spl);
    // First sample strictly later than the guard time.
    const std::size_t start = samples_in_ms(cfg.reject_guard_ms, sample_rate) + 1;

    RejectionResult out;
    out.stats.total = responses.size();
    for (const ResponseUnit& r : responses) {
        bool loud = false;
        for (std::size_t j = start; j < r.samples.size() && !loud; ++j) {
            loud = std::abs(r.samples[j]) > limit;
        }
        if (loud) {
            ResponseUnit dropped = r;
            dropped.rejected = true;
            dropped.rejection_reason = RejectionReason::ExceedsLevel;
            out.rejected.push_back(std::move(dropped));
        } else {
            ResponseUnit kept = r;
            kept.rejected = false;
            kept.rejection_reason.reset();
            out.kept.push_back(std::move(kept));
        }
    }
    out.stats.kept = out.kept.size();
    out.stats.rejected = out.rejected.size();
    out.stats.abandoned = out.stats.rejected_fraction() > cfg.max_reject_fraction;
    return out;
}

NoiseEstimate estimate_noise(const std::vector<ResponseUnit>& responses, const PipelineConfig& cfg,
                             double sample_rate) {
    if (responses.empty()) {
        throw InputError("noise estimation needs at least one response");
    }
    const std::size_t tail = samples_in_ms(cfg.noise_tail_ms, sample_rate);
    if (tail < 2) {
        throw InputError("noise tail must span at least two samples");
    }
    std::vector<double> per_unit;
    per_unit.reserve(responses.size());
    for (const ResponseUnit& r : responses) {
        if (r.samples.size() < tail) {
            std::ostringstream os;
            os << "noise tail of " << tail << " samples exceeds a " << r.samples.size()
               << "-sample response";
            throw InputError(os.str());
        }
        per_unit.push_back(population_stddev(
            std::span<const double>(r.samples).subspan(r.samples.size() - tail)));
    }
    return NoiseEstimate::from_per_unit(std::move(per_unit));
}

UnitMatrix build_matrix(const std::vector<ResponseUnit>& kept, const PipelineConfig& cfg,
                        double sample_rate) {
    if (kept.empty()) {
        throw InputError("no responses left to build a matrix from");
    }
    const std::size_t p = samples_in_ms(cfg.analysis_window_ms, sample_rate);
    Eigen::MatrixXd data(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(kept.size()));
    for (std::size_t i = 0; i < kept.size(); ++i) {
        if (kept[i].samples.size() < p) {
            throw InputError("response shorter than the analysis window");
        }
        for (std::size_t j = 0; j < p; ++j) {
            data(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = kept[i].samples[j];
        }
    }
    return UnitMatrix(std::move(data), sample_rate);
}

PipelineOutput run_pipeline(const SampleBuffer& raw, const PipelineConfig& cfg) {
    raw.validate();
    cfg.validate(raw.sample_rate);

    const SampleBuffer filtered = bandpass(raw, cfg);
    PipelineOutput out;
    out.first_click = detect_first_click(filtered);

    const std::vector<RawUnit> units = segment_units(filtered, out.first_click, cfg);
    out.units = units.size();
    std::vector<ResponseUnit> responses;
    responses.reserve(units.size());
    for (std::size_t k = 0; k < units.size(); ++k) {
        ResponseUnit r = extract_response(units[k], cfg);
        r.source_unit = k;
        responses.push_back(std::move(r));
    }

    RejectionResult rejection = reject_artifacts(responses, cfg, raw.sample_rate);
    out.stats = rejection.stats;
    if (rejection.kept.empty()) {
        return out;
    }
    out.noise = estimate_noise(rejection.kept, cfg, raw.sample_rate);
    if (!out.stats.abandoned && rejection.kept.size() >= 2) {
        out.matrix = build_matrix(rejection.kept, cfg, raw.sample_rate);
    }
    return out;
}

} // namespace ceoae
