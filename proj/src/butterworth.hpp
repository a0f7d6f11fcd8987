#ifndef CEOAE_SRC_BUTTERWORTH_HPP
#define CEOAE_SRC_BUTTERWORTH_HPP

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

namespace ceoae::detail {

struct Biquad {
    double b0 = 1.0, b1 = 0.0, b2 = 0.0;
    double a1 = 0.0, a2 = 0.0;

    double dc_gain() const noexcept { return (b0 + b1 + b2) / (1.0 + a1 + a2); }
};

enum class EdgeKind { LowPass, HighPass };

// Even-order Butterworth edge as order/2 biquads via the prewarped bilinear
// transform.
inline std::vector<Biquad> butterworth_sections(EdgeKind kind, int order, double cutoff_hz,
                                                double sample_rate) {
    std::vector<Biquad> out;
    const double k = std::tan(std::numbers::pi * cutoff_hz / sample_rate);
    for (int i = 1; i <= order / 2; ++i) {
        const double q =
            1.0 / (2.0 * std::sin(std::numbers::pi * (2.0 * i - 1.0) / (2.0 * order)));
        const double norm = 1.0 / (1.0 + k / q + k * k);
        Biquad s;
        if (kind == EdgeKind::LowPass) {
            s.b0 = k * k * norm;
            s.b1 = 2.0 * s.b0;
            s.b2 = s.b0;
        } else {
            s.b0 = norm;
            s.b1 = -2.0 * s.b0;
            s.b2 = s.b0;
        }
        s.a1 = 2.0 * (k * k - 1.0) * norm;
        s.a2 = (1.0 - k / q + k * k) * norm;
        out.push_back(s);
    }
    return out;
}

// Direct form II transposed, started in the steady state of a constant input
// equal to the first sample.
inline void run_cascade(std::span<const Biquad> sections, std::vector<double>& x) {
    if (x.empty()) {
        return;
    }
    double level = x.front();
    for (const Biquad& s : sections) {
        const double y0 = s.dc_gain() * level;
        double z2 = s.b2 * level - s.a2 * y0;
        double z1 = s.b1 * level - s.a1 * y0 + z2;
        for (double& v : x) {
            const double in = v;
            const double out = s.b0 * in + z1;
            z1 = s.b1 * in - s.a1 * out + z2;
            z2 = s.b2 * in - s.a2 * out;
            v = out;
        }
        level = y0;
    }
}

} // namespace ceoae::detail

#endif
