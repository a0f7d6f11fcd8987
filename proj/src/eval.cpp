#include "ceoae/eval.hpp"

#include "ceoae/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <vector>

namespace ceoae {

namespace {

std::vector<double> sorted_copy(std::span<const double> values) {
    if (values.empty()) {
        throw InputError("statistic of an empty sample");
    }
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    return v;
}

double vector_stddev(const Eigen::VectorXd& v) {
    return std::sqrt((v.array() - v.mean()).square().mean());
}

} // namespace

double median(std::span<const double> values) {
    return quantile(values, 0.5);
}

double quantile(std::span<const double> values, double q) {
    if (!(q >= 0.0 && q <= 1.0)) {
        throw InputError("quantile level must lie in [0, 1]");
    }
    const std::vector<double> v = sorted_copy(values);
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return v[lo] + frac * (v[hi] - v[lo]);
}

double interquartile_range(std::span<const double> values) {
    return quantile(values, 0.75) - quantile(values, 0.25);
}

double population_stddev(std::span<const double> values) {
    if (values.empty()) {
        throw InputError("standard deviation of an empty sample");
    }
    const double n = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double acc = 0.0;
    for (double x : values) {
        acc += (x - mean) * (x - mean);
    }
    return std::sqrt(acc / n);
}

Eigen::VectorXd pointwise_median(const Eigen::MatrixXd& m) {
    if (m.rows() == 0 || m.cols() == 0) {
        throw InputError("point-wise median of an empty matrix");
    }
    Eigen::VectorXd out(m.rows());
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    const std::size_t mid = row.size() / 2;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            row[static_cast<std::size_t>(j)] = m(i, j);
        }
        std::nth_element(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(mid), row.end());
        const double upper = row[mid];
        if (row.size() % 2 == 1) {
            out(i) = upper;
        } else {
            const double lower = *std::max_element(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(mid));
            out(i) = 0.5 * (lower + upper);
        }
    }
    return out;
}

double snr_db(const Eigen::VectorXd& x_hat, const Eigen::VectorXd& x) {
    if (x_hat.size() != x.size()) {
        std::ostringstream os;
        os << "SNR needs vectors of equal length (" << x_hat.size() << " vs " << x.size() << ")";
        throw InputError(os.str());
    }
    if (x.size() == 0) {
        throw InputError("SNR of empty vectors");
    }
    if (!x.allFinite() || !x_hat.allFinite()) {
        throw InputError("SNR inputs contain non-finite values");
    }
    const double sx = vector_stddev(x);
    if (sx == 0.0) {
        throw InputError("reference signal has zero deviation; SNR undefined");
    }
    const Eigen::VectorXd err = x_hat - x;
    const double sw = vector_stddev(err);
    // An error that is constant up to the rounding of x_hat - x counts as zero.
    const double scale = std::max(x.cwiseAbs().maxCoeff(), x_hat.cwiseAbs().maxCoeff());
    if (sw <= 8.0 * std::numeric_limits<double>::epsilon() * scale) {
        return kSnrUnbounded;
    }
    return 10.0 * std::log10((sx * sx) / (sw * sw));
}

double db_spl(double p_rms) {
    if (!std::isfinite(p_rms) || p_rms <= 0.0) {
        throw InputError("dB SPL needs a positive pressure");
    }
    return 20.0 * std::log10(p_rms / kReferencePressure);
}

double pressure_from_db_spl(double level_db) {
    return kReferencePressure * std::pow(10.0, level_db / 20.0);
}

double snr_enhancement(const SnrReport& report, const SnrReport& baseline) {
    if (report.n != baseline.n || report.reference != baseline.reference ||
        report.source != baseline.source) {
        std::ostringstream os;
        os << "enhancement needs reports on the same data: n " << report.n << " vs " << baseline.n
           << ", reference '" << report.reference << "' vs '" << baseline.reference
           << "', source '" << report.source << "' vs '" << baseline.source << "'";
        throw InputError(os.str());
    }
    return report.snr_db - baseline.snr_db;
}

nlohmann::json to_json(const SnrReport& report) {
    auto finite_or_null = [](double v) -> nlohmann::json {
        if (std::isfinite(v)) return v;
        return v > 0 ? nlohmann::json("inf") : nlohmann::json("-inf");
    };
    return {
        {"method", std::string(method_name(report.method))},
        {"n", report.n},
        {"snr_db", finite_or_null(report.snr_db)},
        {"enhancement_db", finite_or_null(report.enhancement_db)},
        {"reference", report.reference},
        {"source", report.source},
    };
}

} // namespace ceoae
