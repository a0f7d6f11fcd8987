#ifndef CEOAE_EVAL_HPP
#define CEOAE_EVAL_HPP

#include "ceoae/shrinkage.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <limits>
#include <span>
#include <string>

namespace ceoae {

inline constexpr double kReferencePressure = 20e-6; // pascals, 0 dB SPL

/// Sentinel returned by snr_db when the error has zero deviation.
inline constexpr double kSnrUnbounded = std::numeric_limits<double>::infinity();

/// Median of a sample; an even count averages the two central values.
double median(std::span<const double> values);

/// Linear-interpolation quantile between order statistics, q in [0, 1].
double quantile(std::span<const double> values, double q);

/// Q3 - Q1.
double interquartile_range(std::span<const double> values);

/// Population standard deviation (divides by the count).
double population_stddev(std::span<const double> values);

/// Row-wise median of a p x n matrix.
Eigen::VectorXd pointwise_median(const Eigen::MatrixXd& m);

/// 10 log10(var(x) / var(x_hat - x)) with population variances.
double snr_db(const Eigen::VectorXd& x_hat, const Eigen::VectorXd& x);

/// 20 log10(p_rms / 20 uPa).
double db_spl(double p_rms);

/// Inverse of db_spl.
double pressure_from_db_spl(double level_db);

struct SnrReport {
    Method method = Method::BM;
    long long n = 0;
    double snr_db = 0.0;
    double enhancement_db = 0.0;
    /// Describes the ground truth x (e.g. "synthetic-truth", "median-of-recording:<hash>").
    std::string reference;
    /// Identifies the observation matrix Y the estimate came from.
    std::string source;
};

/// report.snr_db - baseline.snr_db. Throws InputError when the two reports
/// do not share n, reference and source.
double snr_enhancement(const SnrReport& report, const SnrReport& baseline);

nlohmann::json to_json(const SnrReport& report);

} // namespace ceoae

#endif
