#ifndef CEOAE_SHRINKAGE_HPP
#define CEOAE_SHRINKAGE_HPP

#include <Eigen/Dense>

#include <string>
#include <string_view>
#include <vector>

namespace ceoae {

/// Repeated-measurement observation matrix. Rows are time samples, columns
/// are units (one response per column), entries in pascals.
class UnitMatrix {
public:
    /// Throws InputError unless rows >= 2, cols >= 2, every entry is finite
    /// and sample_rate > 0.
    UnitMatrix(Eigen::MatrixXd data, double sample_rate);

    const Eigen::MatrixXd& data() const noexcept { return data_; }
    double sample_rate() const noexcept { return sample_rate_; }
    Eigen::Index rows() const noexcept { return data_.rows(); }
    Eigen::Index cols() const noexcept { return data_.cols(); }

    /// Aspect ratio p/n, always derived from the current dimensions.
    double beta() const noexcept {
        return static_cast<double>(data_.rows()) / static_cast<double>(data_.cols());
    }

private:
    Eigen::MatrixXd data_;
    double sample_rate_;
};

/// Mean and eigen-decomposition of the empirical covariance
/// S_n = (1/n) sum (y_i - mu)(y_i - mu)^T.
struct CovarianceSpectrum {
    Eigen::VectorXd mean;
    Eigen::VectorXd eigenvalues;   // non-increasing, >= 0
    Eigen::MatrixXd eigenvectors;  // p x p, columns orthonormal
};

/// Noise level estimate: sigma is the mean of the per-unit deviations.
struct NoiseEstimate {
    double sigma = 0.0;
    std::vector<double> per_unit_sigmas;

    /// Builds an estimate from per-unit deviations (sigma = their mean).
    static NoiseEstimate from_per_unit(std::vector<double> per_unit);
    /// Builds an estimate from a known scalar level with no per-unit data.
    static NoiseEstimate known(double sigma);
};

enum class Method { BM, WF, cOS, sOS };

std::string_view method_name(Method m) noexcept;
/// Case-insensitive: "bm", "wf", "cos", "sos". Throws InputError otherwise.
Method parse_method(std::string_view name);

struct DenoiseResult {
    Eigen::MatrixXd x_hat;
    /// Eigenvalues l_i (covariance methods) or normalized singular values
    /// xi_i (sOS).
    Eigen::VectorXd spectrum_before;
    /// Filter coefficients h_i (cOS, WF) or shrunken values eta*(xi_i) (sOS).
    Eigen::VectorXd spectrum_after;
    Eigen::Index effective_rank = 0;
    Method method = Method::BM;
};

// Scalar rules.

/// Positive root of l = (lambda + s^2)(1 + beta s^2 / lambda). Returns 0 when
/// l sits inside the noise bulk (negative discriminant).
double debias_eigenvalue(double l, double sigma, double beta);

/// h = K / (1 + K) with K = ((lambda/s^2)^2 - beta) / (lambda/s^2 + beta)
/// above the sqrt(beta) threshold, 0 below it.
double cos_coefficient(double lambda, double sigma, double beta);

/// Frobenius-loss optimal singular value shrinker on the normalized scale.
double frobenius_shrinker(double xi, double beta);

/// l / (l + s^2).
double wiener_coefficient(double l, double sigma);

// Matrix transforms.

/// Full p x p decomposition of the empirical covariance. Eigenvectors are
/// sign-normalized so each one's largest-magnitude component is positive.
CovarianceSpectrum covariance_spectrum(const UnitMatrix& y);

DenoiseResult cos_denoise(const UnitMatrix& y, const NoiseEstimate& noise);
DenoiseResult wiener_denoise(const UnitMatrix& y, const NoiseEstimate& noise);
DenoiseResult sos_denoise(const UnitMatrix& y, const NoiseEstimate& noise);
/// Baseline: returns Y unchanged with empty spectra.
DenoiseResult baseline_denoise(const UnitMatrix& y);

DenoiseResult denoise(Method method, const UnitMatrix& y, const NoiseEstimate& noise);

} // namespace ceoae

#endif
