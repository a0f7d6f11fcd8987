#include "ceoae/shrinkage.hpp"

#include "ceoae/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <sstream>

namespace ceoae {

namespace {

void require_finite_nonneg(double v, const char* what) {
    if (!std::isfinite(v) || v < 0.0) {
        std::ostringstream os;
        os << what << " must be finite and non-negative, got " << v;
        throw InputError(os.str());
    }
}

void require_positive(double v, const char* what) {
    if (!std::isfinite(v) || v <= 0.0) {
        std::ostringstream os;
        os << what << " must be finite and positive, got " << v;
        throw InputError(os.str());
    }
}

// Flips each column so that its largest-magnitude entry is positive. When a
// paired factor is given (right singular vectors) it is flipped alongside.
void normalize_signs(Eigen::MatrixXd& vectors, Eigen::MatrixXd* paired = nullptr) {
    for (Eigen::Index j = 0; j < vectors.cols(); ++j) {
        Eigen::Index arg = 0;
        vectors.col(j).cwiseAbs().maxCoeff(&arg);
        if (vectors(arg, j) < 0.0) {
            vectors.col(j) *= -1.0;
            if (paired != nullptr) {
                paired->col(j) *= -1.0;
            }
        }
    }
}

Eigen::Index count_positive(const Eigen::VectorXd& v) {
    return static_cast<Eigen::Index>((v.array() > 0.0).count());
}

// Thin form of the covariance decomposition: only the min(p, n) leading
// eigenpairs can be nonzero, and they come from the SVD of the centered
// data scaled by 1/sqrt(n).
struct ThinCovariance {
    Eigen::VectorXd mean;
    Eigen::MatrixXd centered;
    Eigen::VectorXd eigenvalues;  // length min(p, n)
    Eigen::MatrixXd eigenvectors; // p x min(p, n)
};

ThinCovariance thin_covariance(const UnitMatrix& y) {
    const auto& data = y.data();
    const double n = static_cast<double>(y.cols());

    ThinCovariance out;
    out.mean = data.rowwise().mean();
    out.centered = data.colwise() - out.mean;

    Eigen::BDCSVD<Eigen::MatrixXd> svd(out.centered / std::sqrt(n), Eigen::ComputeThinU);
    if (svd.info() != Eigen::Success) {
        std::ostringstream os;
        os << "SVD of centered " << y.rows() << "x" << y.cols()
           << " matrix failed (max |entry| = " << out.centered.cwiseAbs().maxCoeff() << ")";
        throw NumericalError(os.str());
    }
    out.eigenvalues = svd.singularValues().array().square();
    out.eigenvectors = svd.matrixU();
    normalize_signs(out.eigenvectors);
    return out;
}

Eigen::VectorXd pad_to(const Eigen::VectorXd& v, Eigen::Index length) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(length);
    out.head(v.size()) = v;
    return out;
}

template <typename CoefficientFn>
DenoiseResult covariance_filter(const UnitMatrix& y, const NoiseEstimate& noise, Method method,
                                CoefficientFn coefficient) {
    require_finite_nonneg(noise.sigma, "noise sigma");

    ThinCovariance cov = thin_covariance(y);
    const Eigen::Index k = cov.eigenvalues.size();
    Eigen::VectorXd h(k);
    for (Eigen::Index i = 0; i < k; ++i) {
        h(i) = coefficient(cov.eigenvalues(i));
    }

    DenoiseResult result;
    result.method = method;
    result.spectrum_before = pad_to(cov.eigenvalues, y.rows());
    result.spectrum_after = pad_to(h, y.rows());
    result.effective_rank = count_positive(result.spectrum_after);

    if (noise.sigma == 0.0) {
        result.x_hat = y.data();
        return result;
    }

    // mu 1^T + U H U^T (Y - mu 1^T); zero eigen-directions carry no data.
    Eigen::MatrixXd projected = cov.eigenvectors.transpose() * cov.centered;
    projected = h.asDiagonal() * projected;
    result.x_hat = cov.eigenvectors * projected;
    result.x_hat.colwise() += cov.mean;
    return result;
}

} // namespace

UnitMatrix::UnitMatrix(Eigen::MatrixXd data, double sample_rate)
    : data_(std::move(data)), sample_rate_(sample_rate) {
    if (data_.rows() < 2 || data_.cols() < 2) {
        std::ostringstream os;
        os << "unit matrix needs at least 2 rows and 2 columns, got " << data_.rows() << "x"
           << data_.cols();
        throw InputError(os.str());
    }
    if (!data_.allFinite()) {
        throw InputError("unit matrix contains non-finite entries");
    }
    require_positive(sample_rate_, "sample rate");
}

NoiseEstimate NoiseEstimate::from_per_unit(std::vector<double> per_unit) {
    if (per_unit.empty()) {
        throw InputError("noise estimate needs at least one unit");
    }
    for (double s : per_unit) {
        require_finite_nonneg(s, "per-unit noise deviation");
    }
    NoiseEstimate est;
    est.sigma = std::accumulate(per_unit.begin(), per_unit.end(), 0.0) /
                static_cast<double>(per_unit.size());
    est.per_unit_sigmas = std::move(per_unit);
    return est;
}

NoiseEstimate NoiseEstimate::known(double sigma) {
    require_finite_nonneg(sigma, "noise sigma");
    NoiseEstimate est;
    est.sigma = sigma;
    return est;
}

std::string_view method_name(Method m) noexcept {
    switch (m) {
    case Method::BM: return "BM";
    case Method::WF: return "WF";
    case Method::cOS: return "cOS";
    case Method::sOS: return "sOS";
    }
    return "?";
}

Method parse_method(std::string_view name) {
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lower == "bm") return Method::BM;
    if (lower == "wf") return Method::WF;
    if (lower == "cos") return Method::cOS;
    if (lower == "sos") return Method::sOS;
    throw InputError("unknown method '" + std::string(name) + "' (expected bm, wf, cos or sos)");
}

double debias_eigenvalue(double l, double sigma, double beta) {
    require_finite_nonneg(l, "eigenvalue");
    require_finite_nonneg(sigma, "sigma");
    require_positive(beta, "beta");

    const double s2 = sigma * sigma;
    const double root_beta = std::sqrt(beta);
    const double upper_edge = s2 * (1.0 + root_beta) * (1.0 + root_beta);
    const double lower_edge = s2 * (1.0 - root_beta) * (1.0 - root_beta);
    // [s^2(1+beta) - l]^2 - 4 s^4 beta, factored to avoid cancellation at the edge.
    const double disc = (l - upper_edge) * (l - lower_edge);
    if (disc < 0.0) {
        return 0.0;
    }
    const double lambda = (-(s2 * (1.0 + beta) - l) + std::sqrt(disc)) / 2.0;
    // Below the lower edge the "positive" root is negative; no signal there either.
    return std::max(lambda, 0.0);
}

double cos_coefficient(double lambda, double sigma, double beta) {
    require_finite_nonneg(lambda, "lambda");
    require_finite_nonneg(sigma, "sigma");
    require_positive(beta, "beta");

    if (sigma == 0.0) {
        return lambda > 0.0 ? 1.0 : 0.0;
    }
    const double ratio = lambda / (sigma * sigma);
    if (ratio < std::sqrt(beta)) {
        return 0.0;
    }
    const double k = (ratio * ratio - beta) / (ratio + beta);
    return k / (1.0 + k);
}

double frobenius_shrinker(double xi, double beta) {
    require_finite_nonneg(xi, "xi");
    require_positive(beta, "beta");

    const double root_beta = std::sqrt(beta);
    const double edge = 1.0 + root_beta;
    if (xi < edge) {
        return 0.0;
    }
    const double xi2 = xi * xi;
    // (xi^2 - beta - 1)^2 - 4 beta = (xi^2 - (1+sqrt b)^2)(xi^2 - (1-sqrt b)^2)
    const double inner =
        (xi2 - edge * edge) * (xi2 - (1.0 - root_beta) * (1.0 - root_beta));
    return std::sqrt(std::max(inner, 0.0)) / xi;
}

double wiener_coefficient(double l, double sigma) {
    require_finite_nonneg(l, "eigenvalue");
    require_finite_nonneg(sigma, "sigma");
    const double denom = l + sigma * sigma;
    if (denom == 0.0) {
        return 0.0;
    }
    return l / denom;
}

CovarianceSpectrum covariance_spectrum(const UnitMatrix& y) {
    const auto& data = y.data();
    const double n = static_cast<double>(y.cols());

    CovarianceSpectrum out;
    out.mean = data.rowwise().mean();
    const Eigen::MatrixXd centered = data.colwise() - out.mean;
    const Eigen::MatrixXd cov = (centered * centered.transpose()) / n;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) {
        std::ostringstream os;
        os << "eigensolver failed on " << cov.rows() << "x" << cov.cols()
           << " covariance (trace = " << cov.trace()
           << ", max |entry| = " << cov.cwiseAbs().maxCoeff() << ")";
        throw NumericalError(os.str());
    }

    // Eigen returns ascending order; reverse to non-increasing.
    out.eigenvalues = solver.eigenvalues().reverse();
    out.eigenvectors = solver.eigenvectors().rowwise().reverse();

    const double top = std::max(out.eigenvalues(0), 0.0);
    const double tol = 1e-10 * top;
    for (Eigen::Index i = 0; i < out.eigenvalues.size(); ++i) {
        double& v = out.eigenvalues(i);
        if (v < 0.0) {
            if (v < -tol && top > 0.0) {
                std::ostringstream os;
                os << "covariance eigenvalue " << v << " is negative beyond round-off (largest "
                   << top << ")";
                throw NumericalError(os.str());
            }
            v = 0.0;
        }
    }
    normalize_signs(out.eigenvectors);
    return out;
}

DenoiseResult cos_denoise(const UnitMatrix& y, const NoiseEstimate& noise) {
    const double sigma = noise.sigma;
    const double beta = y.beta();
    return covariance_filter(y, noise, Method::cOS, [sigma, beta](double l) {
        return cos_coefficient(debias_eigenvalue(l, sigma, beta), sigma, beta);
    });
}

DenoiseResult wiener_denoise(const UnitMatrix& y, const NoiseEstimate& noise) {
    const double sigma = noise.sigma;
    return covariance_filter(y, noise, Method::WF,
                             [sigma](double l) { return wiener_coefficient(l, sigma); });
}

DenoiseResult sos_denoise(const UnitMatrix& y, const NoiseEstimate& noise) {
    require_finite_nonneg(noise.sigma, "noise sigma");

    const double beta = y.beta();
    const double scale = noise.sigma * std::sqrt(static_cast<double>(y.cols()));

    DenoiseResult result;
    result.method = Method::sOS;

    // Noiseless limit: report raw singular values, leave Y untouched.
    const bool identity = noise.sigma == 0.0;
    const Eigen::MatrixXd normalized = identity ? y.data() : Eigen::MatrixXd(y.data() / scale);

    Eigen::BDCSVD<Eigen::MatrixXd> svd(normalized, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success) {
        std::ostringstream os;
        os << "SVD of normalized " << y.rows() << "x" << y.cols() << " matrix failed (max |entry| = "
           << normalized.cwiseAbs().maxCoeff() << ")";
        throw NumericalError(os.str());
    }
    result.spectrum_before = svd.singularValues();

    if (identity) {
        result.spectrum_after = result.spectrum_before;
        result.effective_rank = count_positive(result.spectrum_after);
        result.x_hat = y.data();
        return result;
    }

    const Eigen::Index k = result.spectrum_before.size();
    result.spectrum_after.resize(k);
    for (Eigen::Index i = 0; i < k; ++i) {
        result.spectrum_after(i) = frobenius_shrinker(result.spectrum_before(i), beta);
    }
    result.effective_rank = count_positive(result.spectrum_after);

    const Eigen::Index r = result.effective_rank;
    if (r == 0) {
        result.x_hat = Eigen::MatrixXd::Zero(y.rows(), y.cols());
        return result;
    }
    // Shrunken values are non-increasing, so the kept triples are the leading r.
    Eigen::MatrixXd u = svd.matrixU().leftCols(r);
    Eigen::MatrixXd v = svd.matrixV().leftCols(r);
    normalize_signs(u, &v);
    result.x_hat = scale * (u * result.spectrum_after.head(r).asDiagonal() * v.transpose());
    return result;
}

DenoiseResult baseline_denoise(const UnitMatrix& y) {
    DenoiseResult result;
    result.method = Method::BM;
    result.x_hat = y.data();
    return result;
}

DenoiseResult denoise(Method method, const UnitMatrix& y, const NoiseEstimate& noise) {
    switch (method) {
    case Method::BM: return baseline_denoise(y);
    case Method::WF: return wiener_denoise(y, noise);
    case Method::cOS: return cos_denoise(y, noise);
    case Method::sOS: return sos_denoise(y, noise);
    }
    throw InputError("unknown method");
}

} // namespace ceoae
