#ifndef CEOAE_MATRIX_IO_HPP
#define CEOAE_MATRIX_IO_HPP

#include <Eigen/Dense>
#include <json.hpp>

#include <filesystem>
#include <optional>
#include <vector>

namespace ceoae {

/// Plain decimal CSV, one matrix row per line. Values are written in the
/// shortest form that reads back bit-exact.
void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path);

/// A vector is stored as a single-column CSV.
void write_vector_csv(const std::filesystem::path& path, const Eigen::VectorXd& v);
Eigen::VectorXd read_vector_csv(const std::filesystem::path& path);

/// JSON metadata stored next to a matrix CSV.
struct MatrixSidecar {
    double sample_rate = 0.0;
    Eigen::Index p = 0;
    Eigen::Index n = 0;
    std::optional<double> sigma;
    std::vector<double> per_unit_sigmas;
    nlohmann::json provenance = nlohmann::json::object();
};

/// "<dir>/<stem>.json" for "<dir>/<stem>.csv".
std::filesystem::path sidecar_path(const std::filesystem::path& csv_path);

void write_sidecar(const std::filesystem::path& path, const MatrixSidecar& meta);
MatrixSidecar read_sidecar(const std::filesystem::path& path);

/// Writes `j` with two-space indentation and a trailing newline.
void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

} // namespace ceoae

#endif
