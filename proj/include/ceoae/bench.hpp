#ifndef CEOAE_BENCH_HPP
#define CEOAE_BENCH_HPP

#include "ceoae/pipeline.hpp"
#include "ceoae/shrinkage.hpp"
#include "ceoae/synth.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace ceoae {

enum class NoiseKind { White, Ambient, Colored };

struct BenchScenario {
    std::vector<Eigen::Index> n_values{400, 200, 100, 50};
    double sigma = 1.93e-6;
    /// When set, sigma is replaced by the level that puts the baseline median
    /// at this SNR for the first entry of n_values.
    std::optional<double> target_bm_snr_db;
    NoiseKind noise_kind = NoiseKind::White;
    std::filesystem::path ambient_path;
    double ambient_calibration = 1.0;
    std::size_t realizations = 100;
    std::vector<Method> methods{Method::BM, Method::WF, Method::cOS, Method::sOS};
    /// Worker threads; 0 uses the hardware concurrency.
    unsigned threads = 0;

    void validate() const;
};

struct MonteCarloRow {
    Method method = Method::BM;
    Eigen::Index n = 0;
    double median_db = 0.0;
    double iqr_db = 0.0;
    std::size_t realizations_used = 0;
    /// Median over realizations of (method SNR - BM SNR) on the same data.
    double median_enhancement_db = 0.0;
};

struct MonteCarloTable {
    std::vector<MonteCarloRow> rows;
    /// raw_snr_db[row][realization], aligned with `rows`; NaN marks a failed
    /// realization.
    std::vector<std::vector<double>> raw_snr_db;
    double sigma = 0.0;
    std::vector<std::string> warnings;

    const MonteCarloRow& row(Method method, Eigen::Index n) const;
};

/// Noise level giving a baseline (point-wise median) SNR of `target_db` with
/// n columns, from the asymptotic pi/2 variance ratio of median to mean.
double calibrate_sigma(const SynthConfig& cfg, Eigen::Index n, double target_db);

/// Monte-Carlo comparison. Realization r at column count n draws its signal
/// and noise from streams derived from (cfg.seed, n, r), so the table does
/// not depend on the thread count. `ambient` is required for
/// NoiseKind::Ambient and ignored otherwise.
MonteCarloTable run_benchmark(const BenchScenario& scenario, const SynthConfig& cfg,
                              const SampleBuffer* ambient = nullptr);

/// Parses a scenario file body over the given defaults. Throws InputError
/// naming the offending key and leaves both outputs untouched.
void parse_scenario(const nlohmann::json& j, BenchScenario& scenario, SynthConfig& cfg);
nlohmann::json scenario_to_json(const BenchScenario& scenario, const SynthConfig& cfg);

nlohmann::json table_to_json(const MonteCarloTable& table);
/// Columns: method,n,median_db,iqr_db,realizations_used.
void write_table_csv(const std::filesystem::path& path, const MonteCarloTable& table);
/// Columns: method,n,realization,snr_db.
void write_raw_csv(const std::filesystem::path& path, const MonteCarloTable& table);

} // namespace ceoae

#endif
