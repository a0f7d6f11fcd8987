#include "ceoae/bench.hpp"

#include "ceoae/errors.hpp"
#include "ceoae/eval.hpp"
#include "ceoae/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>
#include <thread>

namespace ceoae {

namespace {

// Purpose tags that keep signal and noise draws on separate streams.
constexpr std::uint64_t kSignalStream = 1;
constexpr std::uint64_t kNoiseStream = 2;
constexpr std::uint64_t kColoredRecordingStream = 3;

constexpr std::size_t kMinColoredLength = std::size_t{1} << 20;

struct RealizationOutcome {
    std::vector<double> snr;          // indexed like the evaluated method list
    std::string error;
};

nlohmann::json number_or_tag(double v) {
    if (std::isnan(v)) return nullptr;
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

std::string noise_kind_name(NoiseKind k) {
    switch (k) {
    case NoiseKind::White: return "white";
    case NoiseKind::Ambient: return "ambient";
    case NoiseKind::Colored: return "colored";
    }
    return "?";
}

NoiseKind parse_noise_kind(const std::string& s) {
    if (s == "white") return NoiseKind::White;
    if (s == "ambient") return NoiseKind::Ambient;
    if (s == "colored") return NoiseKind::Colored;
    throw InputError("scenario: noise_kind must be white, ambient or colored, got '" + s + "'");
}

std::vector<double> drop_failed(const std::vector<double>& v) {
    std::vector<double> out;
    for (double x : v) {
        if (!std::isnan(x)) out.push_back(x);
    }
    return out;
}

} // namespace

void BenchScenario::validate() const {
    std::ostringstream os;
    if (n_values.empty()) {
        os << "n_values must not be empty";
    } else if (std::any_of(n_values.begin(), n_values.end(), [](Eigen::Index n) { return n < 2; })) {
        os << "every n must be at least 2";
    } else if (realizations < 1) {
        os << "realizations must be at least 1";
    } else if (!target_bm_snr_db && !(sigma > 0.0 && std::isfinite(sigma))) {
        os << "sigma must be positive";
    } else if (target_bm_snr_db && !std::isfinite(*target_bm_snr_db)) {
        os << "target_bm_snr_db must be finite";
    } else if (methods.empty()) {
        os << "methods must not be empty";
    } else if (noise_kind == NoiseKind::Ambient && ambient_path.empty()) {
        os << "ambient noise needs ambient_path";
    }
    if (!os.str().empty()) {
        throw InputError("scenario: " + os.str());
    }
}

const MonteCarloRow& MonteCarloTable::row(Method method, Eigen::Index n) const {
    for (const auto& r : rows) {
        if (r.method == method && r.n == n) return r;
    }
    std::ostringstream os;
    os << "no table row for " << method_name(method) << " at n = " << n;
    throw InputError(os.str());
}

double calibrate_sigma(const SynthConfig& cfg, Eigen::Index n, double target_db) {
    const Eigen::VectorXd base = chirp_template(cfg);
    const double sx = std::sqrt((base.array() - base.mean()).square().mean());
    // Var(median) ~ (pi/2) sigma^2 / n for Gaussian noise.
    const double ratio = std::pow(10.0, target_db / 10.0);
    return sx * std::sqrt(static_cast<double>(n) / (std::numbers::pi / 2.0 * ratio));
}

MonteCarloTable run_benchmark(const BenchScenario& scenario, const SynthConfig& cfg,
                              const SampleBuffer* ambient) {
    scenario.validate();
    cfg.validate();

    MonteCarloTable table;
    table.sigma = scenario.target_bm_snr_db
                      ? calibrate_sigma(cfg, scenario.n_values.front(), *scenario.target_bm_snr_db)
                      : scenario.sigma;

    // Always evaluate BM so enhancements can be reported.
    std::vector<Method> evaluated{Method::BM};
    for (Method m : scenario.methods) {
        if (std::find(evaluated.begin(), evaluated.end(), m) == evaluated.end()) {
            evaluated.push_back(m);
        }
    }

    const Eigen::Index n_max = *std::max_element(scenario.n_values.begin(), scenario.n_values.end());
    SampleBuffer noise_source;
    if (scenario.noise_kind == NoiseKind::Ambient) {
        if (ambient == nullptr) {
            throw InputError("ambient scenario run without a recording");
        }
        noise_source = normalize_recording(resample(*ambient, cfg.sample_rate));
    } else if (scenario.noise_kind == NoiseKind::Colored) {
        CounterRng rng(cfg.seed, CounterRng::stream_id({kColoredRecordingStream}));
        const std::size_t length =
            std::max(kMinColoredLength, 4 * static_cast<std::size_t>(cfg.p * n_max));
        noise_source = colored_noise_recording(length, cfg.sample_rate, rng);
    }

    const std::size_t per_n = scenario.realizations;
    const std::size_t total = scenario.n_values.size() * per_n;
    std::vector<RealizationOutcome> outcomes(total);

    auto run_one = [&](std::size_t item) {
        const Eigen::Index n = scenario.n_values[item / per_n];
        const std::size_t r = item % per_n;
        RealizationOutcome& out = outcomes[item];
        out.snr.assign(evaluated.size(), std::numeric_limits<double>::quiet_NaN());
        try {
            CounterRng signal_rng(cfg.seed, CounterRng::stream_id({static_cast<std::uint64_t>(n), r, kSignalStream}));
            CounterRng noise_rng(cfg.seed, CounterRng::stream_id({static_cast<std::uint64_t>(n), r, kNoiseStream}));
            const Eigen::MatrixXd x = make_signal_matrix(cfg, n, signal_rng);
            const Eigen::VectorXd truth = pointwise_median(x);
            Eigen::MatrixXd z = scenario.noise_kind == NoiseKind::White
                                    ? white_noise_matrix(cfg.p, n, table.sigma, noise_rng)
                                    : ambient_window(noise_source, cfg.p, n, table.sigma, noise_rng);
            const UnitMatrix y(x + z, cfg.sample_rate);
            const NoiseEstimate noise = NoiseEstimate::known(table.sigma);
            std::vector<double> snr(evaluated.size());
            for (std::size_t k = 0; k < evaluated.size(); ++k) {
                const DenoiseResult res = denoise(evaluated[k], y, noise);
                snr[k] = snr_db(pointwise_median(res.x_hat), truth);
            }
            out.snr = std::move(snr);
        } catch (const std::exception& e) {
            std::ostringstream os;
            os << "n = " << n << ", realization " << r << " failed: " << e.what();
            out.error = os.str();
        }
    };

    unsigned threads = scenario.threads != 0 ? scenario.threads : std::thread::hardware_concurrency();
    threads = std::clamp<unsigned>(threads, 1, static_cast<unsigned>(std::max<std::size_t>(1, total)));
    if (threads == 1) {
        for (std::size_t i = 0; i < total; ++i) run_one(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < total; i = next++) run_one(i);
            });
        }
    }

    for (const auto& o : outcomes) {
        if (!o.error.empty()) {
            table.warnings.push_back(o.error);
            std::cerr << "warning: " << o.error << " (excluded)\n";
        }
    }

    for (Method m : scenario.methods) {
        const auto k = static_cast<std::size_t>(
            std::find(evaluated.begin(), evaluated.end(), m) - evaluated.begin());
        for (std::size_t ni = 0; ni < scenario.n_values.size(); ++ni) {
            std::vector<double> raw(per_n);
            std::vector<double> enhancement;
            for (std::size_t r = 0; r < per_n; ++r) {
                const auto& o = outcomes[ni * per_n + r];
                raw[r] = o.snr[k];
                if (!std::isnan(o.snr[k]) && std::isfinite(o.snr[k]) && std::isfinite(o.snr[0])) {
                    enhancement.push_back(o.snr[k] - o.snr[0]);
                }
            }
            const std::vector<double> used = drop_failed(raw);
            MonteCarloRow row;
            row.method = m;
            row.n = scenario.n_values[ni];
            row.realizations_used = used.size();
            if (used.empty()) {
                row.median_db = row.iqr_db = std::numeric_limits<double>::quiet_NaN();
            } else {
                row.median_db = median(used);
                row.iqr_db = interquartile_range(used);
            }
            row.median_enhancement_db = enhancement.empty()
                                            ? std::numeric_limits<double>::quiet_NaN()
                                            : median(enhancement);
            table.rows.push_back(row);
            table.raw_snr_db.push_back(std::move(raw));
        }
    }
    return table;
}

void parse_scenario(const nlohmann::json& j, BenchScenario& scenario_out, SynthConfig& cfg_out) {
    BenchScenario scenario = scenario_out;
    SynthConfig cfg = cfg_out;
    if (!j.is_object()) {
        throw InputError("scenario: top level must be a JSON object");
    }
    static const std::set<std::string> top_keys{
        "n_values", "sigma", "target_bm_snr_db", "noise_kind", "ambient_path",
        "ambient_calibration", "realizations", "methods", "threads", "synth"};
    static const std::set<std::string> synth_keys{
        "p", "sample_rate", "f_start", "f_end", "if_decay_ms", "envelope_peak_ms",
        "rms_level_db_spl", "gain_std", "second_component", "seed"};

    std::string key;
    try {
        for (const auto& [k, v] : j.items()) {
            key = k;
            if (!top_keys.contains(k)) {
                throw InputError("unknown key");
            }
            if (k == "n_values") {
                scenario.n_values = v.get<std::vector<Eigen::Index>>();
            } else if (k == "sigma") {
                scenario.sigma = v.get<double>();
            } else if (k == "target_bm_snr_db") {
                if (v.is_null()) scenario.target_bm_snr_db.reset();
                else scenario.target_bm_snr_db = v.get<double>();
            } else if (k == "noise_kind") {
                scenario.noise_kind = parse_noise_kind(v.get<std::string>());
            } else if (k == "ambient_path") {
                scenario.ambient_path = v.get<std::string>();
            } else if (k == "ambient_calibration") {
                scenario.ambient_calibration = v.get<double>();
            } else if (k == "realizations") {
                scenario.realizations = v.get<std::size_t>();
            } else if (k == "threads") {
                scenario.threads = v.get<unsigned>();
            } else if (k == "methods") {
                scenario.methods.clear();
                for (const auto& m : v) {
                    scenario.methods.push_back(parse_method(m.get<std::string>()));
                }
            } else if (k == "synth") {
                if (!v.is_object()) throw InputError("must be an object");
                for (const auto& [sk, sv] : v.items()) {
                    key = "synth." + sk;
                    if (!synth_keys.contains(sk)) throw InputError("unknown key");
                    if (sk == "p") cfg.p = sv.get<Eigen::Index>();
                    else if (sk == "sample_rate") cfg.sample_rate = sv.get<double>();
                    else if (sk == "f_start") cfg.f_start_hz = sv.get<double>();
                    else if (sk == "f_end") cfg.f_end_hz = sv.get<double>();
                    else if (sk == "if_decay_ms") cfg.if_decay_ms = sv.get<double>();
                    else if (sk == "envelope_peak_ms") cfg.envelope_peak_ms = sv.get<double>();
                    else if (sk == "rms_level_db_spl") cfg.rms_level_db_spl = sv.get<double>();
                    else if (sk == "gain_std") cfg.gain_std = sv.get<double>();
                    else if (sk == "second_component") cfg.second_component = sv.get<double>();
                    else if (sk == "seed") cfg.seed = sv.get<std::uint64_t>();
                }
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw InputError("scenario: key '" + key + "': " + e.what());
    } catch (const InputError& e) {
        const std::string what = e.what();
        if (what.rfind("scenario:", 0) == 0) throw;
        throw InputError("scenario: key '" + key + "': " + what);
    }
    scenario.validate();
    cfg.validate();
    scenario_out = std::move(scenario);
    cfg_out = cfg;
}

nlohmann::json scenario_to_json(const BenchScenario& scenario, const SynthConfig& cfg) {
    nlohmann::json methods = nlohmann::json::array();
    for (Method m : scenario.methods) methods.push_back(std::string(method_name(m)));
    nlohmann::json j = {
        {"n_values", scenario.n_values},
        {"sigma", scenario.sigma},
        {"target_bm_snr_db", scenario.target_bm_snr_db ? nlohmann::json(*scenario.target_bm_snr_db)
                                                       : nlohmann::json(nullptr)},
        {"noise_kind", noise_kind_name(scenario.noise_kind)},
        {"realizations", scenario.realizations},
        {"methods", methods},
        {"synth",
         {{"p", cfg.p},
          {"sample_rate", cfg.sample_rate},
          {"f_start", cfg.f_start_hz},
          {"f_end", cfg.f_end_hz},
          {"if_decay_ms", cfg.if_decay_ms},
          {"envelope_peak_ms", cfg.envelope_peak_ms},
          {"rms_level_db_spl", cfg.rms_level_db_spl},
          {"gain_std", cfg.gain_std},
          {"second_component", cfg.second_component},
          {"seed", cfg.seed}}},
    };
    if (scenario.noise_kind == NoiseKind::Ambient) {
        j["ambient_path"] = scenario.ambient_path.string();
        j["ambient_calibration"] = scenario.ambient_calibration;
    }
    return j;
}

nlohmann::json table_to_json(const MonteCarloTable& table) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& r = table.rows[i];
        nlohmann::json raw = nlohmann::json::array();
        for (double v : table.raw_snr_db[i]) raw.push_back(number_or_tag(v));
        rows.push_back({
            {"method", std::string(method_name(r.method))},
            {"n", r.n},
            {"median_db", number_or_tag(r.median_db)},
            {"iqr_db", number_or_tag(r.iqr_db)},
            {"realizations_used", r.realizations_used},
            {"median_enhancement_db", number_or_tag(r.median_enhancement_db)},
            {"raw_snr_db", raw},
        });
    }
    return {{"sigma", table.sigma}, {"rows", rows}, {"warnings", table.warnings}};
}

namespace {

std::ofstream open_csv(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write '" + path.string() + "'");
    out.precision(17);
    return out;
}

} // namespace

void write_table_csv(const std::filesystem::path& path, const MonteCarloTable& table) {
    std::ofstream out = open_csv(path);
    out << "method,n,median_db,iqr_db,realizations_used\n";
    for (const auto& r : table.rows) {
        out << method_name(r.method) << ',' << r.n << ',' << r.median_db << ',' << r.iqr_db << ','
            << r.realizations_used << '\n';
    }
}

void write_raw_csv(const std::filesystem::path& path, const MonteCarloTable& table) {
    std::ofstream out = open_csv(path);
    out << "method,n,realization,snr_db\n";
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& r = table.rows[i];
        for (std::size_t k = 0; k < table.raw_snr_db[i].size(); ++k) {
            out << method_name(r.method) << ',' << r.n << ',' << k << ',' << table.raw_snr_db[i][k]
                << '\n';
        }
    }
}

} // namespace ceoae
