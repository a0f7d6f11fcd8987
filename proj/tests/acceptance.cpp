// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 if any fail.
#include "ceoae/bench.hpp"
#include "ceoae/cli.hpp"
#include "ceoae/eval.hpp"
#include "ceoae/matrix_io.hpp"
#include "ceoae/pipeline.hpp"
#include "ceoae/shrinkage.hpp"
#include "ceoae/synth.hpp"
#include "oracles.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace ceoae;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            if (pass) detail << "failed: ";
            else detail << "; ";
            detail << what;
            pass = false;
        }
    }
};

const std::vector<double> kBetas{0.05, 0.25, 1.0, 2.0, 8.0};
const std::vector<double> kSigmas{0.01, 1.0, 30.0};

std::vector<double> log_grid(double lo, double hi, int count) {
    std::vector<double> out;
    for (int i = 0; i < count; ++i) out.push_back(lo * std::pow(hi / lo, double(i) / (count - 1)));
    return out;
}

double rel(double a, double b) { return b == 0.0 ? std::abs(a) : std::abs(a - b) / std::abs(b); }

// Root of the forward model by bisection in long double, above the bulk edge.
double debias_by_bisection(double l, double sigma, double beta) {
    long double lo = sigma * sigma * std::sqrt(beta);
    long double hi = l;
    const auto f = [&](long double lam) {
        const long double s2 = (long double)sigma * sigma;
        return (lam + s2) * (1.0L + beta * s2 / lam) - l;
    };
    for (int i = 0; i < 200; ++i) {
        const long double mid = 0.5L * (lo + hi);
        (f(mid) > 0 ? hi : lo) = mid;
    }
    return static_cast<double>(0.5L * (lo + hi));
}

double shrinker_direct(double xi, double beta) {
    if (xi < 1.0 + std::sqrt(beta)) return 0.0;
    const long double x2 = (long double)xi * xi;
    return static_cast<double>(std::sqrt((x2 - beta - 1.0L) * (x2 - beta - 1.0L) - 4.0L * beta) / xi);
}

double cos_direct(double lambda, double sigma, double beta) {
    const long double r = (long double)lambda / ((long double)sigma * sigma);
    if (r < std::sqrt((long double)beta)) return 0.0;
    const long double k = (r * r - beta) / (r + beta);
    return static_cast<double>(k / (1.0L + k));
}

Outcome criterion1() {
    Outcome o;
    o.require(rel(frobenius_shrinker(3.0, 1.0), std::sqrt(5.0)) <= 1e-10, "eta(3, 1) != sqrt(5)");
    o.require(rel(debias_eigenvalue(4.5, 1.0, 1.0), 2.0) <= 1e-10, "debias(4.5, 1, 1) != 2");
    o.require(debias_eigenvalue(3.9, 1.0, 1.0) == 0.0, "debias inside the bulk is not 0");
    o.require(cos_coefficient(2.0, 1.0, 4.0) == 0.0, "cOS at the threshold is not 0");
    o.require(frobenius_shrinker(2.0, 1.0) == 0.0, "eta at the bulk edge is not 0");
    o.require(rel(cos_coefficient(2.0, 1.0, 1.0), 0.5) <= 1e-10, "cOS(2, 1, 1) != 0.5");
    o.require(rel(wiener_coefficient(3.0, 1.0), 0.75) <= 1e-10, "WF(3 sigma^2) != 0.75");

    double worst = 0.0;
    std::size_t count = 0;
    for (double beta : kBetas) {
        for (double xi : log_grid(1.0 + std::sqrt(beta) + 1e-3, 1e4, 300)) {
            worst = std::max(worst, rel(frobenius_shrinker(xi, beta), shrinker_direct(xi, beta)));
            ++count;
        }
        for (double sigma : kSigmas) {
            const double edge = sigma * sigma * (1.0 + std::sqrt(beta)) * (1.0 + std::sqrt(beta));
            for (double l : log_grid(edge * 1.01, edge * 1e6, 300)) {
                worst = std::max(worst, rel(debias_eigenvalue(l, sigma, beta), debias_by_bisection(l, sigma, beta)));
                worst = std::max(worst, rel(wiener_coefficient(l, sigma), l / (l + sigma * sigma)));
                count += 2;
            }
            for (double lam : log_grid(sigma * sigma * 1e-3, sigma * sigma * 1e6, 300)) {
                worst = std::max(worst, rel(cos_coefficient(lam, sigma, beta), cos_direct(lam, sigma, beta)));
                ++count;
            }
        }
    }
    o.require(worst <= 1e-10, "grid deviation above 1e-10");
    o.detail << count << " grid points, worst relative deviation " << worst;
    return o;
}

Outcome criterion2() {
    Outcome o;
    double worst = 0.0;
    std::size_t count = 0;
    for (double beta : kBetas) {
        for (double sigma : kSigmas) {
            for (double ratio : log_grid(1.01 * std::sqrt(beta), 1e6, 400)) {
                const double lambda = ratio * sigma * sigma;
                const double back = debias_eigenvalue(oracle::observed_eigenvalue(lambda, sigma, beta), sigma, beta);
                worst = std::max(worst, rel(back, lambda));
                ++count;
            }
        }
    }
    o.require(worst <= 1e-10, "round trip deviation above 1e-10");
    o.detail << count << " (lambda, sigma, beta) points, worst relative deviation " << worst;
    return o;
}

Outcome criterion3() {
    Outcome o;
    const struct {
        Eigen::Index p, n;
    } shapes[] = {{200, 100}, {100, 400}};
    for (const auto& s : shapes) {
        int good = 0;
        for (int seed = 0; seed < 100; ++seed) {
            const double sigma = 0.37;
            const UnitMatrix y(oracle::gaussian_matrix(s.p, s.n, sigma, 5000 + seed + 1000 * s.p), 1.0);
            const auto res = sos_denoise(y, NoiseEstimate::known(sigma));
            good += res.x_hat.norm() <= 0.05 * y.data().norm() ? 1 : 0;
        }
        o.require(good >= 95, std::to_string(s.p) + "x" + std::to_string(s.n) + " suppressed only " +
                                  std::to_string(good) + "/100");
        o.detail << s.p << "x" << s.n << ": " << good << "/100 suppressed  ";
    }
    return o;
}

Outcome criterion4() {
    Outcome o;
    SynthConfig cfg;
    CounterRng rng(4);
    const Eigen::MatrixXd x = make_signal_matrix(cfg, 200, rng);
    const double sx = std::sqrt((x.array() - x.mean()).square().mean());
    const double sigma = 1e-6 * sx;
    const UnitMatrix y(x + oracle::gaussian_matrix(x.rows(), x.cols(), sigma, 44), cfg.sample_rate);
    for (Method m : {Method::cOS, Method::sOS, Method::WF}) {
        const auto res = denoise(m, y, NoiseEstimate::known(sigma));
        const double dev = (res.x_hat - y.data()).norm() / y.data().norm();
        o.require(dev <= 1e-3, std::string(method_name(m)) + " deviates by " + std::to_string(dev));
        o.detail << method_name(m) << " " << std::scientific << std::setprecision(2) << dev << "  ";
    }
    return o;
}

MonteCarloTable trend_table() {
    BenchScenario sc;
    sc.target_bm_snr_db = 5.0;
    sc.realizations = 100;
    SynthConfig cfg;
    cfg.seed = 20240601;
    return run_benchmark(sc, cfg);
}

Outcome criterion5(const MonteCarloTable& t) {
    Outcome o;
    o.require(t.warnings.empty(), "benchmark reported failed realizations");
    const double bm400 = t.row(Method::BM, 400).median_db;
    o.require(std::abs(bm400 - 5.0) <= 1.0, "BM at n=400 is " + std::to_string(bm400) + " dB");
    double prev_gain = -1e9;
    o.detail << std::fixed << std::setprecision(2);
    for (Eigen::Index n : {400, 200, 100, 50}) {
        const double bm = t.row(Method::BM, n).median_db;
        const double wf = t.row(Method::WF, n).median_db;
        const double cs = t.row(Method::cOS, n).median_db;
        const double ss = t.row(Method::sOS, n).median_db;
        const std::string at = " at n=" + std::to_string(n);
        o.require(ss >= cs && cs >= wf && wf >= bm, "ordering broken" + at);
        o.require(wf - bm <= 1.0, "WF - BM above 1 dB" + at);
        o.require(ss - bm >= prev_gain, "sOS - BM not monotone" + at);
        prev_gain = ss - bm;
        o.detail << "n=" << n << " BM " << bm << " WF " << wf << " cOS " << cs << " sOS " << ss << " | ";
    }
    o.require(prev_gain >= 3.0, "sOS - BM at n=50 below 3 dB");
    o.detail << "sigma " << std::scientific << t.sigma << " Pa";
    return o;
}

Outcome criterion6(const MonteCarloTable& t) {
    Outcome o;
    o.detail << std::fixed << std::setprecision(2) << "drops:";
    const Eigen::Index ns[] = {400, 200, 100, 50};
    for (int i = 0; i + 1 < 4; ++i) {
        const double drop = t.row(Method::BM, ns[i]).median_db - t.row(Method::BM, ns[i + 1]).median_db;
        o.require(std::abs(drop - 3.0) <= 0.8, "drop " + std::to_string(drop) + " dB after n=" + std::to_string(ns[i]));
        o.detail << " " << drop;
    }
    o.detail << " dB";
    return o;
}

Outcome criterion7() {
    Outcome o;
    constexpr double fs = 44100.0;
    const PipelineConfig cfg;
    const std::size_t t = cfg.click_interval_samples;

    // Linear cancellation.
    RawUnit unit;
    unit.samples.resize(3 * t);
    std::vector<double> h(t);
    for (std::size_t j = 0; j < t; ++j) {
        const double s = double(j) / fs;
        h[j] = std::exp(-s / 0.004) * std::sin(2.0 * 3.141592653589793 * (1500.0 + 2e5 * s) * s);
    }
    const double weights[3] = {1.0, 1.0, -2.0};
    for (int k = 0; k < 3; ++k)
        for (std::size_t j = 0; j < t; ++j) unit.samples[k * t + j] = weights[k] * h[j];
    const double residual = oracle::rms(extract_response(unit, cfg).samples);
    const double cancel_db = residual == 0.0 ? INFINITY : -20.0 * std::log10(residual / oracle::rms(h));
    o.require(cancel_db >= 40.0, "linear cancellation only " + std::to_string(cancel_db) + " dB");

    // Rejection rules.
    const auto spike = [&](double ms, double db) {
        ResponseUnit r;
        r.samples.assign(t, 0.0);
        r.samples[static_cast<std::size_t>(std::round(ms * fs / 1000.0))] = pressure_from_db_spl(db);
        return r;
    };
    o.require(reject_artifacts({spike(6.0, 51.0)}, cfg, fs).stats.rejected == 1, "51 dB at 6 ms kept");
    o.require(reject_artifacts({spike(2.0, 70.0)}, cfg, fs).stats.kept == 1, "70 dB at 2 ms rejected");
    o.require(reject_artifacts({spike(6.0, 49.0)}, cfg, fs).stats.kept == 1, "49 dB at 6 ms rejected");
    std::vector<ResponseUnit> batch;
    for (int i = 0; i < 100; ++i) batch.push_back(spike(10.0, i < 81 ? 60.0 : 20.0));
    const auto abandon = reject_artifacts(batch, cfg, fs).stats;
    o.require(abandon.abandoned && abandon.rejected == 81, "81/100 did not abandon");
    batch[80] = spike(10.0, 20.0);
    o.require(!reject_artifacts(batch, cfg, fs).stats.abandoned, "80/100 abandoned");

    // Matrix height.
    std::vector<ResponseUnit> kept(3);
    for (auto& r : kept) r.samples.assign(t, 1.0);
    const Eigen::Index p = build_matrix(kept, cfg, fs).rows();
    o.require(p == 882, "p = " + std::to_string(p));
    o.detail << "cancellation " << (std::isinf(cancel_db) ? std::string("exact") : std::to_string(cancel_db) + " dB")
             << ", rejection edge cases ok, p = " << p;
    return o;
}

Outcome criterion8() {
    Outcome o;
    constexpr double fs = 44100.0;
    const PipelineConfig cfg;
    std::mt19937_64 eng(8);
    double worst = 0.0;
    for (std::size_t n : {200, 400, 1000}) {
        for (double sigma : {356e-6, 1.0, 12.5}) {
            std::normal_distribution<double> dist(0.0, sigma);
            std::vector<ResponseUnit> rs(n);
            for (auto& r : rs) {
                r.samples.resize(cfg.click_interval_samples);
                for (double& v : r.samples) v = dist(eng);
            }
            const double est = estimate_noise(rs, cfg, fs).sigma;
            worst = std::max(worst, rel(est, sigma));
        }
    }
    o.require(worst <= 0.05, "relative error " + std::to_string(worst));
    o.detail << "worst relative error " << worst << " over n in {200, 400, 1000}";
    return o;
}

Outcome criterion9() {
    Outcome o;
    std::size_t count = 0;
    for (double beta : kBetas) {
        for (double sigma : {0.01, 0.5, 1.0, 2.0, 30.0}) {
            for (double r : log_grid(1e-6, 1e6, 400)) {
                const double l = r * sigma * sigma;
                const double h = cos_coefficient(debias_eigenvalue(l, sigma, beta), sigma, beta);
                if (!(h <= wiener_coefficient(l, sigma))) {
                    o.require(false, "unit-level violation");
                }
                ++count;
            }
        }
    }

    const fs::path dir = fs::temp_directory_path() / ("ceoae-accept-" + std::to_string(std::random_device{}()));
    fs::create_directories(dir);
    Eigen::MatrixXd y = oracle::gaussian_matrix(120, 90, 1.0, 9);
    y += 3.0 * Eigen::VectorXd::LinSpaced(120, -1.0, 1.0) * oracle::gaussian_matrix(1, 90, 1.0, 10);
    y += 1.5 * Eigen::VectorXd::LinSpaced(120, 0.0, 6.0).array().sin().matrix() * oracle::gaussian_matrix(1, 90, 1.0, 11);
    write_matrix_csv(dir / "Y.csv", y);
    std::ostringstream sink;
    int rank = 0;
    for (const char* m : {"cos", "wf"}) {
        const int code = cli::run({"ceoae", "denoise", (dir / "Y.csv").string(), "--method", m, "--sigma", "1",
                                   "--out", (dir / m).string()},
                                  sink, sink);
        o.require(code == cli::kExitOk, std::string("denoise --method ") + m + " exited " + std::to_string(code));
    }
    if (o.pass) {
        const auto c = read_json(dir / "cos" / "spectrum.json");
        const auto w = read_json(dir / "wf" / "spectrum.json").at("spectrum_after");
        const auto& ch = c.at("spectrum_after");
        rank = c.at("effective_rank").get<int>();
        o.require(ch.size() == w.size(), "spectrum lengths differ");
        for (std::size_t i = 0; i < ch.size() && i < w.size(); ++i) {
            if (!(ch[i].get<double>() <= w[i].get<double>())) o.require(false, "end-to-end violation at " + std::to_string(i));
        }
        o.require(rank >= 1, "cOS kept no component");
    }
    fs::remove_all(dir);
    o.detail << count << " grid points; end-to-end cOS rank " << rank << ", all coefficients <= WF";
    return o;
}

} // namespace

int main() {
    bool all = true;
    const auto report = [&](int id, const char* title, double budget_s, const std::function<Outcome()>& fn) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o = fn();
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (secs > budget_s) o.require(false, "runtime over budget");
        all = all && o.pass;
        std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << " (" << title << ", "
                  << std::fixed << std::setprecision(2) << secs << " s of " << budget_s << " s): "
                  << o.detail.str() << std::endl;
    };

    report(1, "shrinker oracles", 1.0, criterion1);
    report(2, "round trip", 1.0, criterion2);
    report(3, "bulk suppression", 30.0, criterion3);
    report(4, "identity limits", 5.0, criterion4);

    // Criterion 6 reads the table built (and timed) under criterion 5.
    MonteCarloTable table;
    report(5, "white-noise trend", 600.0, [&] {
        table = trend_table();
        return criterion5(table);
    });
    report(6, "3-dB rule", 600.0, [&] { return criterion6(table); });

    report(7, "pipeline", 30.0, criterion7);
    report(8, "noise estimator", 30.0, criterion8);
    report(9, "aggressiveness", 30.0, criterion9);
    return all ? 0 : 1;
}
