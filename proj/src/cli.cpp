#include "ceoae/cli.hpp"

#include "ceoae/bench.hpp"
#include "ceoae/errors.hpp"
#include "ceoae/eval.hpp"
#include "ceoae/matrix_io.hpp"
#include "ceoae/shrinkage.hpp"
#include "ceoae/wav.hpp"

#include <CLI11.hpp>
#include <openssl/evp.h>

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <memory>
#include <optional>
#include <set>
#include <sstream>

namespace ceoae::cli {

namespace fs = std::filesystem;

namespace {

std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

/// Collects the run manifest while a command executes.
class Manifest {
public:
    Manifest(std::string command, const std::vector<std::string>& args)
        : command_(std::move(command)), args_(args), started_(utc_now()) {}

    void add_input(const fs::path& path) {
        inputs_.push_back({{"path", path.string()}, {"sha256", sha256_file(path)}});
    }
    void set_config(nlohmann::json config) { config_ = std::move(config); }
    void set_seed(std::uint64_t seed) { seed_ = seed; }

    nlohmann::json to_json() const {
        return {
            {"command", command_},
            {"arguments", args_},
            {"config", config_},
            {"inputs", inputs_},
            {"master_seed", seed_ ? nlohmann::json(*seed_) : nlohmann::json(nullptr)},
            {"tool_version", kToolVersion},
            {"started_utc", started_},
            {"finished_utc", utc_now()},
        };
    }

    void write(const fs::path& dir) const { write_json(dir / "manifest.json", to_json()); }

private:
    std::string command_;
    std::vector<std::string> args_;
    nlohmann::json config_ = nlohmann::json::object();
    nlohmann::json inputs_ = nlohmann::json::array();
    std::optional<std::uint64_t> seed_;
    std::string started_;
};

fs::path resolve_out_dir(const std::string& flag, const std::string& command) {
    fs::path dir;
    if (!flag.empty()) {
        dir = flag;
    } else {
        const char* root = std::getenv(kOutRootEnv);
        dir = fs::path(root != nullptr && *root != '\0' ? root : ".") / (command + "-out");
    }
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw InputError("cannot create output directory '" + dir.string() + "': " + ec.message());
    }
    return dir;
}

nlohmann::json vector_json(const Eigen::VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
}

std::string matrix_source_id(const fs::path& csv, const std::optional<MatrixSidecar>& meta) {
    if (meta && meta->provenance.contains("source")) {
        return meta->provenance.at("source").get<std::string>();
    }
    return "sha256:" + sha256_file(csv);
}

std::optional<MatrixSidecar> try_sidecar(const fs::path& csv) {
    const fs::path side = sidecar_path(csv);
    if (!fs::exists(side)) return std::nullopt;
    return read_sidecar(side);
}

// --- segment ---------------------------------------------------------------

struct SegmentArgs {
    std::string wav;
    std::string config;
    std::string out;
};

int cmd_segment(const SegmentArgs& a, const std::vector<std::string>& argv, std::ostream& out) {
    Manifest manifest("segment", argv);
    SegmentConfig cfg;
    if (!a.config.empty()) {
        cfg = parse_segment_config(read_json(a.config));
        manifest.add_input(a.config);
    }
    manifest.set_config(to_json(cfg));
    manifest.add_input(a.wav);

    const SampleBuffer raw = read_wav(a.wav, cfg.pascals_per_full_scale);
    const PipelineOutput result = run_pipeline(raw, cfg.pipeline);
    const fs::path dir = resolve_out_dir(a.out, "segment");

    nlohmann::json stats = {
        {"first_click", result.first_click},
        {"units", result.units},
        {"total", result.stats.total},
        {"kept", result.stats.kept},
        {"rejected", result.stats.rejected},
        {"rejected_fraction", result.stats.rejected_fraction()},
        {"abandoned", result.stats.abandoned},
        {"sigma", result.noise ? nlohmann::json(result.noise->sigma) : nlohmann::json(nullptr)},
    };
    write_json(dir / "rejection.json", stats);

    int code = kExitOk;
    if (result.stats.abandoned) {
        out << "recording abandoned: " << result.stats.rejected << " of " << result.stats.total
            << " units rejected\n";
        code = kExitAbandoned;
    } else if (!result.matrix) {
        manifest.write(dir);
        throw InputError("fewer than two units survived artifact rejection");
    } else {
        const UnitMatrix& y = *result.matrix;
        const fs::path csv = dir / "Y.csv";
        write_matrix_csv(csv, y.data());
        MatrixSidecar meta;
        meta.sample_rate = y.sample_rate();
        meta.p = y.rows();
        meta.n = y.cols();
        meta.sigma = result.noise->sigma;
        meta.per_unit_sigmas = result.noise->per_unit_sigmas;
        meta.provenance = {
            {"command", "segment"},
            {"source", "sha256:" + sha256_file(csv)},
            {"recording", a.wav},
            {"recording_sha256", sha256_file(a.wav)},
            {"pipeline", to_json(cfg)},
            {"rejection", stats},
        };
        write_sidecar(sidecar_path(csv), meta);
        out << "wrote " << y.rows() << "x" << y.cols() << " matrix to " << csv.string()
            << " (sigma " << result.noise->sigma << " Pa)\n";
    }
    manifest.write(dir);
    return code;
}

// --- denoise ---------------------------------------------------------------

struct DenoiseArgs {
    std::string matrix;
    std::string method = "sos";
    std::optional<double> sigma;
    std::string out;
};

int cmd_denoise(const DenoiseArgs& a, const std::vector<std::string>& argv, std::ostream& out) {
    Manifest manifest("denoise", argv);
    const Method method = parse_method(a.method);
    manifest.add_input(a.matrix);
    const std::optional<MatrixSidecar> meta = try_sidecar(a.matrix);
    if (meta) manifest.add_input(sidecar_path(a.matrix));

    std::optional<double> sigma = a.sigma;
    if (!sigma && meta) sigma = meta->sigma;
    if (method != Method::BM && !sigma) {
        throw InputError("method " + std::string(method_name(method)) +
                         " needs a noise level: pass --sigma or provide a sidecar with sigma");
    }

    const double sample_rate = meta && meta->sample_rate > 0.0 ? meta->sample_rate : 1.0;
    const UnitMatrix y(read_matrix_csv(a.matrix), sample_rate);
    if (meta && (meta->p != y.rows() || meta->n != y.cols())) {
        throw InputError("sidecar dimensions do not match the matrix CSV");
    }
    const NoiseEstimate noise = NoiseEstimate::known(sigma.value_or(0.0));
    manifest.set_config({{"method", method_name(method)},
                         {"sigma", sigma ? nlohmann::json(*sigma) : nlohmann::json(nullptr)}});

    const DenoiseResult res = denoise(method, y, noise);
    const fs::path dir = resolve_out_dir(a.out, "denoise");
    const std::string source = matrix_source_id(a.matrix, meta);

    const fs::path xhat_csv = dir / "xhat.csv";
    write_matrix_csv(xhat_csv, res.x_hat);
    MatrixSidecar xmeta;
    xmeta.sample_rate = sample_rate;
    xmeta.p = y.rows();
    xmeta.n = y.cols();
    xmeta.sigma = sigma;
    xmeta.provenance = {{"command", "denoise"},
                        {"method", method_name(method)},
                        {"source", source},
                        {"units", y.cols()}};
    write_sidecar(sidecar_path(xhat_csv), xmeta);

    const fs::path median_csv = dir / "median.csv";
    write_vector_csv(median_csv, pointwise_median(res.x_hat));
    MatrixSidecar mmeta = xmeta;
    mmeta.n = 1;
    write_sidecar(sidecar_path(median_csv), mmeta);

    write_json(dir / "spectrum.json",
               {{"method", method_name(method)},
                {"p", y.rows()},
                {"n", y.cols()},
                {"beta", y.beta()},
                {"sigma", sigma ? nlohmann::json(*sigma) : nlohmann::json(nullptr)},
                {"spectrum_kind", method == Method::sOS ? "normalized_singular_values"
                                  : method == Method::BM ? "none"
                                                         : "covariance_eigenvalues"},
                {"spectrum_before", vector_json(res.spectrum_before)},
                {"spectrum_after", vector_json(res.spectrum_after)},
                {"effective_rank", res.effective_rank}});
    manifest.write(dir);
    out << method_name(method) << ": effective rank " << res.effective_rank << ", wrote "
        << xhat_csv.string() << "\n";
    return kExitOk;
}

// --- simulate --------------------------------------------------------------

struct SimulateArgs {
    std::string scenario;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::vector<Eigen::Index> n_values;
    std::optional<double> sigma;
    std::string method;
};

int cmd_simulate(const SimulateArgs& a, const std::vector<std::string>& argv, std::ostream& out) {
    Manifest manifest("simulate", argv);
    BenchScenario scenario;
    SynthConfig cfg;
    manifest.add_input(a.scenario);
    parse_scenario(read_json(a.scenario), scenario, cfg);
    if (a.seed) cfg.seed = *a.seed;
    if (!a.n_values.empty()) scenario.n_values = a.n_values;
    if (a.sigma) {
        scenario.sigma = *a.sigma;
        scenario.target_bm_snr_db.reset();
    }
    if (!a.method.empty()) scenario.methods = {parse_method(a.method)};
    scenario.validate();

    std::optional<SampleBuffer> ambient;
    if (scenario.noise_kind == NoiseKind::Ambient) {
        fs::path path = scenario.ambient_path;
        if (path.is_relative()) path = fs::path(a.scenario).parent_path() / path;
        manifest.add_input(path);
        ambient = read_wav(path, scenario.ambient_calibration);
    }
    manifest.set_config(scenario_to_json(scenario, cfg));
    manifest.set_seed(cfg.seed);

    const MonteCarloTable table = run_benchmark(scenario, cfg, ambient ? &*ambient : nullptr);
    const fs::path dir = resolve_out_dir(a.out, "simulate");
    write_table_csv(dir / "table.csv", table);
    write_raw_csv(dir / "raw.csv", table);
    write_json(dir / "table.json", table_to_json(table));
    manifest.write(dir);

    out << "sigma " << table.sigma << " Pa\n";
    out << std::fixed << std::setprecision(2);
    for (const auto& r : table.rows) {
        out << std::setw(4) << method_name(r.method) << "  n=" << std::setw(4) << r.n << "  "
            << std::setw(7) << r.median_db << " (" << r.iqr_db << ") dB\n";
    }
    return table.warnings.empty() ? kExitOk : kExitNumerical;
}

// --- eval ------------------------------------------------------------------

struct EvalArgs {
    std::string xhat;
    std::string truth;
    std::string baseline;
    std::string out;
    std::string method;
};

SnrReport evaluate_file(const fs::path& estimate, const Eigen::VectorXd& truth,
                        const std::string& reference, const std::string& method_flag) {
    const Eigen::VectorXd x_hat = read_vector_csv(estimate);
    const std::optional<MatrixSidecar> meta = try_sidecar(estimate);
    SnrReport r;
    r.snr_db = snr_db(x_hat, truth);
    r.reference = reference;
    r.source = meta && meta->provenance.contains("source")
                   ? meta->provenance.at("source").get<std::string>()
                   : "unknown";
    if (!method_flag.empty()) {
        r.method = parse_method(method_flag);
    } else if (meta && meta->provenance.contains("method")) {
        r.method = parse_method(meta->provenance.at("method").get<std::string>());
    }
    // n counts the units behind the estimate.
    if (meta && meta->provenance.contains("units")) {
        r.n = meta->provenance.at("units").get<long long>();
    }
    return r;
}

int cmd_eval(const EvalArgs& a, const std::vector<std::string>& argv, std::ostream& out) {
    Manifest manifest("eval", argv);
    manifest.add_input(a.xhat);
    manifest.add_input(a.truth);
    const Eigen::VectorXd truth = read_vector_csv(a.truth);
    const std::string reference = "sha256:" + sha256_file(a.truth);

    SnrReport report = evaluate_file(a.xhat, truth, reference, a.method);
    nlohmann::json j = to_json(report);
    if (!a.baseline.empty()) {
        manifest.add_input(a.baseline);
        SnrReport base = evaluate_file(a.baseline, truth, reference, "bm");
        report.enhancement_db = snr_enhancement(report, base);
        j = to_json(report);
        j["baseline"] = to_json(base);
    } else {
        j["enhancement_db"] = nullptr;
    }
    j["manifest"] = manifest.to_json();

    fs::path path = a.out;
    if (path.empty()) {
        path = resolve_out_dir("", "eval") / "report.json";
    } else if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    write_json(path, j);
    out << method_name(report.method) << ": SNR " << report.snr_db << " dB";
    if (!a.baseline.empty()) out << ", enhancement " << report.enhancement_db << " dB";
    out << "\n";
    return kExitOk;
}

} // namespace

SegmentConfig parse_segment_config(const nlohmann::json& j) {
    static const std::set<std::string> keys{
        "click_interval_samples", "bandpass_low", "bandpass_high", "reject_threshold_db_spl",
        "reject_guard_ms", "analysis_window_ms", "noise_tail_ms", "max_reject_fraction",
        "pascals_per_full_scale"};
    if (!j.is_object()) throw InputError("config: top level must be a JSON object");
    SegmentConfig cfg;
    auto& p = cfg.pipeline;
    std::string key;
    try {
        for (const auto& [k, v] : j.items()) {
            key = k;
            if (!keys.contains(k)) throw InputError("config: unknown key '" + k + "'");
            if (k == "click_interval_samples") p.click_interval_samples = v.get<std::size_t>();
            else if (k == "bandpass_low") p.bandpass_low_hz = v.get<double>();
            else if (k == "bandpass_high") p.bandpass_high_hz = v.get<double>();
            else if (k == "reject_threshold_db_spl") p.reject_threshold_db_spl = v.get<double>();
            else if (k == "reject_guard_ms") p.reject_guard_ms = v.get<double>();
            else if (k == "analysis_window_ms") p.analysis_window_ms = v.get<double>();
            else if (k == "noise_tail_ms") p.noise_tail_ms = v.get<double>();
            else if (k == "max_reject_fraction") p.max_reject_fraction = v.get<double>();
            else if (k == "pascals_per_full_scale") cfg.pascals_per_full_scale = v.get<double>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw InputError("config: key '" + key + "': " + e.what());
    }
    if (!(cfg.pascals_per_full_scale > 0.0)) {
        throw InputError("config: pascals_per_full_scale must be positive");
    }
    return cfg;
}

nlohmann::json to_json(const SegmentConfig& cfg) {
    const auto& p = cfg.pipeline;
    return {
        {"click_interval_samples", p.click_interval_samples},
        {"bandpass_low", p.bandpass_low_hz},
        {"bandpass_high", p.bandpass_high_hz},
        {"reject_threshold_db_spl", p.reject_threshold_db_spl},
        {"reject_guard_ms", p.reject_guard_ms},
        {"analysis_window_ms", p.analysis_window_ms},
        {"noise_tail_ms", p.noise_tail_ms},
        {"max_reject_fraction", p.max_reject_fraction},
        {"pascals_per_full_scale", cfg.pascals_per_full_scale},
    };
}

std::string sha256_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError("cannot open '" + path.string() + "'");
    }
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
        throw NumericalError("SHA-256 initialisation failed");
    }
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof(buf));
        if (in.gcount() > 0) {
            EVP_DigestUpdate(ctx.get(), buf, static_cast<std::size_t>(in.gcount()));
        }
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), digest, &len);
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i) {
        os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
    }
    return os.str();
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Denoising of repeated-measurement otoacoustic emission recordings"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);

    SegmentArgs seg;
    auto* segment = app.add_subcommand("segment", "Cut a WAV recording into a unit matrix");
    segment->add_option("wav", seg.wav, "Calibrated mono WAV recording")->required()->check(CLI::ExistingFile);
    segment->add_option("--config", seg.config, "Pipeline configuration JSON")->check(CLI::ExistingFile);
    segment->add_option("--out", seg.out, "Output directory");

    DenoiseArgs den;
    auto* denoise_cmd = app.add_subcommand("denoise", "Denoise a unit matrix CSV");
    denoise_cmd->add_option("matrix", den.matrix, "Matrix CSV (sidecar JSON alongside)")->required()->check(CLI::ExistingFile);
    denoise_cmd->add_option("--method", den.method, "bm, wf, cos or sos");
    denoise_cmd->add_option("--sigma", den.sigma, "Noise level in pascals (overrides the sidecar)");
    denoise_cmd->add_option("--out", den.out, "Output directory");

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "Run the Monte-Carlo benchmark");
    simulate->add_option("scenario", sim.scenario, "Scenario JSON")->required()->check(CLI::ExistingFile);
    simulate->add_option("--out", sim.out, "Output directory");
    simulate->add_option("--seed", sim.seed, "Master seed (overrides synth.seed)");
    simulate->add_option("--n", sim.n_values, "Column counts, e.g. 400,200")->delimiter(',');
    simulate->add_option("--sigma", sim.sigma, "Noise level in pascals (disables calibration)");
    simulate->add_option("--method", sim.method, "Restrict to a single method");

    EvalArgs ev;
    auto* eval = app.add_subcommand("eval", "SNR of an estimate against a reference");
    eval->add_option("xhat", ev.xhat, "Estimated vector CSV")->required()->check(CLI::ExistingFile);
    eval->add_option("truth", ev.truth, "Reference vector CSV")->required()->check(CLI::ExistingFile);
    eval->add_option("--baseline", ev.baseline, "Baseline estimate CSV for the enhancement")->check(CLI::ExistingFile);
    eval->add_option("--out", ev.out, "Report path");
    eval->add_option("--method", ev.method, "Method label of the estimate");

    std::vector<const char*> argv;
    argv.reserve(args.size());
    for (const auto& a : args) argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForVersion&) {
        out << kToolVersion << "\n";
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitInput;
    }

    try {
        if (segment->parsed()) return cmd_segment(seg, args, out);
        if (denoise_cmd->parsed()) return cmd_denoise(den, args, out);
        if (simulate->parsed()) return cmd_simulate(sim, args, out);
        if (eval->parsed()) return cmd_eval(ev, args, out);
    } catch (const InputError& e) {
        err << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitInput;
    }
    return kExitInput;
}

} // namespace ceoae::cli
