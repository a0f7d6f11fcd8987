#include "ceoae/matrix_io.hpp"

#include "ceoae/errors.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

namespace ceoae {

namespace {

void append_number(std::string& out, double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, res.ptr);
}

double parse_number(std::string_view field, const std::filesystem::path& path, std::size_t line) {
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r'))
        field.remove_suffix(1);
    if (!field.empty() && field.front() == '+') field.remove_prefix(1);
    double v = 0.0;
    const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
    if (res.ec != std::errc() || res.ptr != field.data() + field.size() || !std::isfinite(v)) {
        std::ostringstream os;
        os << path.string() << ":" << line << ": not a finite number: '" << field << "'";
        throw InputError(os.str());
    }
    return v;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw InputError("cannot write '" + path.string() + "'");
    }
    return out;
}

} // namespace

void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m) {
    std::ofstream out = open_out(path);
    std::string line;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        line.clear();
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j > 0) line.push_back(',');
            append_number(line, m(i, j));
        }
        line.push_back('\n');
        out << line;
    }
    if (!out) {
        throw InputError("failed writing '" + path.string() + "'");
    }
}

Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw InputError("cannot open '" + path.string() + "'");
    }
    std::vector<double> values;
    std::size_t cols = 0;
    std::size_t rows = 0;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::size_t count = 0;
        std::string_view rest(line);
        while (true) {
            const auto comma = rest.find(',');
            values.push_back(parse_number(rest.substr(0, comma), path, line_no));
            ++count;
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
        }
        if (rows == 0) {
            cols = count;
        } else if (count != cols) {
            std::ostringstream os;
            os << path.string() << ":" << line_no << ": expected " << cols << " columns, found "
               << count;
            throw InputError(os.str());
        }
        ++rows;
    }
    if (rows == 0) {
        throw InputError("'" + path.string() + "' holds no data");
    }
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = values[i * cols + j];
        }
    }
    return m;
}

void write_vector_csv(const std::filesystem::path& path, const Eigen::VectorXd& v) {
    write_matrix_csv(path, Eigen::MatrixXd(v));
}

Eigen::VectorXd read_vector_csv(const std::filesystem::path& path) {
    const Eigen::MatrixXd m = read_matrix_csv(path);
    if (m.cols() != 1) {
        throw InputError("'" + path.string() + "' is not a single-column vector");
    }
    return m.col(0);
}

std::filesystem::path sidecar_path(const std::filesystem::path& csv_path) {
    std::filesystem::path p = csv_path;
    p.replace_extension(".json");
    return p;
}

void write_sidecar(const std::filesystem::path& path, const MatrixSidecar& meta) {
    nlohmann::json j = {
        {"sample_rate", meta.sample_rate},
        {"p", meta.p},
        {"n", meta.n},
        {"sigma", meta.sigma ? nlohmann::json(*meta.sigma) : nlohmann::json(nullptr)},
        {"per_unit_sigmas", meta.per_unit_sigmas},
        {"provenance", meta.provenance},
    };
    write_json(path, j);
}

MatrixSidecar read_sidecar(const std::filesystem::path& path) {
    const nlohmann::json j = read_json(path);
    MatrixSidecar meta;
    try {
        meta.sample_rate = j.at("sample_rate").get<double>();
        meta.p = j.at("p").get<Eigen::Index>();
        meta.n = j.at("n").get<Eigen::Index>();
        if (j.contains("sigma") && !j.at("sigma").is_null()) {
            meta.sigma = j.at("sigma").get<double>();
        }
        if (j.contains("per_unit_sigmas")) {
            meta.per_unit_sigmas = j.at("per_unit_sigmas").get<std::vector<double>>();
        }
        if (j.contains("provenance")) {
            meta.provenance = j.at("provenance");
        }
    } catch (const nlohmann::json::exception& e) {
        throw InputError("sidecar '" + path.string() + "': " + e.what());
    }
    return meta;
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
    std::ofstream out = open_out(path);
    out << j.dump(2) << '\n';
    if (!out) {
        throw InputError("failed writing '" + path.string() + "'");
    }
}

nlohmann::json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw InputError("cannot open '" + path.string() + "'");
    }
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw InputError("invalid JSON in '" + path.string() + "': " + e.what());
    }
}

} // namespace ceoae
