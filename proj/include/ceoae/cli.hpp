#ifndef CEOAE_CLI_HPP
#define CEOAE_CLI_HPP

#include "ceoae/pipeline.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace ceoae::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitAbandoned = 3;
inline constexpr int kExitNumerical = 4;

/// Environment variable naming the directory under which commands write when
/// --out is not given.
inline constexpr const char* kOutRootEnv = "CEOAE_OUT_ROOT";

inline constexpr const char* kToolVersion = "0.1.0";

/// Runs one command line (args[0] is the program name) and returns the exit
/// code. Diagnostics go to `err`, progress to `out`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Segment-command configuration: pipeline fields plus the WAV calibration.
struct SegmentConfig {
    PipelineConfig pipeline;
    double pascals_per_full_scale = 1.0;
};

SegmentConfig parse_segment_config(const nlohmann::json& j);
nlohmann::json to_json(const SegmentConfig& cfg);

/// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

} // namespace ceoae::cli

#endif
