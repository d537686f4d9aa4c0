#pragma once

// Named experiments behind the drift-camouflage command line. Each experiment
// turns a JSON configuration into a report plus data files held in memory;
// write_outputs persists them with a manifest of SHA-256 digests.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace driftcam {

enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitRuntime = 2, kExitAcceptance = 3 };

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct OutputFile {
    std::string name;
    std::string contents;
};

struct ExperimentResult {
    nlohmann::json report;
    bool accepted = false;
    std::vector<OutputFile> files;  // report.json is added by write_outputs
};

inline constexpr const char* kArtifactVersion = "1.0.0";

ExperimentResult run_hidden(const nlohmann::json& config, unsigned jobs);
ExperimentResult run_concat(const nlohmann::json& config, unsigned jobs);
ExperimentResult run_discrete(const nlohmann::json& config, unsigned jobs);
ExperimentResult run_calibrate(const nlohmann::json& config, unsigned jobs);

/// Dispatch by command name; ConfigError for an unknown command.
ExperimentResult run_experiment(const std::string& command, const nlohmann::json& config,
                                unsigned jobs);

/// Reads a JSON object from disk; ConfigError on I/O or parse failure.
nlohmann::json load_config(const std::filesystem::path& path);

/// Text of report.json: two-space indented, keys sorted, trailing newline.
std::string render_report(const ExperimentResult& result);

/// Writes the data files, report.json and manifest.json into `dir`.
void write_outputs(const std::filesystem::path& dir, const std::string& command,
                   const nlohmann::json& config, const ExperimentResult& result);

std::string sha256_hex(const std::string& bytes);

struct CliOptions {
    std::string command;
    std::filesystem::path config;
    std::optional<std::uint64_t> seed;
    unsigned jobs = 1;
    std::filesystem::path out = "out";
};

/// Full command: load, override, run, persist. Returns the exit code and
/// reports problems on stderr.
int run_cli(const CliOptions& options);

}  // namespace driftcam
