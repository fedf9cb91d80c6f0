#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace hjlab {

// Run persistence: every command writes a run directory with a manifest
// listing each output file with a content digest. (config, seed) determines
// every data byte; manifest timestamps are the only non-reproducible field.

inline constexpr const char* kVersion = "hjlab 0.1.0";

/// FNV-1a 64-bit content digest, hex-encoded.
uint64_t digest64(const void* data, size_t len);
std::string digest64_hex_of_file(const std::filesystem::path& p);

struct CsvColumn {
    std::string name;
    std::vector<double> values;
};
void write_csv(const std::filesystem::path& p, const std::vector<CsvColumn>& cols);

/// Minimal standalone SVG scatter/line plot; optionally log-log, with the data
/// table embedded in a comment so the plot is self-describing.
struct SvgSeries {
    std::string label;
    std::vector<double> x, y;
    bool line = false;  // scatter by default
};
void write_svg_plot(const std::filesystem::path& p, const std::string& title,
                    const std::vector<SvgSeries>& series, bool log_x, bool log_y);

class RunManifest {
  public:
    RunManifest(std::string command, nlohmann::json config, uint64_t master_seed);

    /// Record an output file (digest computed now).
    void add_output(const std::filesystem::path& p);
    void finish_and_write(const std::filesystem::path& run_dir);

    nlohmann::json& config() { return config_; }

  private:
    nlohmann::json root_;
    nlohmann::json config_;
    std::vector<nlohmann::json> outputs_;
};

/// Write text to path, creating parent directories.
void write_text(const std::filesystem::path& p, const std::string& text);
std::string read_text(const std::filesystem::path& p);

}  // namespace hjlab
