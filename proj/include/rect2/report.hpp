#pragma once

#include <json.hpp>
#include <string>
#include <vector>

namespace rect2 {

inline constexpr const char* kModuleVersion = "0.3.0";
inline constexpr int kReportSchema = 1;

// FNV-1a 64 of the compact JSON dump (keys are sorted), as 16 hex digits.
std::string config_hash(const nlohmann::json& config);

struct Threshold {
    std::string name;
    double value = 0.0;
    std::string provenance;  // where the number comes from, e.g. "acceptance 6" or "config"
};

// Self-describing report: materialized config, thresholds with provenance and a row table.
// Every row carries the module version, the config hash and the threshold provenance.
struct Report {
    int schema = kReportSchema;
    std::string version = kModuleVersion;
    std::string command;
    nlohmann::json config = nlohmann::json::object();
    std::string hash;
    std::vector<Threshold> thresholds;
    std::vector<std::string> columns;
    std::vector<nlohmann::json> rows;
    nlohmann::json summary = nlohmann::json::object();
    bool pass = true;

    Report() = default;
    Report(std::string command, nlohmann::json config);

    void add_threshold(const std::string& name, double value, const std::string& provenance);
    // fills the per-row provenance fields; unknown columns are appended to `columns`
    void add_row(nlohmann::json row);
    std::string threshold_provenance() const;

    nlohmann::json to_json() const;
    static Report from_json(const nlohmann::json& j);
    std::string to_csv() const;

    void write(const std::string& dir, const std::string& stem) const;  // <dir>/<stem>.json and .csv
    static Report read_file(const std::string& path);
};

// One input is returned unchanged. Several inputs must share the schema version;
// rows are united (exact duplicates dropped) and the configs kept under "merged".
// Throws std::runtime_error on a schema mismatch.
Report report_merge(const std::vector<Report>& reports);

}  // namespace rect2
