#include "rect2/report.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace rect2 {

namespace {

std::string csv_cell(const nlohmann::json& v) {
    if (v.is_null()) return "";
    std::string s = v.is_string() ? v.get<std::string>() : v.dump();
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q += '"';
        q += c;
    }
    return q + "\"";
}

}  // namespace

std::string config_hash(const nlohmann::json& config) {
    const std::string s = config.dump();
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

Report::Report(std::string cmd, nlohmann::json cfg) : command(std::move(cmd)), config(std::move(cfg)) {
    hash = config_hash(config);
}

void Report::add_threshold(const std::string& name, double value, const std::string& provenance) {
    thresholds.push_back({name, value, provenance});
}

std::string Report::threshold_provenance() const {
    std::string s;
    for (const auto& t : thresholds) {
        if (!s.empty()) s += ';';
        s += t.name + "=" + nlohmann::json(t.value).dump() + "[" + t.provenance + "]";
    }
    return s;
}

void Report::add_row(nlohmann::json row) {
    if (!row.is_object()) throw std::invalid_argument("Report::add_row: row must be an object");
    row["version"] = version;
    row["config_hash"] = hash;
    row["threshold_provenance"] = threshold_provenance();
    for (auto it = row.begin(); it != row.end(); ++it)
        if (std::find(columns.begin(), columns.end(), it.key()) == columns.end()) columns.push_back(it.key());
    rows.push_back(std::move(row));
}

nlohmann::json Report::to_json() const {
    nlohmann::json j;
    j["schema"] = schema;
    j["version"] = version;
    j["command"] = command;
    j["config"] = config;
    j["config_hash"] = hash;
    nlohmann::json th = nlohmann::json::array();
    for (const auto& t : thresholds) th.push_back({{"name", t.name}, {"value", t.value}, {"provenance", t.provenance}});
    j["thresholds"] = th;
    j["columns"] = columns;
    j["rows"] = rows;
    j["summary"] = summary;
    j["pass"] = pass;
    return j;
}

Report Report::from_json(const nlohmann::json& j) {
    Report r;
    try {
        r.schema = j.at("schema").get<int>();
        r.version = j.at("version").get<std::string>();
        r.command = j.at("command").get<std::string>();
        r.config = j.at("config");
        r.hash = j.at("config_hash").get<std::string>();
        for (const auto& t : j.at("thresholds"))
            r.thresholds.push_back({t.at("name").get<std::string>(), t.at("value").get<double>(),
                                    t.at("provenance").get<std::string>()});
        r.columns = j.at("columns").get<std::vector<std::string>>();
        for (const auto& row : j.at("rows")) r.rows.push_back(row);
        r.summary = j.at("summary");
        r.pass = j.at("pass").get<bool>();
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(std::string("report: malformed report (") + e.what() + ")");
    }
    return r;
}

std::string Report::to_csv() const {
    std::ostringstream os;
    for (std::size_t c = 0; c < columns.size(); ++c) os << (c ? "," : "") << columns[c];
    os << '\n';
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < columns.size(); ++c) {
            if (c) os << ',';
            auto it = row.find(columns[c]);
            if (it != row.end()) os << csv_cell(*it);
        }
        os << '\n';
    }
    return os.str();
}

void Report::write(const std::string& dir, const std::string& stem) const {
    std::filesystem::create_directories(dir);
    const std::filesystem::path base = std::filesystem::path(dir) / stem;
    std::ofstream js(base.string() + ".json");
    js << to_json().dump(2) << '\n';
    std::ofstream cs(base.string() + ".csv");
    cs << to_csv();
    if (!js || !cs) throw std::runtime_error("report: cannot write " + base.string());
}

Report Report::read_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("report: cannot open " + path);
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("report: " + path + " is not JSON (" + e.what() + ")");
    }
    return from_json(j);
}

Report report_merge(const std::vector<Report>& reports) {
    if (reports.empty()) throw std::invalid_argument("report_merge: no inputs");
    for (const auto& r : reports)
        if (r.schema != reports[0].schema) {
            std::ostringstream os;
            os << "report_merge: schema mismatch (" << reports[0].schema << " vs " << r.schema << ")";
            throw std::runtime_error(os.str());
        }
    if (reports.size() == 1) return reports[0];

    std::set<std::string> commands;
    nlohmann::json configs = nlohmann::json::array();
    for (const auto& r : reports) {
        commands.insert(r.command);
        configs.push_back({{"command", r.command}, {"config_hash", r.hash}, {"config", r.config}});
    }
    Report out(commands.size() == 1 ? *commands.begin() : "merged", {{"merged", configs}});
    out.schema = reports[0].schema;
    std::set<std::string> seen_threshold, seen_row;
    nlohmann::json summaries = nlohmann::json::array();
    for (const auto& r : reports) {
        for (const auto& t : r.thresholds) {
            const std::string key = t.name + "|" + nlohmann::json(t.value).dump() + "|" + t.provenance;
            if (seen_threshold.insert(key).second) out.thresholds.push_back(t);
        }
        for (const auto& c : r.columns)
            if (std::find(out.columns.begin(), out.columns.end(), c) == out.columns.end()) out.columns.push_back(c);
        // rows keep the provenance of the report they came from
        for (const auto& row : r.rows)
            if (seen_row.insert(row.dump()).second) out.rows.push_back(row);
        summaries.push_back({{"config_hash", r.hash}, {"summary", r.summary}, {"pass", r.pass}});
        out.pass = out.pass && r.pass;
    }
    out.summary = {{"inputs", summaries}};
    return out;
}

}  // namespace rect2
