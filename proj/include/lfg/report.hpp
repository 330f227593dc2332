#pragma once

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace lfg {

struct CheckRecord {
    std::string name;
    double residual = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    std::string note;
};

enum class Verdict { pass, fail, no_verdict };

/// Structured record of one verification run.
struct ScenarioReport {
    std::string experiment;
    std::vector<std::pair<std::string, std::string>> config_echo;
    std::vector<CheckRecord> checks;
    double wall_seconds = 0.0;
    bool precondition_failed = false;
    std::string precondition_note;

    void echo(const std::string& key, const std::string& value) {
        config_echo.emplace_back(key, value);
    }

    CheckRecord& add(const std::string& name, double residual, double tolerance,
                     const std::string& note = "") {
        checks.push_back({name, residual, tolerance, residual <= tolerance, note});
        return checks.back();
    }

    Verdict verdict() const {
        if (precondition_failed) return Verdict::no_verdict;
        for (const auto& c : checks)
            if (!c.pass) return Verdict::fail;
        return Verdict::pass;
    }

    std::string text() const {
        std::ostringstream os;
        os << "experiment: " << experiment << "\n";
        for (const auto& [k, v] : config_echo) os << "config." << k << ": " << v << "\n";
        if (precondition_failed) os << "precondition-failed: " << precondition_note << "\n";
        for (const auto& c : checks) {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.3e (tol %.1e)", c.residual, c.tolerance);
            os << (c.pass ? "[pass] " : "[FAIL] ") << c.name << ": " << buf;
            if (!c.note.empty()) os << "  # " << c.note;
            os << "\n";
        }
        const char* v = precondition_failed ? "no-verdict"
                                            : (verdict() == Verdict::pass ? "pass" : "fail");
        os << "verdict: " << v << "\n";
        return os.str();
    }

    nlohmann::json json() const {
        nlohmann::json j;
        j["experiment"] = experiment;
        for (const auto& [k, v] : config_echo) j["config"][k] = v;
        j["checks"] = nlohmann::json::array();
        for (const auto& c : checks)
            j["checks"].push_back({{"name", c.name},
                                   {"residual", c.residual},
                                   {"tolerance", c.tolerance},
                                   {"pass", c.pass},
                                   {"note", c.note}});
        j["precondition_failed"] = precondition_failed;
        if (precondition_failed) j["precondition_note"] = precondition_note;
        j["verdict"] = precondition_failed ? "no-verdict"
                                           : (verdict() == Verdict::pass ? "pass" : "fail");
        j["wall_seconds"] = wall_seconds;
        return j;
    }
};

// CSV with a header row, 17 significant digits, LF line endings.
class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header) : header_(std::move(header)) {}

    void row(const std::vector<double>& values) {
        std::ostringstream os;
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (i) os << ',';
            char buf[40];
            std::snprintf(buf, sizeof buf, "%.17g", values[i]);
            os << buf;
        }
        rows_.push_back(os.str());
    }

    std::string body() const {
        std::ostringstream os;
        for (std::size_t i = 0; i < header_.size(); ++i) os << (i ? "," : "") << header_[i];
        os << '\n';
        for (const auto& r : rows_) os << r << '\n';
        return os.str();
    }

    std::size_t row_count() const { return rows_.size(); }

private:
    std::vector<std::string> header_;
    std::vector<std::string> rows_;
};

// write-then-rename so readers never observe a partial file
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        out << content;
    }
    std::filesystem::rename(tmp, path);
}

} // namespace lfg
