#pragma once

#include "lfg/errors.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace lfg {

// Flat key-value scenario configuration with dotted keys (model.name,
// ray.t_max, tol.ode). File lines are "key = value"; '#' starts a comment.
// Command-line overrides reuse the same dotted names.
class Config {
public:
    void set(const std::string& key, const std::string& value) { kv_[key] = value; }

    /// parse one "key=value" override
    void set_pair(const std::string& pair) {
        const auto eq = pair.find('=');
        if (eq == std::string::npos || eq == 0)
            throw config_error("config override must be key=value, got: " + pair);
        set(trim(pair.substr(0, eq)), trim(pair.substr(eq + 1)));
    }

    void load_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw config_error("cannot open config file: " + path);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            const std::string t = trim(line);
            if (t.empty()) continue;
            const auto eq = t.find('=');
            if (eq == std::string::npos || eq == 0)
                throw config_error(path + ":" + std::to_string(lineno) +
                                   ": expected key = value");
            set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
        }
    }

    bool has(const std::string& key) const { return kv_.count(key) != 0; }

    std::string str(const std::string& key, const std::string& fallback) const {
        auto it = kv_.find(key);
        return it == kv_.end() ? fallback : it->second;
    }

    /// real-valued entry; accepts "inf" / "-inf"
    double num(const std::string& key, double fallback) const {
        auto it = kv_.find(key);
        if (it == kv_.end()) return fallback;
        return parse_num(key, it->second);
    }

    int integer(const std::string& key, int fallback) const {
        const double x = num(key, static_cast<double>(fallback));
        const int i = static_cast<int>(std::llround(x));
        if (std::abs(x - i) > 1e-12)
            throw config_error("config key " + key + ": expected an integer");
        return i;
    }

    /// comma-separated list of reals
    std::vector<double> list(const std::string& key, std::vector<double> fallback) const {
        auto it = kv_.find(key);
        if (it == kv_.end()) return fallback;
        std::vector<double> out;
        std::stringstream ss(it->second);
        std::string item;
        while (std::getline(ss, item, ',')) out.push_back(parse_num(key, trim(item)));
        if (out.empty()) throw config_error("config key " + key + ": empty list");
        return out;
    }

    const std::map<std::string, std::string>& entries() const { return kv_; }

private:
    static std::string trim(const std::string& s) {
        const auto a = s.find_first_not_of(" \t\r\n");
        if (a == std::string::npos) return "";
        const auto b = s.find_last_not_of(" \t\r\n");
        return s.substr(a, b - a + 1);
    }

    static double parse_num(const std::string& key, const std::string& s) {
        if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        try {
            std::size_t used = 0;
            const double x = std::stod(s, &used);
            if (used != s.size()) throw std::invalid_argument(s);
            return x;
        } catch (const std::exception&) {
            throw config_error("config key " + key + ": cannot parse number from '" + s + "'");
        }
    }

    std::map<std::string, std::string> kv_;
};

} // namespace lfg
