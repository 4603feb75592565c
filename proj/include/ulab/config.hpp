#pragma once
// Flat key-value configuration files with [section] headers, chosen for
// diff-ability in experiment logs.  Keys are addressed as "section.key".
//
//   [model]
//   t = 0.5        # comments run to end of line
//   d = 1
//
//   [phases]
//   kind = uniform
//   lo = 0.0
//   hi = 1.0

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace ulab {

class Config {
  public:
    Config() = default;

    static Config parse_string(const std::string& text, const std::string& origin = "<string>") {
        Config c;
        std::istringstream in(text);
        std::string line, section;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            auto fail = [&](const std::string& what) {
                throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": " + what);
            };
            std::string s = strip_comment(line);
            s = trim(s);
            if (s.empty()) continue;
            if (s.front() == '[') {
                if (s.back() != ']') fail("unterminated section header");
                section = trim(s.substr(1, s.size() - 2));
                if (section.empty()) fail("empty section name");
                continue;
            }
            auto eq = s.find('=');
            if (eq == std::string::npos) fail("expected key = value");
            std::string key = trim(s.substr(0, eq));
            std::string value = trim(s.substr(eq + 1));
            if (key.empty()) fail("empty key");
            if (!section.empty()) key = section + "." + key;
            if (c.values_.count(key)) fail("duplicate key '" + key + "'");
            c.values_[key] = value;
        }
        return c;
    }

    static Config parse_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("Config: cannot open '" + path + "'");
        std::ostringstream ss;
        ss << in.rdbuf();
        return parse_string(ss.str(), path);
    }

    bool has(const std::string& key) const { return values_.count(key) != 0; }

    // All keys in sorted order (std::map iteration).
    std::vector<std::string> keys() const {
        std::vector<std::string> out;
        out.reserve(values_.size());
        for (const auto& kv : values_) out.push_back(kv.first);
        return out;
    }

    void set(const std::string& key, const std::string& value) { values_[key] = value; }

    const std::string& get_string(const std::string& key) const {
        auto it = values_.find(key);
        if (it == values_.end()) throw std::runtime_error("Config: missing key '" + key + "'");
        return it->second;
    }
    std::string get_string(const std::string& key, const std::string& dflt) const {
        auto it = values_.find(key);
        return it == values_.end() ? dflt : it->second;
    }

    std::int64_t get_int(const std::string& key) const { return to_int(key, get_string(key)); }
    std::int64_t get_int(const std::string& key, std::int64_t dflt) const {
        return has(key) ? get_int(key) : dflt;
    }

    double get_double(const std::string& key) const { return to_double(key, get_string(key)); }
    double get_double(const std::string& key, double dflt) const {
        return has(key) ? get_double(key) : dflt;
    }

    bool get_bool(const std::string& key) const {
        const std::string& v = get_string(key);
        if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
        if (v == "false" || v == "no" || v == "off" || v == "0") return false;
        throw std::runtime_error("Config: key '" + key + "' is not a boolean: '" + v + "'");
    }
    bool get_bool(const std::string& key, bool dflt) const {
        return has(key) ? get_bool(key) : dflt;
    }

    std::vector<std::int64_t> get_int_list(const std::string& key) const {
        std::vector<std::int64_t> out;
        for (const std::string& item : split_list(get_string(key))) out.push_back(to_int(key, item));
        return out;
    }

    std::vector<double> get_double_list(const std::string& key) const {
        std::vector<double> out;
        for (const std::string& item : split_list(get_string(key)))
            out.push_back(to_double(key, item));
        return out;
    }

    std::vector<std::string> get_string_list(const std::string& key) const {
        return split_list(get_string(key));
    }

    // Round-trippable dump, grouped by section, keys sorted.
    std::string to_string() const {
        std::ostringstream out;
        std::string section;
        bool first = true;
        for (const auto& kv : values_) {
            auto dot = kv.first.rfind('.');
            std::string sec = dot == std::string::npos ? "" : kv.first.substr(0, dot);
            std::string key = dot == std::string::npos ? kv.first : kv.first.substr(dot + 1);
            if (sec != section || first) {
                if (!first) out << "\n";
                if (!sec.empty()) out << "[" << sec << "]\n";
                section = sec;
                first = false;
            }
            out << key << " = " << kv.second << "\n";
        }
        return out.str();
    }

    const std::map<std::string, std::string>& raw() const { return values_; }

  private:
    static std::string trim(const std::string& s) {
        auto b = s.find_first_not_of(" \t\r\n");
        if (b == std::string::npos) return "";
        auto e = s.find_last_not_of(" \t\r\n");
        return s.substr(b, e - b + 1);
    }

    static std::string strip_comment(const std::string& s) {
        auto pos = s.find('#');
        return pos == std::string::npos ? s : s.substr(0, pos);
    }

    static std::vector<std::string> split_list(const std::string& s) {
        std::vector<std::string> out;
        std::string item;
        std::istringstream in(s);
        while (std::getline(in, item, ',')) out.push_back(trim(item));
        if (!out.empty() && out.back().empty()) out.pop_back();
        return out;
    }

    static std::int64_t to_int(const std::string& key, const std::string& v) {
        std::size_t pos = 0;
        std::int64_t x = 0;
        try {
            x = std::stoll(v, &pos);
        } catch (const std::exception&) {
            throw std::runtime_error("Config: key '" + key + "' is not an integer: '" + v + "'");
        }
        if (pos != v.size())
            throw std::runtime_error("Config: key '" + key + "' has trailing text: '" + v + "'");
        return x;
    }

    static double to_double(const std::string& key, const std::string& v) {
        std::size_t pos = 0;
        double x = 0.0;
        try {
            x = std::stod(v, &pos);
        } catch (const std::exception&) {
            throw std::runtime_error("Config: key '" + key + "' is not a number: '" + v + "'");
        }
        if (pos != v.size())
            throw std::runtime_error("Config: key '" + key + "' has trailing text: '" + v + "'");
        return x;
    }

    std::map<std::string, std::string> values_;
};

}  // namespace ulab
