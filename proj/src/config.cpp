#include "backstep/config.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "backstep/errors.hpp"

namespace backstep {

namespace {

struct RawConfig {
    // section -> key -> value
    std::map<std::string, std::map<std::string, std::string>> sections;

    const std::string* find(const std::string& section, const std::string& key) const {
        auto s = sections.find(section);
        if (s == sections.end()) return nullptr;
        auto k = s->second.find(key);
        if (k == s->second.end()) return nullptr;
        return &k->second;
    }
};

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

RawConfig parse_raw(const std::string& text) {
    RawConfig raw;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw ConfigError("line " + std::to_string(lineno) + ": unterminated section header");
            }
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            throw ConfigError("line " + std::to_string(lineno) + ": empty key");
        }
        raw.sections[section][key] = value;
    }
    return raw;
}

std::string qualified(const std::string& section, const std::string& key) {
    return section + "." + key;
}

std::string require(const RawConfig& raw, const std::string& section, const std::string& key) {
    const std::string* v = raw.find(section, key);
    if (!v) throw MissingField(qualified(section, key));
    return *v;
}

Expression require_expr(const RawConfig& raw, const std::string& section,
                        const std::string& key) {
    const std::string text = require(raw, section, key);
    try {
        return parse_expression(text);
    } catch (const Error& e) {
        throw ConfigError(qualified(section, key) + ": " + e.what());
    }
}

Expression optional_expr(const RawConfig& raw, const std::string& section,
                         const std::string& key, const std::string& fallback) {
    const std::string* v = raw.find(section, key);
    const std::string text = v ? *v : fallback;
    try {
        return parse_expression(text);
    } catch (const Error& e) {
        throw ConfigError(qualified(section, key) + ": " + e.what());
    }
}

double number_of(const std::string& text, const std::string& where) {
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size() || !std::isfinite(v)) throw std::invalid_argument("junk");
        return v;
    } catch (const std::exception&) {
        throw ConfigError(where + ": not a number: '" + text + "'");
    }
}

double require_number(const RawConfig& raw, const std::string& section, const std::string& key) {
    return number_of(require(raw, section, key), qualified(section, key));
}

double optional_number(const RawConfig& raw, const std::string& section, const std::string& key,
                       double fallback) {
    const std::string* v = raw.find(section, key);
    return v ? number_of(*v, qualified(section, key)) : fallback;
}

int optional_int(const RawConfig& raw, const std::string& section, const std::string& key,
                 int fallback) {
    const double v = optional_number(raw, section, key, fallback);
    const int i = static_cast<int>(v);
    if (static_cast<double>(i) != v) {
        throw ConfigError(qualified(section, key) + ": expected an integer");
    }
    return i;
}

bool optional_bool(const RawConfig& raw, const std::string& section, const std::string& key,
                   bool fallback) {
    const std::string* v = raw.find(section, key);
    if (!v) return fallback;
    if (*v == "true" || *v == "1" || *v == "yes") return true;
    if (*v == "false" || *v == "0" || *v == "no") return false;
    throw ConfigError(qualified(section, key) + ": expected true/false");
}

ScenarioConfig build(const RawConfig& raw) {
    ScenarioConfig cfg;
    const std::string kind = require(raw, "scenario", "kind");
    if (kind == "linear") cfg.kind = ScenarioKind::Linear;
    else if (kind == "quasilinear") cfg.kind = ScenarioKind::Quasilinear;
    else if (kind == "target-exact") cfg.kind = ScenarioKind::TargetExact;
    else throw ConfigError("scenario.kind: expected linear, quasilinear or target-exact");

    if (cfg.kind == ScenarioKind::Quasilinear) {
        cfg.lambda11 = require_expr(raw, "system", "lambda11");
        cfg.lambda12 = optional_expr(raw, "system", "lambda12", "0");
        cfg.lambda21 = optional_expr(raw, "system", "lambda21", "0");
        cfg.lambda22 = require_expr(raw, "system", "lambda22");
        cfg.f1 = optional_expr(raw, "system", "f1", "0");
        cfg.f2 = optional_expr(raw, "system", "f2", "0");
        cfg.g0 = require_expr(raw, "system", "g0");
    } else {
        cfg.eps1 = require_expr(raw, "system", "eps1");
        cfg.eps2 = require_expr(raw, "system", "eps2");
        cfg.c1 = optional_expr(raw, "system", "c1", "0");
        cfg.c2 = optional_expr(raw, "system", "c2", "0");
        cfg.q = require_number(raw, "system", "q");
    }

    cfg.grid_n = optional_int(raw, "kernel", "n", cfg.grid_n);
    cfg.picard_tol = optional_number(raw, "kernel", "tol", cfg.picard_tol);
    cfg.picard_max_iter = optional_int(raw, "kernel", "max_iter", cfg.picard_max_iter);

    cfg.m = optional_int(raw, "scheme", "m", cfg.m);
    cfg.cfl = optional_number(raw, "scheme", "cfl", cfg.cfl);
    cfg.t_end = optional_number(raw, "scheme", "t_end", cfg.t_end);
    cfg.snapshot_stride = optional_int(raw, "scheme", "snapshot_stride", cfg.snapshot_stride);

    cfg.d1 = optional_number(raw, "control", "d1", cfg.d1);
    cfg.d2 = optional_number(raw, "control", "d2", cfg.d2);
    cfg.closed_loop = optional_bool(raw, "control", "closed_loop", cfg.closed_loop);

    cfg.init1 = optional_expr(raw, "initial", "first", "0");
    cfg.init2 = optional_expr(raw, "initial", "second", "0");

    if (const std::string* v = raw.find("output", "out_dir")) cfg.out_dir = *v;
    return cfg;
}

}  // namespace

ScenarioConfig parse_config_text(const std::string& text) { return build(parse_raw(text)); }

ScenarioConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

std::vector<std::string> validate_config_text(const std::string& text) {
    std::vector<std::string> report;
    ScenarioConfig cfg;
    try {
        cfg = parse_config_text(text);
    } catch (const Error& e) {
        report.push_back(e.what());
        return report;
    }

    auto check = [&report](bool ok, const std::string& msg) {
        if (!ok) report.push_back(msg);
    };

    check(cfg.grid_n >= 5, "kernel.n: must be >= 5");
    check(cfg.picard_tol > 0.0, "kernel.tol: must be positive");
    check(cfg.picard_max_iter >= 1, "kernel.max_iter: must be >= 1");
    check(cfg.m >= 8, "scheme.m: must be >= 8");
    check(cfg.cfl > 0.0 && cfg.cfl <= 1.0, "scheme.cfl: must lie in (0, 1]");
    check(cfg.t_end >= 0.0, "scheme.t_end: must be non-negative");
    check(cfg.snapshot_stride >= 1, "scheme.snapshot_stride: must be >= 1");
    check(cfg.d1 > 0.0 && cfg.d2 > 0.0, "control.d1/d2: must be positive");
    if (std::abs(cfg.d1 - cfg.d2) <= 1e-9) {
        report.push_back("DegenerateRates: control.d1 and control.d2 must differ");
    }

    const int samples = 101;
    try {
        if (cfg.kind == ScenarioKind::Quasilinear) {
            for (int k = 0; k < samples; ++k) {
                const double x = static_cast<double>(k) / (samples - 1);
                const double l1 = cfg.lambda11.eval(x);
                const double l2 = cfg.lambda22.eval(x);
                if (!(l1 > 0.0) || !(l2 < 0.0)) {
                    report.push_back("system.lambda11/lambda22: frozen speeds must be +/- at x=" +
                                     std::to_string(x));
                    break;
                }
            }
            if (std::abs(cfg.g0.eval(0.0, 0.0, 0.0)) > 1e-12) {
                report.push_back("system.g0: must vanish at 0");
            }
            for (int k = 0; k < samples; ++k) {
                const double x = static_cast<double>(k) / (samples - 1);
                if (std::abs(cfg.f1.eval(x)) > 1e-12 || std::abs(cfg.f2.eval(x)) > 1e-12) {
                    report.push_back("system.f1/f2: must vanish at z = 0 (x=" +
                                     std::to_string(x) + ")");
                    break;
                }
            }
        } else {
            for (int k = 0; k < samples; ++k) {
                const double x = static_cast<double>(k) / (samples - 1);
                const double e1 = cfg.eps1.eval(x);
                const double e2 = cfg.eps2.eval(x);
                if (!(e1 > 0.0) || !(e2 > 0.0)) {
                    report.push_back("NonPositiveSpeed: system.eps1/eps2 not positive at x=" +
                                     std::to_string(x));
                    break;
                }
            }
        }
    } catch (const Error& e) {
        report.push_back(std::string("evaluation failure during validation: ") + e.what());
    }
    return report;
}

std::vector<std::string> validate_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) return {"cannot open config file: " + path};
    std::ostringstream buf;
    buf << in.rdbuf();
    return validate_config_text(buf.str());
}

}  // namespace backstep
