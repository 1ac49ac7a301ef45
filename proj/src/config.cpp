#include "nemaq/config.hpp"

#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <set>
#include <sstream>

#include "nemaq/snapshot.hpp"

namespace nemaq {

namespace {

std::string join(const std::vector<std::string>& parts) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += "; ";
        out += parts[i];
    }
    return out;
}

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

struct Parser {
    std::vector<std::string> errors;

    void fail(int line, const std::string& msg) {
        errors.push_back("line " + std::to_string(line) + ": " + msg);
    }

    bool real(int line, const std::string& key, const std::string& v, double& out) {
        char* end = nullptr;
        const double x = std::strtod(v.c_str(), &end);
        if (v.empty() || end != v.c_str() + v.size() || !std::isfinite(x)) {
            fail(line, "value of '" + key + "' is not a finite number: '" + v + "'");
            return false;
        }
        out = x;
        return true;
    }

    bool integer(int line, const std::string& key, const std::string& v, long& out) {
        char* end = nullptr;
        const long x = std::strtol(v.c_str(), &end, 10);
        if (v.empty() || end != v.c_str() + v.size()) {
            fail(line, "value of '" + key + "' is not an integer: '" + v + "'");
            return false;
        }
        out = x;
        return true;
    }

    bool boolean(int line, const std::string& key, const std::string& v, bool& out) {
        if (v == "true" || v == "on" || v == "yes" || v == "1") {
            out = true;
            return true;
        }
        if (v == "false" || v == "off" || v == "no" || v == "0") {
            out = false;
            return true;
        }
        fail(line, "value of '" + key + "' is not a boolean: '" + v + "'");
        return false;
    }
};

}  // namespace

ConfigError::ConfigError(std::vector<std::string> violations)
    : std::runtime_error(join(violations)), violations_(std::move(violations)) {}

ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig cfg;
    Parser p;

    const std::set<std::string> sections = {"grid", "params", "solver", "initial", "output"};
    const std::map<std::string, std::set<std::string>> keys = {
        {"grid", {"n", "box_length"}},
        {"params", {"a", "b", "c", "L1", "L2", "L3", "L4", "mu", "gamma"}},
        {"solver", {"scheme", "dt", "t_end", "mollifier_n", "snapshot_every"}},
        {"initial", {"kind", "seed", "decay", "s", "axis", "path"}},
        {"output", {"directory", "csv", "snapshots"}},
    };

    std::set<std::string> seen;           // "section.key" for duplicate detection
    std::set<std::string> initial_keys;   // which [initial] keys were given
    std::string section;
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        const std::string line = trim(raw);
        if (line.empty() || line[0] == '#' || line[0] == ';') continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                p.fail(lineno, "malformed section header '" + line + "'");
                continue;
            }
            section = trim(line.substr(1, line.size() - 2));
            if (!sections.count(section)) {
                p.fail(lineno, "unknown section [" + section + "]");
                section.clear();
            }
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            p.fail(lineno, "expected 'key = value', got '" + line + "'");
            continue;
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (section.empty()) {
            p.fail(lineno, "key '" + key + "' appears before any section header");
            continue;
        }
        if (!keys.at(section).count(key)) {
            p.fail(lineno, "unknown key '" + key + "' in section [" + section + "]");
            continue;
        }
        if (!seen.insert(section + "." + key).second) {
            p.fail(lineno, "duplicate key '" + key + "' in section [" + section + "]");
            continue;
        }
        if (section == "initial") initial_keys.insert(key);

        if (section == "grid") {
            if (key == "n") {
                long v;
                if (p.integer(lineno, key, value, v)) cfg.n = static_cast<int>(v);
            } else {
                p.real(lineno, key, value, cfg.box_length);
            }
        } else if (section == "params") {
            double* slot = nullptr;
            if (key == "a") slot = &cfg.params.a;
            else if (key == "b") slot = &cfg.params.b;
            else if (key == "c") slot = &cfg.params.c;
            else if (key == "L1") slot = &cfg.params.L1;
            else if (key == "L2") slot = &cfg.params.L2;
            else if (key == "L3") slot = &cfg.params.L3;
            else if (key == "L4") slot = &cfg.params.L4;
            else if (key == "mu") slot = &cfg.params.mu;
            else slot = &cfg.params.gamma;
            p.real(lineno, key, value, *slot);
        } else if (section == "solver") {
            if (key == "scheme") {
                if (value == "explicit_rk4") cfg.solver.scheme = Scheme::explicit_rk4;
                else if (value == "imex") cfg.solver.scheme = Scheme::imex;
                else p.fail(lineno, "scheme must be explicit_rk4 or imex, got '" + value + "'");
            } else if (key == "dt") {
                p.real(lineno, key, value, cfg.solver.dt);
            } else if (key == "t_end") {
                p.real(lineno, key, value, cfg.solver.t_end);
            } else if (key == "mollifier_n") {
                long v;
                if (p.integer(lineno, key, value, v)) {
                    if (v < 1)
                        p.fail(lineno, "mollifier_n must be a positive integer, got '" + value + "'");
                    else
                        cfg.solver.mollifier_n = static_cast<double>(v);
                }
            } else {
                long v;
                if (p.integer(lineno, key, value, v)) cfg.solver.snapshot_every = static_cast<int>(v);
            }
        } else if (section == "initial") {
            if (key == "kind") {
                if (value == "zero") cfg.initial.kind = InitialKind::zero;
                else if (value == "single_mode") cfg.initial.kind = InitialKind::single_mode;
                else if (value == "random") cfg.initial.kind = InitialKind::random_field;
                else if (value == "uniaxial") cfg.initial.kind = InitialKind::uniaxial;
                else if (value == "file") cfg.initial.kind = InitialKind::file;
                else
                    p.fail(lineno,
                           "kind must be zero, single_mode, random, uniaxial, or file, got '" +
                               value + "'");
            } else if (key == "seed") {
                long v;
                if (p.integer(lineno, key, value, v)) {
                    if (v < 0) p.fail(lineno, "seed must be nonnegative, got '" + value + "'");
                    else cfg.initial.seed = static_cast<unsigned>(v);
                }
            } else if (key == "decay") {
                p.real(lineno, key, value, cfg.initial.decay);
            } else if (key == "s") {
                p.real(lineno, key, value, cfg.initial.s);
            } else if (key == "axis") {
                long v;
                if (p.integer(lineno, key, value, v)) cfg.initial.axis = static_cast<int>(v);
            } else {
                cfg.initial.path = value;
            }
        } else {  // output
            if (key == "directory") cfg.output.directory = value;
            else if (key == "csv") p.boolean(lineno, key, value, cfg.output.csv);
            else p.boolean(lineno, key, value, cfg.output.snapshots);
        }
    }

    // Cross-field validation. Collect everything before reporting.
    for (const std::string& v : cfg.params.validate()) p.errors.push_back("params: " + v);
    if (cfg.n < 8 || cfg.n % 2 != 0)
        p.errors.push_back("grid: n must be an even integer >= 8, got " + std::to_string(cfg.n));
    if (!(cfg.box_length > 0.0)) p.errors.push_back("grid: box_length must be positive");
    if (!(cfg.solver.dt > 0.0)) p.errors.push_back("solver: dt must be positive");
    if (!(cfg.solver.t_end >= 0.0)) p.errors.push_back("solver: t_end must be nonnegative");
    if (cfg.solver.t_end > 0.0 && cfg.solver.dt > cfg.solver.t_end)
        p.errors.push_back("solver: dt must not exceed t_end");
    if (cfg.solver.snapshot_every < 0)
        p.errors.push_back("solver: snapshot_every must be nonnegative");
    if (!(cfg.initial.decay > 0.0)) p.errors.push_back("initial: decay must be positive");
    if (cfg.initial.axis < 0 || cfg.initial.axis > 2)
        p.errors.push_back("initial: axis must be 0, 1, or 2");

    const auto forbid = [&](const char* key, const char* kind) {
        if (initial_keys.count(key))
            p.errors.push_back(std::string("initial: key '") + key + "' does not apply to kind '" +
                               kind + "'");
    };
    switch (cfg.initial.kind) {
        case InitialKind::zero:
        case InitialKind::single_mode: {
            const char* kind =
                cfg.initial.kind == InitialKind::zero ? "zero" : "single_mode";
            forbid("seed", kind);
            forbid("decay", kind);
            forbid("s", kind);
            forbid("axis", kind);
            forbid("path", kind);
            break;
        }
        case InitialKind::random_field:
            forbid("s", "random");
            forbid("axis", "random");
            forbid("path", "random");
            break;
        case InitialKind::uniaxial:
            forbid("seed", "uniaxial");
            forbid("decay", "uniaxial");
            forbid("path", "uniaxial");
            break;
        case InitialKind::file:
            if (initial_keys.count("seed"))
                p.errors.push_back(
                    "initial: kind 'file' with an explicit seed is ambiguous; the file carries "
                    "the state");
            forbid("decay", "file");
            forbid("s", "file");
            forbid("axis", "file");
            if (cfg.initial.path.empty())
                p.errors.push_back("initial: kind 'file' requires a path");
            break;
    }

    if (!p.errors.empty()) throw ConfigError(std::move(p.errors));
    return cfg;
}

std::string config_fingerprint(const std::string& text) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

SimState build_initial_state(const SpectralGrid& g, const InitialData& init) {
    SimState s;
    s.u = VectorField3(g.npoints());
    s.q = QTensorField(g.npoints());
    switch (init.kind) {
        case InitialKind::zero:
            break;
        case InitialKind::single_mode: {
            const double L = g.box_length();
            for (int i3 = 0; i3 < g.n3(); ++i3)
                for (int i2 = 0; i2 < g.n2(); ++i2)
                    for (int i1 = 0; i1 < g.n1(); ++i1) {
                        const double x = L * i1 / g.n1();
                        s.q.comp(1)[g.pidx(i1, i2, i3)] = 0.2 * std::cos(kTwoPi * x / L);
                    }
            break;
        }
        case InitialKind::random_field: {
            s.u = random_vector_field(g, init.decay, init.seed, true);
            s.q = random_qtensor_field(g, init.decay, init.seed + 1);
            const double un = discrete_norms(g, s.u).l2;
            const double qn = discrete_norms(g, s.q).l2;
            if (un > 0.0)
                for (double& v : s.u.data) v /= un;
            if (qn > 0.0)
                for (double& v : s.q.data) v /= qn;
            break;
        }
        case InitialKind::uniaxial: {
            double q11 = -init.s / 3.0, q22 = -init.s / 3.0;
            if (init.axis == 0) q11 = 2.0 * init.s / 3.0;
            if (init.axis == 1) q22 = 2.0 * init.s / 3.0;
            for (std::size_t pt = 0; pt < g.npoints(); ++pt) {
                s.q.comp(0)[pt] = q11;
                s.q.comp(3)[pt] = q22;
            }
            break;
        }
        case InitialKind::file:
            s = load_state(init.path, g);
            break;
    }
    return s;
}

}  // namespace nemaq
