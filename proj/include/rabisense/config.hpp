// config.hpp — Experiment configuration: flat `key = value` files with
// bracketed section headers. Every physical value carries an explicit unit
// suffix; conversion to SI happens here and nowhere else.
//
// Frequency-like entries quote f/2pi ("0.30 kHz" -> 2*pi*300 rad/s) or SI
// directly ("1884.95 rad/s"). Bare "Hz" is rejected as ambiguous.

#pragma once

#include <cctype>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rabisense/core.hpp"
#include "rabisense/dynamics.hpp"
#include "rabisense/hilbert.hpp"

namespace rabisense::cli {

class config_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ----------------------------- raw key/value store ----------------------------

struct ConfigEntry {
    std::string section, key, value;
    int line = 0;
};

class Config {
public:
    static Config parse_string(const std::string& text, const std::string& origin = "<string>") {
        Config c;
        c.origin_ = origin;
        std::istringstream in(text);
        std::string raw;
        std::string section;
        int line_no = 0;
        while (std::getline(in, raw)) {
            ++line_no;
            std::string line = strip(strip_comment(raw));
            if (line.empty()) continue;
            if (line.front() == '[') {
                if (line.back() != ']')
                    throw config_error(origin + ":" + std::to_string(line_no) +
                                       ": unterminated section header");
                section = strip(line.substr(1, line.size() - 2));
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw config_error(origin + ":" + std::to_string(line_no) +
                                   ": expected 'key = value'");
            ConfigEntry e;
            e.section = section;
            e.key = strip(line.substr(0, eq));
            e.value = strip(line.substr(eq + 1));
            e.line = line_no;
            if (e.key.empty())
                throw config_error(origin + ":" + std::to_string(line_no) + ": empty key");
            c.set(e.section, e.key, e.value, e.line);
        }
        return c;
    }

    static Config parse_file(const std::string& path) {
        std::ifstream f(path);
        if (!f) throw config_error("cannot open config file: " + path);
        std::stringstream ss;
        ss << f.rdbuf();
        return parse_string(ss.str(), path);
    }

    void set(const std::string& section, const std::string& key, const std::string& value,
             int line = 0) {
        for (auto& e : entries_)
            if (e.section == section && e.key == key) {
                e.value = value;
                return;
            }
        entries_.push_back(ConfigEntry{section, key, value, line});
    }

    // "section.key=value" (used by --set overrides)
    void set_override(const std::string& spec) {
        const auto eq = spec.find('=');
        if (eq == std::string::npos)
            throw config_error("--set expects section.key=value, got '" + spec + "'");
        const std::string path = strip(spec.substr(0, eq));
        const auto dot = path.find('.');
        if (dot == std::string::npos)
            throw config_error("--set expects section.key=value, got '" + spec + "'");
        set(path.substr(0, dot), path.substr(dot + 1), strip(spec.substr(eq + 1)));
    }

    const ConfigEntry* find(const std::string& section, const std::string& key) const {
        for (const auto& e : entries_)
            if (e.section == section && e.key == key) return &e;
        return nullptr;
    }

    const std::vector<ConfigEntry>& entries() const { return entries_; }
    const std::string& origin() const { return origin_; }

private:
    static std::string strip_comment(const std::string& s) {
        const auto h = s.find('#');
        return h == std::string::npos ? s : s.substr(0, h);
    }
    static std::string strip(const std::string& s) {
        std::size_t a = 0, b = s.size();
        while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
        while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
        return s.substr(a, b - a);
    }

    std::vector<ConfigEntry> entries_;
    std::string origin_;
};

// ----------------------------- quantities ------------------------------------

enum class Dimension { Frequency, Length, Force, Time, Angle, None };

// Returns the SI value; the accepted unit set depends on the dimension.
inline double parse_quantity(const std::string& text, Dimension dim,
                             const std::string& context) {
    std::istringstream in(text);
    double value = 0.0;
    if (!(in >> value))
        throw config_error(context + ": cannot parse number from '" + text + "'");
    std::string unit;
    in >> unit;
    std::string trailing;
    if (in >> trailing)
        throw config_error(context + ": trailing input '" + trailing + "' in '" + text + "'");

    auto need = [&](bool ok, const char* expected) {
        if (!ok)
            throw config_error(context + ": unit '" + unit + "' invalid here (expected " +
                               expected + ") in '" + text + "'");
    };
    switch (dim) {
        case Dimension::Frequency:
            if (unit == "kHz") return khz_to_radps(value);
            need(unit == "rad/s", "kHz or rad/s");
            return value;
        case Dimension::Length:
            if (unit == "nm") return value * 1e-9;
            if (unit == "um") return value * 1e-6;
            need(unit == "m", "nm, um or m");
            return value;
        case Dimension::Force:
            if (unit == "yN") return value * 1e-24;
            if (unit == "xN") return value * 1e-27;
            need(unit == "N", "yN, xN or N");
            return value;
        case Dimension::Time:
            if (unit == "ms") return value * 1e-3;
            if (unit == "us") return value * 1e-6;
            need(unit == "s", "ms, us or s");
            return value;
        case Dimension::Angle:
            need(unit.empty() || unit == "rad", "rad or none");
            return value;
        case Dimension::None:
            need(unit.empty(), "no unit");
            return value;
    }
    throw config_error(context + ": unreachable");
}

// ----------------------------- experiment configuration -----------------------

enum class Model { rabi, effective, squeezed };

inline std::string to_string(Model m) {
    switch (m) {
        case Model::rabi: return "rabi";
        case Model::effective: return "effective";
        case Model::squeezed: return "squeezed";
    }
    return "?";
}

struct SweepAxis {
    std::string variable;
    double start = 0.0, stop = 0.0;  // SI
    int points = 2;
    bool log_scale = false;

    std::vector<double> values() const {
        std::vector<double> v(points);
        if (log_scale) {
            if (!(start > 0.0) || !(stop > 0.0))
                throw config_error("sweep: log scale needs positive bounds");
            const double la = std::log(start), lb = std::log(stop);
            for (int i = 0; i < points; ++i)
                v[i] = std::exp(la + (lb - la) * i / (points - 1));
        } else {
            for (int i = 0; i < points; ++i)
                v[i] = start + (stop - start) * i / (points - 1);
        }
        return v;
    }
};

struct ProtocolConfig {
    double xi = 0.0;
    double phi = pi;
    double Omega0 = 0.0;
    double kappa = 0.0;
    double t_final = 0.0;
};

struct ExperimentConfig {
    Model model = Model::rabi;
    SystemParams params;
    ProtocolConfig protocol;
    hilbert::HilbertSpec hspec{40, true};
    dynamics::EvolveConfig evolve;
    std::optional<SweepAxis> sweep;
    std::string outputs = "out";

    static Dimension dimension_of(const std::string& variable) {
        if (variable == "omega" || variable == "Omega" || variable == "g" ||
            variable == "gamma" || variable == "xi" || variable == "kappa" ||
            variable == "Omega0")
            return Dimension::Frequency;
        if (variable == "z") return Dimension::Length;
        if (variable == "F") return Dimension::Force;
        throw config_error("unrecognized sweep variable '" + variable + "'");
    }

    static ExperimentConfig from(const Config& c) {
        ExperimentConfig e;

        if (const auto* m = c.find("experiment", "model")) {
            if (m->value == "rabi") e.model = Model::rabi;
            else if (m->value == "effective") e.model = Model::effective;
            else if (m->value == "squeezed") e.model = Model::squeezed;
            else throw config_error("experiment.model must be rabi|effective|squeezed, got '" +
                                    m->value + "'");
        }
        if (const auto* o = c.find("experiment", "outputs")) e.outputs = o->value;

        auto quantity = [&](const char* section, const char* key, Dimension dim,
                            double fallback, bool* found = nullptr) {
            const auto* entry = c.find(section, key);
            if (found) *found = entry != nullptr;
            if (!entry) return fallback;
            return parse_quantity(entry->value, dim,
                                  std::string(section) + "." + key + " (line " +
                                      std::to_string(entry->line) + ")");
        };

        e.params.omega = quantity("params", "omega", Dimension::Frequency, 0.0);
        e.params.Omega = quantity("params", "Omega", Dimension::Frequency, 0.0);
        e.params.g     = quantity("params", "g", Dimension::Frequency, 0.0);
        e.params.gamma = quantity("params", "gamma", Dimension::Frequency, 0.0);
        e.params.z     = quantity("params", "z", Dimension::Length, 0.0);
        e.params.F     = quantity("params", "F", Dimension::Force, 0.0);

        e.protocol.xi      = quantity("protocol", "xi", Dimension::Frequency, 0.0);
        e.protocol.phi     = quantity("protocol", "phi", Dimension::Angle, pi);
        e.protocol.Omega0  = quantity("protocol", "Omega0", Dimension::Frequency, 0.0);
        e.protocol.kappa   = quantity("protocol", "kappa", Dimension::Frequency, 0.0);
        e.protocol.t_final = quantity("protocol", "t_final", Dimension::Time, 0.0);

        e.hspec.include_spin = e.model != Model::effective;
        e.hspec.fock_dim = e.model == Model::squeezed ? 60 : 40;
        if (const auto* f = c.find("hilbert", "fock_dim")) {
            e.hspec.fock_dim = static_cast<int>(
                parse_quantity(f->value, Dimension::None, "hilbert.fock_dim"));
        }

        e.evolve.t_final      = quantity("evolve", "t_final", Dimension::Time, 0.0);
        e.evolve.rel_tol      = quantity("evolve", "rel_tol", Dimension::None, 1e-8);
        e.evolve.abs_tol      = quantity("evolve", "abs_tol", Dimension::None, 1e-10);
        e.evolve.record_every = quantity("evolve", "record_every", Dimension::Time, 0.0);
        e.evolve.tail_threshold = quantity("evolve", "tail_threshold", Dimension::None, 1e-6);
        bool have_max_step = false;
        const double ms = quantity("evolve", "max_step", Dimension::Time, 0.0, &have_max_step);
        if (have_max_step && ms > 0.0) e.evolve.max_step = ms;

        if (const auto* v = c.find("sweep", "variable")) {
            SweepAxis ax;
            ax.variable = v->value;
            const Dimension dim = dimension_of(ax.variable);
            ax.start = quantity("sweep", "start", dim, 0.0);
            ax.stop  = quantity("sweep", "stop", dim, 0.0);
            ax.points = static_cast<int>(quantity("sweep", "points", Dimension::None, 0.0));
            if (ax.points < 2) throw config_error("sweep.points must be >= 2");
            if (const auto* s = c.find("sweep", "scale")) {
                if (s->value == "log") ax.log_scale = true;
                else if (s->value != "linear")
                    throw config_error("sweep.scale must be linear|log");
            }
            e.sweep = ax;
        }
        return e;
    }

    // Applies a sweep value to a copy of this configuration.
    ExperimentConfig with_variable(const std::string& variable, double si_value) const {
        ExperimentConfig e = *this;
        if (variable == "omega") e.params.omega = si_value;
        else if (variable == "Omega") e.params.Omega = si_value;
        else if (variable == "g") e.params.g = si_value;
        else if (variable == "gamma") e.params.gamma = si_value;
        else if (variable == "z") e.params.z = si_value;
        else if (variable == "F") e.params.F = si_value;
        else if (variable == "xi") e.protocol.xi = si_value;
        else if (variable == "kappa") e.protocol.kappa = si_value;
        else if (variable == "Omega0") e.protocol.Omega0 = si_value;
        else throw config_error("unrecognized sweep variable '" + variable + "'");
        return e;
    }

    // Fully resolved parameter echo in SI units; itself a valid config file.
    std::string manifest(const std::string& subcommand) const {
        auto num = [](double v) {
            char buf[40];
            std::snprintf(buf, sizeof buf, "%.17g", v);
            return std::string(buf);
        };
        std::string m;
        m += "# resolved configuration (SI units)\n";
        m += "[experiment]\n";
        m += "model = " + to_string(model) + "\n";
        m += "subcommand = " + subcommand + "\n";
        m += "outputs = " + outputs + "\n";
        m += "[params]\n";
        m += "omega = " + num(params.omega) + " rad/s\n";
        m += "Omega = " + num(params.Omega) + " rad/s\n";
        m += "g = " + num(params.g) + " rad/s\n";
        m += "gamma = " + num(params.gamma) + " rad/s\n";
        m += "z = " + num(params.z) + " m\n";
        m += "F = " + num(params.F) + " N\n";
        if (model == Model::squeezed) {
            m += "[protocol]\n";
            m += "xi = " + num(protocol.xi) + " rad/s\n";
            m += "phi = " + num(protocol.phi) + " rad\n";
            m += "Omega0 = " + num(protocol.Omega0) + " rad/s\n";
            m += "kappa = " + num(protocol.kappa) + " rad/s\n";
            m += "t_final = " + num(protocol.t_final) + " s\n";
        }
        m += "[hilbert]\n";
        m += "fock_dim = " + std::to_string(hspec.fock_dim) + "\n";
        m += "[evolve]\n";
        if (evolve.t_final > 0.0) m += "t_final = " + num(evolve.t_final) + " s\n";
        m += "rel_tol = " + num(evolve.rel_tol) + "\n";
        m += "abs_tol = " + num(evolve.abs_tol) + "\n";
        if (std::isfinite(evolve.max_step)) m += "max_step = " + num(evolve.max_step) + " s\n";
        if (evolve.record_every > 0.0)
            m += "record_every = " + num(evolve.record_every) + " s\n";
        m += "tail_threshold = " + num(evolve.tail_threshold) + "\n";
        if (sweep) {
            m += "[sweep]\n";
            m += "variable = " + sweep->variable + "\n";
            const Dimension dim = dimension_of(sweep->variable);
            const char* unit = dim == Dimension::Frequency ? " rad/s"
                               : dim == Dimension::Length  ? " m"
                                                           : " N";
            m += "start = " + num(sweep->start) + unit + "\n";
            m += "stop = " + num(sweep->stop) + unit + "\n";
            m += "points = " + std::to_string(sweep->points) + "\n";
            m += std::string("scale = ") + (sweep->log_scale ? "log" : "linear") + "\n";
        }
        return m;
    }
};

}  // namespace rabisense::cli
