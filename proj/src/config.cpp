#include "twoscale/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

namespace twoscale {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

bool parse_number(const std::string& s, double* out) {
    if (s.empty()) return false;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size()) return false;
    if (out) *out = v;
    return true;
}

using RawConfig = std::map<std::string, std::map<std::string, std::string>>;

RawConfig parse_raw(const std::string& text) {
    RawConfig raw;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t cut = line.find_first_of("#;");
        if (cut != std::string::npos) line.resize(cut);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("line " + std::to_string(lineno) + ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            raw[section];
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        if (section.empty())
            throw ConfigError("line " + std::to_string(lineno) + ": key outside any section");
        const std::string key = trim(line.substr(0, eq));
        raw[section][key] = trim(line.substr(eq + 1));
    }
    return raw;
}

Side parse_side(const std::string& name, const std::string& where) {
    if (name == "left") return Side::Left;
    if (name == "right") return Side::Right;
    if (name == "bottom") return Side::Bottom;
    if (name == "top") return Side::Top;
    throw ConfigError(where + ": unknown side '" + name + "'");
}

std::vector<Side> parse_side_list(const std::string& value, const std::string& where) {
    std::vector<Side> sides;
    std::istringstream in(value);
    std::string tok;
    while (std::getline(in, tok, ',')) {
        tok = trim(tok);
        if (!tok.empty()) sides.push_back(parse_side(tok, where));
    }
    return sides;
}

struct SectionReader {
    const std::map<std::string, std::string>* kv;
    std::string section;
    std::vector<std::string> consumed;

    bool has(const std::string& key) const { return kv && kv->count(key); }

    const std::string* get(const std::string& key) {
        consumed.push_back(key);
        if (!kv) return nullptr;
        auto it = kv->find(key);
        return it == kv->end() ? nullptr : &it->second;
    }

    double number(const std::string& key, double fallback) {
        const std::string* v = get(key);
        if (!v) return fallback;
        double out;
        if (!parse_number(*v, &out))
            throw ConfigError("[" + section + "] " + key + ": expected a number, got '" + *v + "'");
        return out;
    }

    int integer(const std::string& key, int fallback) {
        const double v = number(key, fallback);
        if (v != static_cast<int>(v))
            throw ConfigError("[" + section + "] " + key + ": expected an integer");
        return static_cast<int>(v);
    }

    std::string text(const std::string& key, const std::string& fallback) {
        const std::string* v = get(key);
        return v ? *v : fallback;
    }

    void reject_unknown() const {
        if (!kv) return;
        for (const auto& [key, value] : *kv) {
            if (std::find(consumed.begin(), consumed.end(), key) == consumed.end())
                throw ConfigError("[" + section + "] unknown key '" + key + "'");
        }
    }
};

}  // namespace

Config parse_config(const std::string& text) {
    const RawConfig raw = parse_raw(text);
    for (const auto& [name, kv] : raw) {
        if (name != "macro" && name != "micro" && name != "parameters" && name != "solver" &&
            name != "mms" && name != "output")
            throw ConfigError("unknown section [" + name + "]");
    }

    // Required keys first, reported together.
    const std::vector<std::pair<std::string, std::string>> required = {
        {"macro", "n0"},        {"macro", "n1"},        {"micro", "n0"},
        {"micro", "n1"},        {"micro", "zeta0"},     {"micro", "zeta1"},
        {"parameters", "kappa1"}, {"parameters", "kappa2"}, {"parameters", "kappa3"},
        {"parameters", "kappa4"}, {"parameters", "Dv"},   {"parameters", "Dw"},
    };
    std::string missing;
    for (const auto& [sec, key] : required) {
        auto it = raw.find(sec);
        if (it == raw.end() || !it->second.count(key)) missing += " " + sec + "." + key;
    }
    if (!missing.empty()) throw ConfigError("missing required keys:" + missing);

    auto section = [&](const char* name) {
        SectionReader r;
        auto it = raw.find(name);
        r.kv = it == raw.end() ? nullptr : &it->second;
        r.section = name;
        return r;
    };

    Config cfg;

    SectionReader mac = section("macro");
    cfg.macro_domain.lo = {mac.number("lo0", -1.0), mac.number("lo1", -1.0)};
    cfg.macro_domain.hi = {mac.number("hi0", 1.0), mac.number("hi1", 1.0)};
    cfg.macro_n0 = mac.integer("n0", 8);
    cfg.macro_n1 = mac.integer("n1", 8);
    {
        const std::string dir = mac.text("dirichlet", "left");
        cfg.roles.macro = {MacroBC::Neumann, MacroBC::Neumann, MacroBC::Neumann, MacroBC::Neumann};
        for (Side s : parse_side_list(dir, "[macro] dirichlet"))
            cfg.roles.macro[static_cast<int>(s)] = MacroBC::Dirichlet;
    }
    mac.reject_unknown();

    SectionReader mic = section("micro");
    cfg.micro_domain.lo = {mic.number("lo0", -1.0), mic.number("lo1", -1.0)};
    cfg.micro_domain.hi = {mic.number("hi0", 1.0), mic.number("hi1", 1.0)};
    cfg.micro_n0 = mic.integer("n0", 8);
    cfg.micro_n1 = mic.integer("n1", 8);
    cfg.zeta0 = mic.text("zeta0", "y0");
    cfg.zeta1 = mic.text("zeta1", "y1");
    {
        std::array<int, 4> assigned{0, 0, 0, 0};
        auto assign = [&](const std::string& value, MicroRole role, const std::string& where) {
            for (Side s : parse_side_list(value, where)) {
                cfg.roles.micro[static_cast<int>(s)] = role;
                assigned[static_cast<int>(s)] += 1;
            }
        };
        const bool any = mic.has("gamma_i") || mic.has("gamma_o") || mic.has("gamma_n");
        const std::string gi = mic.text("gamma_i", "left");
        const std::string go = mic.text("gamma_o", "right");
        const std::string gn = mic.text("gamma_n", "bottom,top");
        assign(gi, MicroRole::GammaI, "[micro] gamma_i");
        assign(go, MicroRole::GammaO, "[micro] gamma_o");
        assign(gn, MicroRole::GammaN, "[micro] gamma_n");
        if (any) {
            for (int s = 0; s < 4; ++s)
                if (assigned[s] != 1)
                    throw ConfigError(std::string("[micro] side '") +
                                      side_name(static_cast<Side>(s)) +
                                      "' must be assigned exactly one role");
        }
    }
    mic.reject_unknown();

    SectionReader par = section("parameters");
    cfg.kappa1 = par.number("kappa1", 1.0);
    cfg.kappa2 = par.number("kappa2", 1.0);
    cfg.kappa3 = par.number("kappa3", 1.0);
    cfg.kappa4 = par.number("kappa4", 1.0);
    cfg.Dv = par.number("Dv", 1.0);
    cfg.dw = par.text("Dw", "1");
    cfg.fu = par.text("fu", "0");
    cfg.fv = par.text("fv", "0");
    cfg.fw = par.text("fw", "0");
    cfg.u0 = par.text("u0", "0");
    // Remaining numeric keys become late-bound parameters.
    if (par.kv) {
        for (const auto& [key, value] : *par.kv) {
            if (std::find(par.consumed.begin(), par.consumed.end(), key) != par.consumed.end())
                continue;
            double v;
            if (!parse_number(value, &v))
                throw ConfigError("[parameters] " + key +
                                  ": extra keys must be numeric parameter bindings");
            cfg.params[key] = v;
        }
    }
    cfg.params["kappa1"] = cfg.kappa1;
    cfg.params["kappa2"] = cfg.kappa2;
    cfg.params["kappa3"] = cfg.kappa3;
    cfg.params["kappa4"] = cfg.kappa4;
    cfg.params["Dv"] = cfg.Dv;
    {
        double v;
        if (parse_number(cfg.dw, &v)) cfg.params["Dw"] = v;
    }

    SectionReader sol = section("solver");
    cfg.inner_tol = sol.number("inner_tol", 1e-10);
    cfg.inner_maxit = sol.integer("inner_maxit", 20000);
    cfg.outer_tol = sol.number("outer_tol", 1e-8);
    cfg.max_outer = sol.integer("max_outer", 100);
    cfg.bounds.lo = sol.number("det_lo", 1e-6);
    cfg.bounds.hi = sol.number("det_hi", 1e6);
    sol.reject_unknown();

    if (raw.count("mms")) {
        SectionReader mms = section("mms");
        const std::string* u = mms.get("u");
        const std::string* v = mms.get("v");
        const std::string* w = mms.get("w");
        if (!u || !v || !w) throw ConfigError("[mms] requires keys u, v and w");
        cfg.has_mms = true;
        cfg.mms_u = *u;
        cfg.mms_v = *v;
        cfg.mms_w = *w;
        mms.reject_unknown();
    }

    SectionReader out = section("output");
    cfg.micro_viz_scale = out.number("micro_viz_scale", 0.1);
    out.reject_unknown();

    if (cfg.macro_n0 < 1 || cfg.macro_n1 < 1 || cfg.micro_n0 < 1 || cfg.micro_n1 < 1)
        throw ConfigError("grid sizes must be >= 1");

    return cfg;
}

Config load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

std::string side_list(const std::array<MacroBC, 4>& roles, MacroBC which) {
    std::string out;
    for (int s = 0; s < 4; ++s) {
        if (roles[s] != which) continue;
        if (!out.empty()) out += ",";
        out += side_name(static_cast<Side>(s));
    }
    return out;
}

std::string micro_side_list(const std::array<MicroRole, 4>& roles, MicroRole which) {
    std::string out;
    for (int s = 0; s < 4; ++s) {
        if (roles[s] != which) continue;
        if (!out.empty()) out += ",";
        out += side_name(static_cast<Side>(s));
    }
    return out;
}

}  // namespace

std::string Config::print() const {
    std::ostringstream os;
    os << "[macro]\n";
    os << "lo0 = " << fmt(macro_domain.lo.x) << "\n";
    os << "lo1 = " << fmt(macro_domain.lo.y) << "\n";
    os << "hi0 = " << fmt(macro_domain.hi.x) << "\n";
    os << "hi1 = " << fmt(macro_domain.hi.y) << "\n";
    os << "n0 = " << macro_n0 << "\n";
    os << "n1 = " << macro_n1 << "\n";
    os << "dirichlet = " << side_list(roles.macro, MacroBC::Dirichlet) << "\n";
    os << "\n[micro]\n";
    os << "lo0 = " << fmt(micro_domain.lo.x) << "\n";
    os << "lo1 = " << fmt(micro_domain.lo.y) << "\n";
    os << "hi0 = " << fmt(micro_domain.hi.x) << "\n";
    os << "hi1 = " << fmt(micro_domain.hi.y) << "\n";
    os << "n0 = " << micro_n0 << "\n";
    os << "n1 = " << micro_n1 << "\n";
    os << "zeta0 = " << zeta0 << "\n";
    os << "zeta1 = " << zeta1 << "\n";
    os << "gamma_i = " << micro_side_list(roles.micro, MicroRole::GammaI) << "\n";
    os << "gamma_o = " << micro_side_list(roles.micro, MicroRole::GammaO) << "\n";
    os << "gamma_n = " << micro_side_list(roles.micro, MicroRole::GammaN) << "\n";
    os << "\n[parameters]\n";
    os << "kappa1 = " << fmt(kappa1) << "\n";
    os << "kappa2 = " << fmt(kappa2) << "\n";
    os << "kappa3 = " << fmt(kappa3) << "\n";
    os << "kappa4 = " << fmt(kappa4) << "\n";
    os << "Dv = " << fmt(Dv) << "\n";
    os << "Dw = " << dw << "\n";
    os << "fu = " << fu << "\n";
    os << "fv = " << fv << "\n";
    os << "fw = " << fw << "\n";
    os << "u0 = " << u0 << "\n";
    for (const auto& [key, value] : params) {
        if (key == "kappa1" || key == "kappa2" || key == "kappa3" || key == "kappa4" ||
            key == "Dv" || key == "Dw")
            continue;
        os << key << " = " << fmt(value) << "\n";
    }
    os << "\n[solver]\n";
    os << "inner_tol = " << fmt(inner_tol) << "\n";
    os << "inner_maxit = " << inner_maxit << "\n";
    os << "outer_tol = " << fmt(outer_tol) << "\n";
    os << "max_outer = " << max_outer << "\n";
    os << "det_lo = " << fmt(bounds.lo) << "\n";
    os << "det_hi = " << fmt(bounds.hi) << "\n";
    if (has_mms) {
        os << "\n[mms]\n";
        os << "u = " << mms_u << "\n";
        os << "v = " << mms_v << "\n";
        os << "w = " << mms_w << "\n";
    }
    os << "\n[output]\n";
    os << "micro_viz_scale = " << fmt(micro_viz_scale) << "\n";
    return os.str();
}

}  // namespace twoscale
