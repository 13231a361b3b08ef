#pragma once

#include <stdexcept>
#include <string>

#include "twoscale/mms.hpp"
#include "twoscale/problem.hpp"

namespace twoscale {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Flat INI-style configuration: [section] headers, key = value lines,
// comments with '#' or ';'. Expression values use the documented grammar.
struct Config {
    RectDomain macro_domain, micro_domain;
    int macro_n0 = 8, macro_n1 = 8;
    int micro_n0 = 8, micro_n1 = 8;
    BoundaryRoles roles;

    std::string zeta0 = "y0", zeta1 = "y1";
    double kappa1 = 1.0, kappa2 = 1.0, kappa3 = 1.0, kappa4 = 1.0, Dv = 1.0;
    std::string dw = "1", fu = "0", fv = "0", fw = "0", u0 = "0";

    double inner_tol = 1e-10, outer_tol = 1e-8;
    int inner_maxit = 20000, max_outer = 100;
    MapBounds bounds;

    bool has_mms = false;
    std::string mms_u, mms_v, mms_w;

    double micro_viz_scale = 0.1;

    ParamMap params;  // numeric [parameters] keys, late-bound in expressions

    // Canonical text form with all defaults applied; reloading it yields an
    // identical Config.
    std::string print() const;
};

Config parse_config(const std::string& text);
Config load_config(const std::string& path);

// Parsed and validated problem: expressions compiled against the declared
// parameters, roles and grids realized.
struct ProblemSetup {
    ProblemData data;
    Grid macro;
    Grid micro;
    ManufacturedCase mms;  // populated when the config has an [mms] section
};

ProblemSetup make_problem(const Config& cfg);

}  // namespace twoscale
