#include <set>

#include "twoscale/config.hpp"

namespace twoscale {

namespace {

std::set<std::string> param_names(const ParamMap& params) {
    std::set<std::string> names;
    for (const auto& [key, value] : params) names.insert(key);
    return names;
}

Expr parse_field(const std::string& text, const std::set<std::string>& params,
                 const std::string& where, bool allow_micro_vars) {
    Expr e;
    try {
        e = parse(text, params);
    } catch (const ParseError& err) {
        throw ConfigError(where + ": " + err.what());
    }
    if (!allow_micro_vars && (e.depends_on(Var::y0) || e.depends_on(Var::y1)))
        throw ConfigError(where + ": expression must not depend on y0/y1");
    return e;
}

}  // namespace

ProblemSetup make_problem(const Config& cfg) {
    const std::set<std::string> names = param_names(cfg.params);

    ProblemData data;
    data.kappa1 = cfg.kappa1;
    data.kappa2 = cfg.kappa2;
    data.kappa3 = cfg.kappa3;
    data.kappa4 = cfg.kappa4;
    data.Dv = cfg.Dv;
    data.Dw = parse_field(cfg.dw, names, "[parameters] Dw", false);
    data.fu = parse_field(cfg.fu, names, "[parameters] fu", false);
    data.fv = parse_field(cfg.fv, names, "[parameters] fv", true);
    data.fw = parse_field(cfg.fw, names, "[parameters] fw", false);
    data.u0 = parse_field(cfg.u0, names, "[parameters] u0", false);
    data.diffeo = Diffeo::from_map({parse_field(cfg.zeta0, names, "[micro] zeta0", true),
                                    parse_field(cfg.zeta1, names, "[micro] zeta1", true)});
    data.roles = cfg.roles;
    data.bounds = cfg.bounds;
    data.params = cfg.params;

    ProblemSetup setup{
        std::move(data),
        Grid(cfg.macro_domain, cfg.macro_n0, cfg.macro_n1),
        Grid(cfg.micro_domain, cfg.micro_n0, cfg.micro_n1),
        ManufacturedCase{},
    };

    if (cfg.has_mms) {
        setup.mms.u = parse_field(cfg.mms_u, names, "[mms] u", false);
        setup.mms.v = parse_field(cfg.mms_v, names, "[mms] v", true);
        setup.mms.w = parse_field(cfg.mms_w, names, "[mms] w", false);
        setup.mms.base = setup.data;
        setup.mms.macro_domain = cfg.macro_domain;
        setup.mms.micro_domain = cfg.micro_domain;
    }
    return setup;
}

}  // namespace twoscale
