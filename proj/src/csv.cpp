#include "twoscale/csv.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace twoscale {

namespace {

std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

std::string order(double v) {
    if (std::isnan(v)) return "";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

void write_or_throw(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << content;
}

}  // namespace

std::string format_error_report_csv(const ErrorReport& report) {
    std::ostringstream os;
    os << "MDoFs,H,e_uw,e_uw_grad,p_M,q_M,mDoFs,h,e_v,e_v_grad,p_m,q_m\n";
    for (const ErrorReportRow& r : report) {
        os << r.macro_dofs << "," << sci(r.H) << "," << sci(r.e_uw) << "," << sci(r.e_uw_grad)
           << "," << order(r.p_macro) << "," << order(r.q_macro) << "," << r.micro_dofs << ","
           << sci(r.h) << "," << sci(r.e_v) << "," << sci(r.e_v_grad) << "," << order(r.p_micro)
           << "," << order(r.q_micro) << "\n";
    }
    return os.str();
}

void write_error_report_csv(const ErrorReport& report, const std::string& path) {
    if (report.empty()) throw std::runtime_error("refusing to write an empty error report");
    write_or_throw(path, format_error_report_csv(report));
}

void write_bench_csv(const std::vector<BenchRow>& rows, const std::string& path) {
    std::ostringstream os;
    os << "threads,wall_seconds,speedup\n";
    for (const BenchRow& r : rows)
        os << r.threads << "," << sci(r.wall_seconds) << "," << sci(r.speedup) << "\n";
    write_or_throw(path, os.str());
}

void write_residuals_csv(const std::vector<double>& history, const std::string& path) {
    std::ostringstream os;
    os << "sweep,residual\n";
    for (std::size_t i = 0; i < history.size(); ++i) os << i + 1 << "," << sci(history[i]) << "\n";
    write_or_throw(path, os.str());
}

}  // namespace twoscale
