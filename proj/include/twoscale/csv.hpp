#pragma once

#include <string>
#include <vector>

#include "twoscale/mms.hpp"

namespace twoscale {

struct BenchRow {
    int threads = 1;
    double wall_seconds = 0.0;
    double speedup = 1.0;
};

// Columns follow the error tables: macro dofs/H/e_uw/e_uw_grad/p_M/q_M then
// the micro counterparts. Errors in scientific notation with 4 significant
// digits; undefined orders are left blank.
void write_error_report_csv(const ErrorReport& report, const std::string& path);
std::string format_error_report_csv(const ErrorReport& report);

void write_bench_csv(const std::vector<BenchRow>& rows, const std::string& path);
void write_residuals_csv(const std::vector<double>& history, const std::string& path);

}  // namespace twoscale
