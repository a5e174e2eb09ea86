#include "jdlife/report.hpp"

#include <iomanip>
#include <ostream>
#include <sstream>

#include "jdlife/csvio.hpp"

namespace jdlife {

std::string report_csv(const RunReport& report) {
    std::ostringstream out;
    out << "name,status,statistic,tolerance\n";
    for (const auto& c : report.checks) {
        out << c.name << ',' << (c.pass ? "pass" : "FAIL") << ',' << format_double(c.statistic)
            << ',' << format_double(c.tolerance) << '\n';
    }
    return out.str();
}

void print_report(const RunReport& report, std::ostream& os) {
    os << std::left << std::setw(34) << "check" << std::setw(7) << "status" << std::setw(15)
       << "statistic" << std::setw(13) << "tolerance" << std::setw(9) << "runtime"
       << "details\n";
    for (const auto& c : report.checks) {
        std::ostringstream stat, tol, secs;
        stat << std::setprecision(6) << c.statistic;
        tol << std::setprecision(4) << c.tolerance;
        secs << std::fixed << std::setprecision(1) << c.seconds << "s";
        os << std::left << std::setw(34) << c.name << std::setw(7) << (c.pass ? "pass" : "FAIL")
           << std::setw(15) << stat.str() << std::setw(13) << tol.str() << std::setw(9) << secs.str()
           << c.details << '\n';
    }
    os << (report.all_pass() ? "all checks passed" : "SOME CHECKS FAILED") << '\n';
}

} // namespace jdlife
