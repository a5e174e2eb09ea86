#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace jdlife {

struct CheckResult {
    std::string name;
    bool pass = false;
    double statistic = 0.0;
    double tolerance = 0.0;
    std::string details;
    double seconds = 0.0; // printed only; excluded from the serialized report
};

struct RunReport {
    std::vector<CheckResult> checks;
    bool all_pass() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return !checks.empty();
    }
};

// name,status,statistic,tolerance rows; deterministic for fixed seeds.
std::string report_csv(const RunReport& report);
void print_report(const RunReport& report, std::ostream& os);

} // namespace jdlife
