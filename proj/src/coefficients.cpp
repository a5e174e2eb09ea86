#include "jdlife/coefficients.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace jdlife {

BilinearTable::BilinearTable(std::vector<double> ts, std::vector<double> zs, std::vector<double> values)
    : ts_(std::move(ts)), zs_(std::move(zs)), values_(std::move(values)) {
    if (ts_.empty() || zs_.empty() || values_.size() != ts_.size() * zs_.size())
        throw std::invalid_argument("BilinearTable: inconsistent dimensions");
    if (!std::is_sorted(ts_.begin(), ts_.end()) || !std::is_sorted(zs_.begin(), zs_.end()))
        throw std::invalid_argument("BilinearTable: axes must be sorted");
}

BilinearTable BilinearTable::from_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open coefficient table: " + path);
    std::map<double, std::map<double, double>> rows;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ss(line);
        double t, z, v;
        if (!(ss >> t >> z >> v)) {
            if (first) { first = false; continue; } // header row
            throw std::runtime_error("malformed row in coefficient table " + path + ": " + line);
        }
        first = false;
        rows[t][z] = v;
    }
    if (rows.empty()) throw std::runtime_error("empty coefficient table: " + path);

    std::vector<double> ts, zs;
    for (const auto& [t, _] : rows) ts.push_back(t);
    for (const auto& [z, _] : rows.begin()->second) zs.push_back(z);
    std::vector<double> values;
    values.reserve(ts.size() * zs.size());
    for (const auto& [t, zmap] : rows) {
        if (zmap.size() != zs.size())
            throw std::runtime_error("ragged coefficient table (z axis varies by t): " + path);
        for (const auto& [z, v] : zmap) values.push_back(v);
        (void)t;
    }
    return BilinearTable(std::move(ts), std::move(zs), std::move(values));
}

namespace {
// index i with axis[i] <= x < axis[i+1], clamped to [0, n-2]
std::size_t bracket(const std::vector<double>& axis, double x) {
    if (axis.size() == 1) return 0;
    auto it = std::upper_bound(axis.begin(), axis.end(), x);
    std::size_t i = (it == axis.begin()) ? 0 : static_cast<std::size_t>(it - axis.begin()) - 1;
    return std::min(i, axis.size() - 2);
}
} // namespace

double BilinearTable::operator()(double t, double z) const {
    const std::size_t nz = zs_.size();
    if (ts_.size() == 1 && nz == 1) return values_[0];
    std::size_t i = bracket(ts_, t);
    std::size_t j = bracket(zs_, z);
    double wt = 0.0, wz = 0.0;
    if (ts_.size() > 1) {
        wt = (t - ts_[i]) / (ts_[i + 1] - ts_[i]);
        wt = std::clamp(wt, 0.0, 1.0);
    }
    if (nz > 1) {
        wz = (z - zs_[j]) / (zs_[j + 1] - zs_[j]);
        wz = std::clamp(wz, 0.0, 1.0);
    }
    std::size_t i1 = std::min(i + 1, ts_.size() - 1);
    std::size_t j1 = std::min(j + 1, nz - 1);
    double v00 = values_[i * nz + j], v01 = values_[i * nz + j1];
    double v10 = values_[i1 * nz + j], v11 = values_[i1 * nz + j1];
    return (1 - wt) * ((1 - wz) * v00 + wz * v01) + wt * ((1 - wz) * v10 + wz * v11);
}

} // namespace jdlife
