#pragma once

#include <memory>
#include <string>
#include <vector>

namespace jdlife {

// Tabulated (t,z) surface with bilinear interpolation, clamped at the edges.
// Loaded from CSV with columns t,z,value (header row optional).
class BilinearTable {
public:
    static BilinearTable from_csv(const std::string& path);
    BilinearTable() = default;
    BilinearTable(std::vector<double> ts, std::vector<double> zs, std::vector<double> values);

    double operator()(double t, double z) const;
    bool empty() const { return values_.empty(); }

private:
    std::vector<double> ts_, zs_, values_; // values_[i*zs.size()+j]
};

// A model coefficient as a function of (t, z). Built-ins cover the spec'd
// kinds; time-only coefficients simply ignore z (tables may be z-constant).
class ScalarField {
public:
    enum class Kind { Constant, AffineZ, OU, Table };

    ScalarField() : kind_(Kind::Constant), a_(0.0), b_(0.0) {}
    static ScalarField constant(double v) { return ScalarField(Kind::Constant, v, 0.0, nullptr); }
    // a + b*z
    static ScalarField affine_z(double a, double b) { return ScalarField(Kind::AffineZ, a, b, nullptr); }
    // rate*(mean - z), the mean-reverting drift built-in
    static ScalarField ou(double rate, double mean) { return ScalarField(Kind::OU, rate, mean, nullptr); }
    static ScalarField table(std::shared_ptr<const BilinearTable> tab) {
        return ScalarField(Kind::Table, 0.0, 0.0, std::move(tab));
    }

    double operator()(double t, double z) const {
        switch (kind_) {
            case Kind::Constant: return a_;
            case Kind::AffineZ: return a_ + b_ * z;
            case Kind::OU: return a_ * (b_ - z);
            case Kind::Table: return (*table_)(t, z);
        }
        return a_;
    }
    double at_time(double t) const { return (*this)(t, 0.0); }
    Kind kind() const { return kind_; }

private:
    ScalarField(Kind k, double a, double b, std::shared_ptr<const BilinearTable> tab)
        : kind_(k), a_(a), b_(b), table_(std::move(tab)) {}

    Kind kind_;
    double a_, b_;
    std::shared_ptr<const BilinearTable> table_;
};

} // namespace jdlife
