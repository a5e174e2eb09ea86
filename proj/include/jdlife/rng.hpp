#pragma once

#include <cstdint>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace jdlife {

// Counter-based RNG (Philox-4x32-10). Streams are keyed by (seed, stream_id),
// so draws for a given path are independent of scheduling order.
class Philox4x32 {
public:
    using result_type = std::uint64_t;

    Philox4x32(std::uint64_t seed, std::uint64_t stream_id) {
        std::uint64_t k = mix64(seed ^ 0x5851f42d4c957f2dULL);
        k = mix64(k ^ mix64(stream_id ^ 0x14057b7ef767814fULL));
        key0_ = static_cast<std::uint32_t>(k);
        key1_ = static_cast<std::uint32_t>(k >> 32);
        ctr0_ = ctr1_ = 0;
        have_spare_ = false;
        spare_ = 0;
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type(0); }

    result_type operator()() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        std::uint32_t x0 = static_cast<std::uint32_t>(ctr0_);
        std::uint32_t x1 = static_cast<std::uint32_t>(ctr0_ >> 32);
        std::uint32_t x2 = static_cast<std::uint32_t>(ctr1_);
        std::uint32_t x3 = static_cast<std::uint32_t>(ctr1_ >> 32);
        ++ctr0_;
        if (ctr0_ == 0) ++ctr1_;

        std::uint32_t k0 = key0_, k1 = key1_;
        for (int round = 0; round < 10; ++round) {
            std::uint64_t p0 = std::uint64_t(0xD2511F53u) * x0;
            std::uint64_t p1 = std::uint64_t(0xCD9E8D57u) * x2;
            std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
            std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
            std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
            std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
            std::uint32_t y0 = hi1 ^ x1 ^ k0;
            std::uint32_t y1 = lo1;
            std::uint32_t y2 = hi0 ^ x3 ^ k1;
            std::uint32_t y3 = lo0;
            x0 = y0; x1 = y1; x2 = y2; x3 = y3;
            k0 += 0x9E3779B9u;
            k1 += 0xBB67AE85u;
        }
        spare_ = (std::uint64_t(x2) << 32) | x3;
        have_spare_ = true;
        return (std::uint64_t(x0) << 32) | x1;
    }

    // Uniform in (0,1), never exactly 0 or 1.
    double uniform() {
        std::uint64_t u = (*this)();
        return (static_cast<double>(u >> 11) + 0.5) * (1.0 / 9007199254740992.0);
    }

    double normal() { return inverse_normal_cdf(uniform()); }

    // Exact Poisson count; product method, splitting large means so the
    // running product stays away from underflow.
    long poisson(double mean) {
        if (mean <= 0.0) return 0;
        if (mean > 30.0) {
            long half = poisson(mean * 0.5);
            return half + poisson(mean * 0.5);
        }
        const double limit = std::exp(-mean);
        long k = 0;
        double prod = uniform();
        while (prod > limit) {
            ++k;
            prod *= uniform();
        }
        return k;
    }

    // Wichura's percentage-point function for N(0,1), ~1e-15 relative accuracy.
    static double inverse_normal_cdf(double p) {
        if (!(p > 0.0 && p < 1.0)) throw std::domain_error("inverse_normal_cdf: p outside (0,1)");
        const double q = p - 0.5;
        if (std::fabs(q) <= 0.425) {
            const double r = 0.180625 - q * q;
            return q *
                (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r + 6.7265770927008700853e+4) * r +
                      4.5921953931549871457e+4) * r + 1.3731693765509461125e+4) * r + 1.9715909503065514427e+3) * r +
                      1.3314166789178437745e+2) * r + 3.3871328727963666080e+0) /
                (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r + 3.9307895800092710610e+4) * r +
                      2.1213794301586595867e+4) * r + 5.3941960214247511077e+3) * r + 6.8718700749205790830e+2) * r +
                      4.2313330701600911252e+1) * r + 1.0);
        }
        double r = (q < 0.0) ? p : 1.0 - p;
        r = std::sqrt(-std::log(r));
        double x;
        if (r <= 5.0) {
            r -= 1.6;
            x = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r + 2.41780725177450611770e-1) * r +
                     1.27045825245236838258e+0) * r + 3.64784832476320460504e+0) * r + 5.76949722146069140550e+0) * r +
                     4.63033784615654529590e+0) * r + 1.42343711074968357734e+0) /
                (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r + 1.51986665636164571966e-2) * r +
                     1.48103976427480074590e-1) * r + 6.89767334985100004550e-1) * r + 1.67638483018380384940e+0) * r +
                     2.05319162663775882187e+0) * r + 1.0);
        } else {
            r -= 5.0;
            x = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r + 1.24266094738807843860e-3) * r +
                     2.65321895265761230930e-2) * r + 2.96560571828504891230e-1) * r + 1.78482653991729133580e+0) * r +
                     5.46378491116411436990e+0) * r + 6.65790464350110377720e+0) /
                (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r + 1.84631831751005468180e-5) * r +
                     7.86869131145613259100e-4) * r + 1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
                     5.99832206555887937690e-1) * r + 1.0);
        }
        return (q < 0.0) ? -x : x;
    }

private:
    static std::uint64_t mix64(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint32_t key0_, key1_;
    std::uint64_t ctr0_, ctr1_;
    bool have_spare_;
    std::uint64_t spare_;
};

} // namespace jdlife
