#pragma once

#include "jdlife/config.hpp"
#include "jdlife/report.hpp"

namespace jdlife {

// Independent 1-D oracle for z-independent configurations: RK4 on the scalar
// value equation V' = a(t, psi(t,V)) V - (1+mu), V(T)=1, with its own
// pointwise psi optimization. Lives here because the acceptance suite is the
// consumer; the PDE path never calls it.
double ode_reduction_value(const RunConfig& cfg, int steps);

// Runs every acceptance check at the configuration's scale and returns one
// row per criterion.
RunReport run_acceptance(const RunConfig& cfg);

} // namespace jdlife
