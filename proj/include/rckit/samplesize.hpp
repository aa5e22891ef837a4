#pragma once

#include <cstdint>
#include <vector>

#include "rckit/simulate.hpp"

namespace rckit {

struct SampleSizeInputs {
    double f = 0.1;     // tolerated variance-inflation fraction
    double alpha = 0.05; // two-sided significance level
    double power = 0.90;
    double rho = 0.0;   // correlation between the exposure measure and the
                        // reference (use the X**-X* correlation for a noisy
                        // reference)
};

// Closed-form validation-study size: the number of validation rows keeping
// the extra variance from estimating the attenuation slope below fraction f
// of the base variance. Result is rounded up; rho = 1 needs no validation
// data at all.
long validation_sample_size(const SampleSizeInputs& in);

struct PowerPoint {
    std::size_t n_validation = 0;
    double power = 0.0;       // rejection rate of H0: b1 = 0
    std::size_t n_sims = 0;
    std::size_t n_failed = 0; // simulations that failed numerically
};

struct PowerTable {
    std::vector<PowerPoint> points;
    double alpha = 0.05;
};

// Empirical power over a grid of validation sizes: for each candidate the
// full calibration + outcome pipeline runs on fresh simulated cohorts and
// H0: b1 = 0 is rejected when the bootstrap percentile CI excludes zero.
PowerTable sample_size_by_simulation(const ScenarioSpec& scenario,
                                     const std::vector<std::size_t>& candidate_n_validation,
                                     std::size_t n_sims, const BootstrapSpec& boot);

} // namespace rckit
