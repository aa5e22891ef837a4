#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "rckit/calibration.hpp"
#include "rckit/rc.hpp"

namespace rckit {

struct BootstrapSpec {
    std::size_t n_replicates = 1000;
    std::uint64_t seed = 0;
    bool stratify_on_validation = true;
    double ci_level = 0.95; // percentile CI
    // Replicates failing with a numerical error (e.g. separation in a
    // resample) are dropped; beyond this fraction the whole report aborts.
    double max_failed_fraction = 0.05;
};

struct VarianceReport {
    double point_estimate = 0.0;
    double se_unadjusted = 0.0; // model-based, ignores calibration uncertainty
    double se_bootstrap = 0.0;
    std::pair<double, double> ci_bootstrap{0.0, 0.0};
    std::optional<double> se_sandwich;
    std::size_t n_failed_replicates = 0;
    std::size_t n_replicates = 0;
    double ci_level = 0.95;
    std::uint64_t seed = 0;
    // Successful replicate estimates in replicate order (useful for
    // monotone-transform work on the CI scale).
    std::vector<double> replicate_estimates;
};

struct SandwichResult {
    double se_exposure = 0.0;
    Eigen::MatrixXd vcov;             // full stacked-parameter covariance
    std::vector<std::string> labels;  // calibration params then outcome params
};

class Rng;

// One within-stratum resample: each stratum keeps its exact size and
// contributes indices drawn uniformly with replacement from itself, in
// stratum order.
std::vector<std::size_t> stratified_resample(
    const std::vector<std::vector<std::size_t>>& strata, Rng& rng);

// Nonparametric bootstrap of the whole pipeline: each replicate resamples
// rows with replacement within the validation stratum and within the rest
// (preserving both sizes), refits the calibration equation, recalibrates,
// and refits the outcome model. Replicate r depends only on (seed, r).
VarianceReport bootstrap_rc(const AnalysisDataset& cohort, const CalibrationSpec& cal_spec,
                            const OutcomeSpec& outcome, const BootstrapSpec& boot);

// Stacked estimating equations: calibration normal-equation scores over
// validation rows joined with outcome-model scores (at the calibrated
// exposure) over all rows form one M-estimation system. The bread is the
// numerical Jacobian of the mean score, the meat the empirical score outer
// product; the result accounts for calibration-coefficient uncertainty
// without resampling.
SandwichResult sandwich_stacked(const AnalysisDataset& cohort, const CalibrationModel& model,
                                const OutcomeSpec& outcome, const GlmFit& outcome_fit);

} // namespace rckit
