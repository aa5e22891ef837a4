#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rckit/calibration.hpp"
#include "rckit/dataset.hpp"
#include "rckit/rc.hpp"

namespace rckit {

struct SurveyDesign {
    std::vector<int> stratum;   // per row
    std::vector<int> psu;       // per row; PSU ids are scoped within stratum
    std::vector<double> weight; // per row, > 0

    std::size_t n() const { return weight.size(); }
    void validate() const; // >= 2 PSUs per stratum, positive weights
};

// Reads SurveyStratum / SurveyPsu / SurveyWeight role columns.
SurveyDesign survey_design_from(const AnalysisDataset& ds);

struct ReplicateWeightSet {
    // weights[r][i]: weight of row i in replicate r
    std::vector<std::vector<double>> weights;
    std::uint64_t seed = 0;
    std::string method = "psu-bootstrap-rescaled";

    std::size_t n_replicates() const { return weights.size(); }
};

// Rescaled PSU bootstrap: per stratum with n_h PSUs, each replicate draws
// n_h - 1 PSUs with replacement; each row's replicate weight is its base
// weight times the multiplicity of its PSU times n_h/(n_h - 1). Expected
// replicate weight equals the base weight.
ReplicateWeightSet make_replicate_weights(const SurveyDesign& design, std::size_t n_replicates,
                                          std::uint64_t seed);

// Optional per-row adjustment (e.g. user-supplied response-rate factors)
// applied multiplicatively to every replicate.
void adjust_replicate_weights(ReplicateWeightSet& set, const std::vector<double>& factors);

// CSV interop: one column per replicate (w1..wR), one row per observation.
void write_replicate_weights_csv(const ReplicateWeightSet& set, const std::string& path);
ReplicateWeightSet read_replicate_weights_csv(const std::string& path);

struct SurveyRcFit {
    double estimate = 0.0;       // base-weight run
    double se_replicate = 0.0;   // sd over replicate-weight runs
    std::vector<double> replicate_estimates;
    GlmFit base_fit;
    std::size_t n_failed_replicates = 0;
};

// Survey-weighted outcome fit on the calibrated exposure: run 1 with base
// weights gives the point estimate, runs 2..R+1 with replicate weights give
// the resampling variance (1/(R-1)) Sum (b_r - mean)^2.
SurveyRcFit survey_rc_fit(const AnalysisDataset& cohort, const SurveyDesign& design,
                          const ReplicateWeightSet& replicate_weights,
                          const CalibrationModel& model, const OutcomeSpec& outcome);

struct MiPooledEstimate {
    std::vector<double> beta_m; // per-imputation estimates
    std::vector<double> v_m;    // per-imputation replicate variances
    double beta_pooled = 0.0;
    double v_pooled = 0.0;
    bool robust = false;
    bool rubin_factor = false; // optional (1 + 1/M) on the between term
    std::uint64_t seed = 0;
    std::size_t n_imputations = 0;
    std::size_t n_replicates = 0;
    // Normalizer notes recorded alongside the numbers: replicate means use
    // 1/R, replicate variances 1/(R-1).
    std::string mean_normalizer = "1/R";
    std::string variance_normalizer = "1/(R-1)";
};

struct MiOptions {
    std::size_t n_imputations = 25;
    std::size_t n_replicates = 1000;
    std::uint64_t seed = 0;
    bool robust = false;       // median / scaled-MAD pooling
    bool rubin_factor = false; // add (1+1/M) to the between-imputation term
};

// Resampling-based multiple imputation: each imputation refits the
// calibration equation on a bootstrap resample of the validation subset
// (stratified on reliability-replicate membership when replicate columns
// are present), recalibrates the cohort, and computes the survey estimate
// and its replicate-weight variance. Pooling follows the law of total
// variance: V = mean(V_m) + var(beta_m) across imputations.
MiPooledEstimate mi_rc_pipeline(const AnalysisDataset& cohort, const AnalysisDataset& validation,
                                const CalibrationSpec& cal_spec, const OutcomeSpec& outcome,
                                const SurveyDesign& design, const MiOptions& options);

} // namespace rckit
