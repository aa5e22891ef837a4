#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rckit/calibration.hpp"
#include "rckit/dataset.hpp"
#include "rckit/glm.hpp"
#include "rckit/variance.hpp"

namespace rckit {

// Five-step total-effect estimation when a calibration covariate mediates
// the exposure-outcome relationship. Requires two replicates of the
// reference measure in (a subset of) the validation data.
struct MediationSpec {
    std::string outcome;                  // Y
    std::string exposure;                 // X*
    std::string mediator;                 // M
    std::string replicate1;               // first reference replicate
    std::string replicate2;               // second reference replicate
    std::vector<std::string> confounders; // Z
    ModelFamily family = ModelFamily::Logistic;
};

struct MediationFit {
    double gamma_x_hat = 0.0;  // mediator-on-exposure slope (step 2)
    double beta_x_hat = 0.0;   // direct effect (step 4)
    double beta_m_hat = 0.0;   // mediator effect (step 4)
    double total_effect = 0.0; // beta_x + beta_m * gamma_x (step 5)
    std::optional<double> se_total;
    std::optional<std::pair<double, double>> ci_total;
    // With a logistic outcome the direct+indirect decomposition holds only
    // approximately.
    bool approximate_decomposition = false;
    GlmFit step2_fit;
    GlmFit step4_fit;
    CalibrationModel step1_model;
    CalibrationModel step3_model;
};

// Inputs of the closed-form asymptotic-bias expressions for the two naive
// alternatives (no-confounder linear setting).
struct BiasOracleInputs {
    double beta_m = 0.0;      // mediator coefficient in the outcome model
    double alpha_x = 0.0;     // exposure loading in the measurement model
    double alpha_m = 0.0;     // mediator loading in the measurement model
    double sigma_x2 = 0.0;    // var(X)
    double sigma_m2 = 0.0;    // var(M)
    double sigma_xm = 0.0;    // cov(X, M)
    double gamma_x = 0.0;     // mediator-model slope
    double r2_expanded = 1.0; // var(Xhat_expanded)/var(X)
};

struct MethodRow {
    std::string method;
    double estimate = 0.0;
    double se = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
};

struct ThreeMethodComparison {
    MethodRow include_mediator; // mediator as outcome covariate
    MethodRow omit_mediator;    // mediator only in the calibration equation
    MethodRow total_effect;     // five-step estimator
};

// Optional replacement for step 2 when only one replicate is available but
// var(e1**) is known externally: gamma is deattenuated by the reliability
// ratio of the single replicate. Experimental.
struct KnownErrorVariance {
    double var_replicate_error = 0.0;
};

MediationFit midthune_total_effect(const AnalysisDataset& cohort,
                                   const AnalysisDataset& validation,
                                   const MediationSpec& spec,
                                   const std::optional<BootstrapSpec>& boot = std::nullopt,
                                   const std::optional<KnownErrorVariance>& known_var =
                                       std::nullopt);

// Asymptotic bias, relative to the total effect, of applying standard
// calibration (mediator ignored) or expanded calibration (mediator in the
// equation but not the outcome model) when the target is the total effect.
double bias_standard_rc(const BiasOracleInputs& in);
double bias_expanded_rc(const BiasOracleInputs& in);

// (include-M, omit-M, five-step) estimates with stratified-bootstrap CIs.
ThreeMethodComparison compare_three_methods(const AnalysisDataset& cohort,
                                            const AnalysisDataset& validation,
                                            const MediationSpec& spec,
                                            const BootstrapSpec& boot);

} // namespace rckit
