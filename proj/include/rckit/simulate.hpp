#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "rckit/dataset.hpp"
#include "rckit/glm.hpp"
#include "rckit/mediation.hpp"
#include "rckit/variance.hpp"

namespace rckit {

// Generative model for the benchmark cohort: trivariate normal (X, Z, V),
// a linear measurement model for the self-report X*, a classical-error
// biomarker X** observed in the validation subset, and a GLM outcome.
struct ScenarioSpec {
    std::size_t n_cohort = 2500;
    std::size_t n_validation = 250;

    Eigen::Vector3d mu{0.0, 0.0, 0.0}; // means of (X, Z, V)
    Eigen::Matrix3d covariance;        // of (X, Z, V)

    // X* = a0 + a1 X + a2 Z + a3 V + eps
    double a0 = 0.0, a1 = 1.0, a2 = 0.0, a3 = 0.0;
    double sigma_eps2 = 0.0;
    // X** = X + delta
    double sigma_delta2 = 0.0;
    // linear predictor b0 + b1 X + b2 Z + b3 V
    double b0 = 0.0, b1 = 0.0, b2 = 0.0, b3 = 0.0;
    double sigma_y2 = 1.0; // linear-family outcome noise
    ModelFamily family = ModelFamily::Logistic;

    std::uint64_t seed = 1;
    std::size_t n_sims = 1000;

    void validate() const; // positive-definite covariance, sizes, variances
};

// The default benchmark scenario: N=2500 cohort with a 250-row validation
// subset, equicorrelated (0.5) unit-variance covariates, a1=0.5 a2=0.5
// a3=0.2 measurement model with noise 0.49, biomarker error 0.7, logistic
// outcome with b1 = log 1.5.
ScenarioSpec default_scenario();

// Deterministic in (spec.seed, sim_index). Columns: y, x_true, z, v, xstar,
// xref (blank outside validation), validation.
AnalysisDataset gen_cohort(const ScenarioSpec& spec, std::size_t sim_index);

struct MethodSummary {
    std::string method;
    double mean_estimate = 0.0;
    double empirical_se = 0.0;    // sd of estimates across simulations
    double se_of_mean = 0.0;      // empirical_se / sqrt(n_sims)
    double percent_bias = 0.0;    // 100 * (mean - truth) / truth
    double avg_estimated_se = 0.0;
    double coverage = 0.0;        // nominal 95% CI coverage
    std::vector<double> estimates; // raw per-sim estimates
};

struct ExperimentSummary {
    double truth = 0.0;
    std::size_t n_sims = 0;
    std::vector<MethodSummary> methods;
};

// Four-method covariate-alignment experiment: uncorrected, correctly
// calibrated, calibration omitting V, outcome omitting V. Coverage uses the
// model-based Wald interval.
ExperimentSummary run_alignment_study(const ScenarioSpec& spec, std::size_t n_sims);

// Model-based vs bootstrap SE comparison for correctly-performed
// calibration: rows "model-based" (Wald coverage) and "bootstrap"
// (percentile coverage).
ExperimentSummary run_se_study(const ScenarioSpec& spec, std::size_t n_sims,
                               const BootstrapSpec& boot);

// Fully linear mediation generator (no confounders): M = g0 + gX X + d,
// Y = b0 + bX X + bM M + e, X* = a0 + aX X + aM M + e*, replicates
// Xk** = X + ek** observed in the validation subset.
struct MediationScenario {
    std::size_t n_main = 2500;
    std::size_t n_validation = 250;
    double sigma_x2 = 1.0;
    double gamma0 = 0.0, gamma_x = 0.4;
    double sigma_m_resid2 = 0.84;
    double beta0 = 0.0, beta_x = 0.2, beta_m = 0.5;
    double sigma_y2 = 1.0;
    double alpha0 = 0.0, alpha_x = 0.5, alpha_m = 0.3;
    double sigma_estar2 = 0.49;
    double sigma_ref2 = 0.5; // replicate error variance
    std::uint64_t seed = 1;
};

AnalysisDataset gen_mediation_cohort(const MediationScenario& sc, std::size_t sim_index);

// Population moments of the generator, packaged for the bias formulas.
BiasOracleInputs mediation_oracle_inputs(const MediationScenario& sc);
double mediation_true_total_effect(const MediationScenario& sc);

struct MediationStudyResult {
    // empirical means over simulations and their Monte Carlo SEs
    MethodSummary standard_rc; // calibration without the mediator
    MethodSummary expanded_rc; // mediator in calibration, not in outcome
    MethodSummary five_step;
    double oracle_standard = 0.0; // asymptotic mean of standard RC
    double oracle_expanded = 0.0;
    double truth = 0.0; // true total effect
};

MediationStudyResult run_mediation_study(const MediationScenario& sc, std::size_t n_sims);

} // namespace rckit
