#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "rckit/dataset.hpp"
#include "rckit/glm.hpp"

namespace rckit {

enum class CalibrationMode { Reference, Replicate };

// How the calibration dependent variable is formed from the reference
// column. The outcome model's exposure scale dictates this choice: the
// dependent is built on that scale directly, never transformed afterwards.
struct DependentTransform {
    enum class Kind { None, Log, Spline } kind = Kind::None;
    int spline_knots = 0; // 3..5 when kind == Spline

    static DependentTransform none() { return {}; }
    static DependentTransform log() { return {Kind::Log, 0}; }
    static DependentTransform spline(int knots) { return {Kind::Spline, knots}; }
    std::string label() const;
};

struct CalibrationSpec {
    CalibrationMode mode = CalibrationMode::Reference;
    // Reference mode: the X or X** column regressed on the predictors.
    std::string dependent;
    // Replicate mode: the first replicate is the dependent, the second
    // stands in for the exposure on the right-hand side.
    std::array<std::string, 2> replicates{};
    // Error-prone exposure column as it appears in the cohort.
    std::string exposure;
    std::vector<std::string> confounders; // Z
    std::vector<std::string> extras;      // Z~: calibration-only covariates
    DependentTransform transform;
};

// Fitted calibration equation(s). One linear-family fit per dependent basis
// function; a plain or log dependent has a single basis, a spline dependent
// has n_knots - 1.
struct CalibrationModel {
    CalibrationSpec spec;
    std::vector<GlmFit> basis_fits;
    std::vector<std::string> predictor_labels; // design labels incl. intercept
    std::vector<double> r_squared;             // per basis
    std::vector<double> spline_knots;          // empty unless spline transform
    std::vector<std::string> output_names;     // calibrated column names
    std::size_t n_fit = 0;                     // validation rows used

    std::size_t n_bases() const { return basis_fits.size(); }
    // Coefficient of the exposure predictor in the given basis fit.
    double exposure_slope(std::size_t basis = 0) const;
};

struct BerksonDiagnostics {
    double residual_mean = 0.0;
    // One (label, correlation) entry per non-intercept predictor.
    std::vector<std::pair<std::string, double>> residual_covariate_correlations;
    double r_squared = 0.0;
    std::size_t n = 0;
    bool out_of_sample = false;
};

struct SplineBasis {
    Eigen::MatrixXd columns; // n x (n_knots - 1); first column is x itself
    std::vector<double> knots;
};

struct ContributionTest {
    std::string candidate;
    double f_statistic = 0.0;
    double p_value = 1.0;
    double delta_r_squared = 0.0; // R2(full) - R2(without candidate)
};

// Restricted cubic spline basis with knots at conventional sample quantiles
// (0.1/0.5/0.9 for 3 knots, 0.05/0.35/0.65/0.95 for 4,
// 0.05/0.275/0.5/0.725/0.95 for 5). Basis is linear beyond the boundary
// knots; terms are scaled by the squared boundary-knot span.
SplineBasis spline_basis(const std::vector<double>& x, int n_knots);
// Evaluate the same basis at new points given stored knots.
Eigen::MatrixXd spline_basis_at(const std::vector<double>& x,
                                const std::vector<double>& knots);

// Least-squares calibration equation(s) fit on the validation subset.
// Reference mode regresses f_k(dependent) on (exposure, Z, extras);
// replicate mode regresses f_k(first replicate) on (second replicate, Z,
// extras), which estimates the same population equation when the exposure
// is unbiased with independent error.
CalibrationModel fit_calibration(const AnalysisDataset& validation,
                                 const CalibrationSpec& spec);

// Identity equation X_hat = X*: used to compare against naive fits and for
// zero-measurement-error pipelines.
CalibrationModel identity_calibration(const std::string& exposure);

// Appends the calibrated column(s) to a copy of the cohort. Column names
// come from the model's output_names; provenance records the equation.
AnalysisDataset calibrate(const CalibrationModel& model, const AnalysisDataset& cohort);

// Calibrated values only (per basis), without building a dataset.
std::vector<std::vector<double>> calibrate_values(const CalibrationModel& model,
                                                  const AnalysisDataset& cohort,
                                                  const std::vector<std::size_t>& rows = {});

// Residual diagnostics of the Berkson decomposition X = X_hat + U on the
// given sample: mean(U) and corr(U, each predictor). Exactly zero (to
// rounding) on the fitting sample; generally nonzero out of sample.
BerksonDiagnostics berkson_check(const CalibrationModel& model,
                                 const AnalysisDataset& sample,
                                 bool out_of_sample = false,
                                 std::size_t basis = 0);

// Partial F-test for one predictor of the calibration equation, plus the
// R-squared drop from removing it (first basis when the dependent is a
// spline).
ContributionTest covariate_contribution_test(const AnalysisDataset& validation,
                                             const CalibrationSpec& spec,
                                             const std::string& candidate);

// JSON round-trip so calibration and outcome analysis can run as separate
// CLI invocations.
std::string calibration_to_json(const CalibrationModel& model);
CalibrationModel calibration_from_json(const std::string& json_text);

} // namespace rckit
