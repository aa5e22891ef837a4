#pragma once

// Test-side generator for a stratified two-stage cluster sample with an
// internal validation subset: covariates share PSU-level components, the
// self-report follows a linear measurement model, the biomarker has
// classical error, and base weights vary by stratum. Y is a correctly
// specified logistic outcome given (X, Z), so the survey-weighted estimand
// equals b1 and coverage can be assessed against it.

#include <cmath>
#include <vector>

#include "rckit/dataset.hpp"
#include "rckit/glm.hpp"
#include "rckit/rng.hpp"

namespace rckit::testgen {

struct SurveyScenario {
    std::size_t n_strata = 10;
    std::size_t psus_per_stratum = 6;
    std::size_t rows_per_psu = 20;
    double psu_sd = 0.5;       // PSU-level covariate shift (shared by X and Z)
    double within_sd = 0.866;  // within-PSU covariate noise
    double b0 = -1.0;
    double b1 = 0.405465;      // log 1.5
    double b2 = -0.262364;     // -log 1.3
    double a0 = 0.4, a1 = 0.5, a2 = 0.5;
    double sigma_eps = 0.7;    // measurement noise sd
    double sigma_delta = 0.6;  // biomarker error sd
    double validation_fraction = 0.25;
    // outcome-level PSU random intercept; zero keeps the marginal model
    // correctly specified (estimand = b1), positive induces a design effect
    double outcome_psu_sd = 0.0;
    std::uint64_t seed = 1;

    std::size_t n() const { return n_strata * psus_per_stratum * rows_per_psu; }
};

inline AnalysisDataset gen_survey_cohort(const SurveyScenario& sc, std::size_t sim_index) {
    const std::size_t n = sc.n();
    std::vector<double> y(n), x(n), z(n), xstar(n), xref(n), flag(n);
    std::vector<double> stratum(n), psu(n), weight(n);

    Rng rng(sc.seed, {0x5EED, sim_index});
    std::size_t row = 0;
    for (std::size_t h = 0; h < sc.n_strata; ++h) {
        // unequal but noninformative base weights by stratum
        const double w_h = 1.0 + static_cast<double>(h % 4);
        for (std::size_t p = 0; p < sc.psus_per_stratum; ++p) {
            const double ux = sc.psu_sd * rng.normal();
            const double uz = sc.psu_sd * rng.normal();
            const double uy = sc.outcome_psu_sd * rng.normal();
            for (std::size_t k = 0; k < sc.rows_per_psu; ++k, ++row) {
                x[row] = ux + sc.within_sd * rng.normal();
                z[row] = 0.5 * x[row] + uz + 0.8 * rng.normal();
                xstar[row] = sc.a0 + sc.a1 * x[row] + sc.a2 * z[row] +
                             sc.sigma_eps * rng.normal();
                xref[row] = x[row] + sc.sigma_delta * rng.normal();
                const double eta = sc.b0 + sc.b1 * x[row] + sc.b2 * z[row] + uy;
                y[row] = rng.bernoulli(glm::expit(eta)) ? 1.0 : 0.0;
                flag[row] = rng.bernoulli(sc.validation_fraction) ? 1.0 : 0.0;
                if (flag[row] == 0.0) xref[row] = std::nan("");
                stratum[row] = static_cast<double>(h);
                psu[row] = static_cast<double>(p);
                weight[row] = w_h;
            }
        }
    }

    AnalysisDataset ds;
    auto add = [&](const char* name, ColumnRole role, std::vector<double>&& vals) {
        Column c;
        c.name = name;
        c.role = role;
        c.values = std::move(vals);
        ds.add_column(std::move(c));
    };
    add("y", ColumnRole::Outcome, std::move(y));
    add("x_true", ColumnRole::Plain, std::move(x));
    add("z", ColumnRole::Confounder, std::move(z));
    add("xstar", ColumnRole::ErrorProneExposure, std::move(xstar));
    add("xref", ColumnRole::ReferenceMeasure, std::move(xref));
    add("validation", ColumnRole::ValidationFlag, std::move(flag));
    add("stratum", ColumnRole::SurveyStratum, std::move(stratum));
    add("psu", ColumnRole::SurveyPsu, std::move(psu));
    add("weight", ColumnRole::SurveyWeight, std::move(weight));
    return ds;
}

} // namespace rckit::testgen
