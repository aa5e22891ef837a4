#include "rckit/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <nlohmann/json.hpp>

#include "rckit/errors.hpp"
#include "rckit/stats.hpp"

namespace rckit {

using ordered_json = nlohmann::ordered_json;

std::string DependentTransform::label() const {
    switch (kind) {
        case Kind::None: return "none";
        case Kind::Log: return "log";
        case Kind::Spline: return "spline" + std::to_string(spline_knots);
    }
    return "none";
}

double CalibrationModel::exposure_slope(std::size_t basis) const {
    const std::string& label = spec.mode == CalibrationMode::Replicate
                                   ? spec.replicates[1]
                                   : spec.exposure;
    return basis_fits.at(basis).coefficient(label);
}

namespace {

const std::vector<double>& knot_quantiles(int n_knots) {
    static const std::vector<double> q3 = {0.1, 0.5, 0.9};
    static const std::vector<double> q4 = {0.05, 0.35, 0.65, 0.95};
    static const std::vector<double> q5 = {0.05, 0.275, 0.5, 0.725, 0.95};
    switch (n_knots) {
        case 3: return q3;
        case 4: return q4;
        case 5: return q5;
        default:
            throw InvalidInput("spline knot count must be 3, 4 or 5");
    }
}

// Type-7 sample quantile (linear interpolation between order statistics).
double sample_quantile(const std::vector<double>& sorted, double q) {
    const std::size_t n = sorted.size();
    const double h = (static_cast<double>(n) - 1.0) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, n - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

} // namespace

Eigen::MatrixXd spline_basis_at(const std::vector<double>& x,
                                const std::vector<double>& knots) {
    const std::size_t k = knots.size();
    if (k < 3) throw InvalidInput("restricted cubic spline needs at least 3 knots");
    const auto n = static_cast<Eigen::Index>(x.size());
    Eigen::MatrixXd out(n, static_cast<Eigen::Index>(k - 1));
    const double t_last = knots[k - 1];
    const double t_penult = knots[k - 2];
    const double span2 = (t_last - knots[0]) * (t_last - knots[0]);
    auto cube_plus = [](double v) { return v > 0.0 ? v * v * v : 0.0; };

    for (Eigen::Index i = 0; i < n; ++i) {
        const double xi = x[static_cast<std::size_t>(i)];
        out(i, 0) = xi;
        for (std::size_t j = 0; j + 2 < k; ++j) {
            const double tj = knots[j];
            double v = cube_plus(xi - tj) -
                       cube_plus(xi - t_penult) * (t_last - tj) / (t_last - t_penult) +
                       cube_plus(xi - t_last) * (t_penult - tj) / (t_last - t_penult);
            out(i, static_cast<Eigen::Index>(j + 1)) = v / span2;
        }
    }
    return out;
}

SplineBasis spline_basis(const std::vector<double>& x, int n_knots) {
    const auto& quants = knot_quantiles(n_knots);
    std::vector<double> sorted = x;
    std::sort(sorted.begin(), sorted.end());
    std::set<double> distinct(sorted.begin(), sorted.end());
    if (distinct.size() < static_cast<std::size_t>(n_knots))
        throw TooFewDistinctValues("need at least " + std::to_string(n_knots) +
                                   " distinct values for " + std::to_string(n_knots) +
                                   "-knot spline, have " + std::to_string(distinct.size()));
    std::vector<double> knots;
    knots.reserve(quants.size());
    for (double q : quants) knots.push_back(sample_quantile(sorted, q));
    for (std::size_t j = 1; j < knots.size(); ++j)
        if (!(knots[j] > knots[j - 1]))
            throw TooFewDistinctValues("tied sample quantiles produce coincident knots");
    return SplineBasis{spline_basis_at(x, knots), std::move(knots)};
}

namespace {

struct DependentColumns {
    std::vector<std::vector<double>> bases; // one vector per f_k
    std::vector<double> knots;              // spline only
    std::vector<std::string> names;
};

DependentColumns make_dependent(const std::vector<double>& raw, const std::string& base_name,
                                const DependentTransform& tf) {
    DependentColumns out;
    switch (tf.kind) {
        case DependentTransform::Kind::None:
            out.bases.push_back(raw);
            out.names.push_back(base_name + "_hat");
            break;
        case DependentTransform::Kind::Log: {
            std::vector<double> lg(raw.size());
            for (std::size_t i = 0; i < raw.size(); ++i) {
                if (!(raw[i] > 0.0))
                    throw NonPositiveLog("log calibration dependent requires positive values");
                lg[i] = std::log(raw[i]);
            }
            out.bases.push_back(std::move(lg));
            out.names.push_back("log_" + base_name + "_hat");
            break;
        }
        case DependentTransform::Kind::Spline: {
            SplineBasis sb = spline_basis(raw, tf.spline_knots);
            out.knots = sb.knots;
            for (Eigen::Index j = 0; j < sb.columns.cols(); ++j) {
                std::vector<double> col(raw.size());
                for (Eigen::Index i = 0; i < sb.columns.rows(); ++i)
                    col[static_cast<std::size_t>(i)] = sb.columns(i, j);
                out.bases.push_back(std::move(col));
                out.names.push_back(base_name + "_hat_f" + std::to_string(j + 1));
            }
            break;
        }
    }
    return out;
}

std::vector<std::string> fit_predictors(const CalibrationSpec& spec) {
    std::vector<std::string> preds;
    preds.push_back(spec.mode == CalibrationMode::Replicate ? spec.replicates[1]
                                                            : spec.exposure);
    preds.insert(preds.end(), spec.confounders.begin(), spec.confounders.end());
    preds.insert(preds.end(), spec.extras.begin(), spec.extras.end());
    return preds;
}

std::vector<std::string> apply_predictors(const CalibrationSpec& spec) {
    std::vector<std::string> preds;
    preds.push_back(spec.exposure);
    preds.insert(preds.end(), spec.confounders.begin(), spec.confounders.end());
    preds.insert(preds.end(), spec.extras.begin(), spec.extras.end());
    return preds;
}

double r2_of(const Eigen::VectorXd& y, const Eigen::VectorXd& fitted) {
    const double my = y.mean();
    double sse = 0.0, sst = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        sse += (y(i) - fitted(i)) * (y(i) - fitted(i));
        sst += (y(i) - my) * (y(i) - my);
    }
    return sst > 0.0 ? 1.0 - sse / sst : 1.0;
}

} // namespace

CalibrationModel fit_calibration(const AnalysisDataset& validation,
                                 const CalibrationSpec& spec) {
    const std::string dep_col = spec.mode == CalibrationMode::Replicate
                                    ? spec.replicates[0]
                                    : spec.dependent;
    if (spec.mode == CalibrationMode::Replicate &&
        (spec.replicates[0].empty() || spec.replicates[1].empty()))
        throw ConfigError("replicate calibration requires two replicate columns");

    std::vector<std::string> preds = fit_predictors(spec);
    std::vector<std::string> needed = preds;
    needed.push_back(dep_col);
    std::vector<std::size_t> rows = validation.complete_rows(needed);

    DesignMatrix design = build_design(validation, preds, {}, rows);
    if (rows.size() <= static_cast<std::size_t>(design.p()))
        throw InsufficientValidationRows(
            "calibration needs more complete validation rows (" + std::to_string(rows.size()) +
            ") than predictors (" + std::to_string(design.p()) + ")");

    const Column& dep = validation.col(dep_col);
    std::vector<double> raw(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) raw[i] = dep.values[rows[i]];

    DependentColumns dc = make_dependent(raw, spec.exposure.empty() ? dep_col : spec.exposure,
                                         spec.transform);

    CalibrationModel model;
    model.spec = spec;
    model.predictor_labels = design.column_labels;
    model.spline_knots = dc.knots;
    model.output_names = dc.names;
    model.n_fit = rows.size();
    for (auto& basis : dc.bases) {
        Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(
            basis.data(), static_cast<Eigen::Index>(basis.size()));
        GlmFit fit = glm::fit(ModelFamily::Linear, y, design);
        model.r_squared.push_back(r2_of(y, design.values * fit.coefficients));
        model.basis_fits.push_back(std::move(fit));
    }
    return model;
}

CalibrationModel identity_calibration(const std::string& exposure) {
    CalibrationModel model;
    model.spec.mode = CalibrationMode::Reference;
    model.spec.dependent = exposure;
    model.spec.exposure = exposure;
    GlmFit fit;
    fit.family = ModelFamily::Linear;
    fit.coefficients = Eigen::Vector2d(0.0, 1.0);
    fit.vcov_model = Eigen::Matrix2d::Zero();
    fit.column_labels = {"(Intercept)", exposure};
    fit.converged = true;
    fit.n_used = 0;
    model.basis_fits.push_back(std::move(fit));
    model.predictor_labels = {"(Intercept)", exposure};
    model.r_squared.push_back(1.0);
    model.output_names.push_back(exposure + "_hat");
    return model;
}

std::vector<std::vector<double>> calibrate_values(const CalibrationModel& model,
                                                  const AnalysisDataset& cohort,
                                                  const std::vector<std::size_t>& rows) {
    DesignMatrix design = build_design(cohort, apply_predictors(model.spec), {}, rows);
    std::vector<std::vector<double>> out;
    out.reserve(model.n_bases());
    for (const auto& fit : model.basis_fits) {
        Eigen::VectorXd pred = glm::predict(fit, design, PredictScale::LinearPredictor);
        out.emplace_back(pred.data(), pred.data() + pred.size());
    }
    return out;
}

AnalysisDataset calibrate(const CalibrationModel& model, const AnalysisDataset& cohort) {
    auto values = calibrate_values(model, cohort);
    AnalysisDataset out = cohort;
    for (std::size_t k = 0; k < values.size(); ++k) {
        Column c;
        c.name = model.output_names[k];
        c.role = ColumnRole::Plain;
        c.values = std::move(values[k]);
        c.provenance = "calibrated from '" +
                       (model.spec.mode == CalibrationMode::Replicate
                            ? model.spec.replicates[0]
                            : model.spec.dependent) +
                       "' (" + model.spec.transform.label() + ") on predictors incl. '" +
                       model.spec.exposure + "'";
        out.add_column(std::move(c));
    }
    return out;
}

BerksonDiagnostics berkson_check(const CalibrationModel& model,
                                 const AnalysisDataset& sample, bool out_of_sample,
                                 std::size_t basis) {
    const CalibrationSpec& spec = model.spec;
    const std::string dep_col = spec.mode == CalibrationMode::Replicate
                                    ? spec.replicates[0]
                                    : spec.dependent;
    // Residuals are computed against the fitting-side predictors, so the
    // check is exact on the fitting sample.
    std::vector<std::string> preds = fit_predictors(spec);
    std::vector<std::string> needed = preds;
    needed.push_back(dep_col);
    std::vector<std::size_t> rows = sample.complete_rows(needed);
    DesignMatrix design = build_design(sample, preds, {}, rows);

    const Column& dep = sample.col(dep_col);
    std::vector<double> raw(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) raw[i] = dep.values[rows[i]];
    DependentColumns dc = make_dependent(raw, "d", spec.transform);
    if (!model.spline_knots.empty()) {
        // Evaluate with the model's stored knots, not the sample's.
        Eigen::MatrixXd cols = spline_basis_at(raw, model.spline_knots);
        for (std::size_t k = 0; k < dc.bases.size(); ++k)
            for (std::size_t i = 0; i < raw.size(); ++i)
                dc.bases[k][i] = cols(static_cast<Eigen::Index>(i),
                                      static_cast<Eigen::Index>(k));
    }

    const std::vector<double>& target = dc.bases.at(basis);
    Eigen::VectorXd fitted = design.values * model.basis_fits.at(basis).coefficients;
    std::vector<double> resid(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) resid[i] = target[i] - fitted(i);

    BerksonDiagnostics diag;
    diag.n = rows.size();
    diag.out_of_sample = out_of_sample;
    diag.residual_mean = mean(resid);
    for (Eigen::Index j = 1; j < design.p(); ++j) {
        std::vector<double> colv(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i)
            colv[i] = design.values(static_cast<Eigen::Index>(i), j);
        diag.residual_covariate_correlations.emplace_back(design.column_labels[j],
                                                          correlation(resid, colv));
    }
    Eigen::VectorXd yv = Eigen::Map<const Eigen::VectorXd>(
        target.data(), static_cast<Eigen::Index>(target.size()));
    diag.r_squared = r2_of(yv, fitted);
    return diag;
}

ContributionTest covariate_contribution_test(const AnalysisDataset& validation,
                                             const CalibrationSpec& spec,
                                             const std::string& candidate) {
    std::vector<std::string> preds = fit_predictors(spec);
    if (std::find(preds.begin(), preds.end(), candidate) == preds.end())
        throw InvalidInput("candidate '" + candidate + "' is not a calibration predictor");

    const std::string dep_col = spec.mode == CalibrationMode::Replicate
                                    ? spec.replicates[0]
                                    : spec.dependent;
    std::vector<std::string> needed = preds;
    needed.push_back(dep_col);
    std::vector<std::size_t> rows = validation.complete_rows(needed);

    const Column& dep = validation.col(dep_col);
    std::vector<double> raw(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) raw[i] = dep.values[rows[i]];
    DependentColumns dc = make_dependent(raw, "d", spec.transform);
    Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(
        dc.bases[0].data(), static_cast<Eigen::Index>(dc.bases[0].size()));

    DesignMatrix full = build_design(validation, preds, {}, rows);
    std::vector<std::string> reduced_preds;
    for (const auto& p : preds)
        if (p != candidate) reduced_preds.push_back(p);
    DesignMatrix reduced = build_design(validation, reduced_preds, {}, rows);

    GlmFit fit_full = glm::fit(ModelFamily::Linear, y, full);
    GlmFit fit_red = glm::fit(ModelFamily::Linear, y, reduced);

    auto sse_of = [&](const DesignMatrix& d, const GlmFit& f) {
        Eigen::VectorXd r = y - d.values * f.coefficients;
        return r.squaredNorm();
    };
    const double sse_full = sse_of(full, fit_full);
    const double sse_red = sse_of(reduced, fit_red);
    const double q = static_cast<double>(full.p() - reduced.p());
    const double dof = static_cast<double>(full.n() - full.p());

    ContributionTest test;
    test.candidate = candidate;
    test.f_statistic = ((sse_red - sse_full) / q) / (sse_full / dof);
    test.p_value = f_survival(test.f_statistic, q, dof);
    test.delta_r_squared =
        r2_of(y, full.values * fit_full.coefficients) -
        r2_of(y, reduced.values * fit_red.coefficients);
    return test;
}

std::string calibration_to_json(const CalibrationModel& model) {
    ordered_json j;
    j["mode"] = model.spec.mode == CalibrationMode::Replicate ? "replicate" : "reference";
    j["dependent"] = model.spec.dependent;
    j["replicates"] = {model.spec.replicates[0], model.spec.replicates[1]};
    j["exposure"] = model.spec.exposure;
    j["confounders"] = model.spec.confounders;
    j["extras"] = model.spec.extras;
    j["transform"] = model.spec.transform.label();
    j["predictor_labels"] = model.predictor_labels;
    j["spline_knots"] = model.spline_knots;
    j["output_names"] = model.output_names;
    j["r_squared"] = model.r_squared;
    j["n_fit"] = model.n_fit;
    j["basis_coefficients"] = ordered_json::array();
    for (const auto& fit : model.basis_fits) {
        std::vector<double> coef(fit.coefficients.data(),
                                 fit.coefficients.data() + fit.coefficients.size());
        j["basis_coefficients"].push_back(coef);
    }
    return j.dump(2);
}

CalibrationModel calibration_from_json(const std::string& json_text) {
    ordered_json j;
    try {
        j = ordered_json::parse(json_text);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("calibration model JSON: ") + e.what());
    }
    CalibrationModel model;
    model.spec.mode = j.at("mode").get<std::string>() == "replicate"
                          ? CalibrationMode::Replicate
                          : CalibrationMode::Reference;
    model.spec.dependent = j.at("dependent").get<std::string>();
    auto reps = j.at("replicates").get<std::vector<std::string>>();
    if (reps.size() == 2) model.spec.replicates = {reps[0], reps[1]};
    model.spec.exposure = j.at("exposure").get<std::string>();
    model.spec.confounders = j.at("confounders").get<std::vector<std::string>>();
    model.spec.extras = j.at("extras").get<std::vector<std::string>>();
    const std::string tf = j.at("transform").get<std::string>();
    if (tf == "none") model.spec.transform = DependentTransform::none();
    else if (tf == "log") model.spec.transform = DependentTransform::log();
    else if (tf.rfind("spline", 0) == 0)
        model.spec.transform = DependentTransform::spline(std::stoi(tf.substr(6)));
    else throw ConfigError("unknown transform tag: " + tf);
    model.predictor_labels = j.at("predictor_labels").get<std::vector<std::string>>();
    model.spline_knots = j.at("spline_knots").get<std::vector<double>>();
    model.output_names = j.at("output_names").get<std::vector<std::string>>();
    model.r_squared = j.at("r_squared").get<std::vector<double>>();
    model.n_fit = j.at("n_fit").get<std::size_t>();
    for (const auto& coefs : j.at("basis_coefficients")) {
        auto v = coefs.get<std::vector<double>>();
        GlmFit fit;
        fit.family = ModelFamily::Linear;
        fit.coefficients = Eigen::Map<const Eigen::VectorXd>(
            v.data(), static_cast<Eigen::Index>(v.size()));
        fit.vcov_model = Eigen::MatrixXd::Zero(fit.coefficients.size(),
                                               fit.coefficients.size());
        fit.column_labels = model.predictor_labels;
        fit.converged = true;
        model.basis_fits.push_back(std::move(fit));
    }
    return model;
}

} // namespace rckit
