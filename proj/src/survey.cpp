#include "rckit/survey.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "rckit/errors.hpp"
#include "rckit/parallel.hpp"
#include "rckit/rng.hpp"
#include "rckit/stats.hpp"

namespace rckit {

void SurveyDesign::validate() const {
    if (stratum.size() != weight.size() || psu.size() != weight.size())
        throw DimensionMismatch("survey design vectors differ in length");
    std::map<int, std::map<int, int>> psus_by_stratum;
    for (std::size_t i = 0; i < n(); ++i) {
        if (!(weight[i] > 0.0)) throw InvalidInput("survey weights must be positive");
        psus_by_stratum[stratum[i]][psu[i]]++;
    }
    for (const auto& [h, psus] : psus_by_stratum)
        if (psus.size() < 2)
            throw SingletonStratum("stratum " + std::to_string(h) +
                                   " has a single PSU; variance is not estimable");
}

SurveyDesign survey_design_from(const AnalysisDataset& ds) {
    auto s = ds.column_with_role(ColumnRole::SurveyStratum);
    auto p = ds.column_with_role(ColumnRole::SurveyPsu);
    auto w = ds.column_with_role(ColumnRole::SurveyWeight);
    if (!s || !p || !w)
        throw ConfigError("survey analysis needs SurveyStratum, SurveyPsu and "
                          "SurveyWeight role columns");
    SurveyDesign d;
    const std::size_t n = ds.n_rows();
    d.stratum.resize(n);
    d.psu.resize(n);
    d.weight.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        d.stratum[i] = static_cast<int>(ds.col(*s).values[i]);
        d.psu[i] = static_cast<int>(ds.col(*p).values[i]);
        d.weight[i] = ds.col(*w).values[i];
    }
    d.validate();
    return d;
}

ReplicateWeightSet make_replicate_weights(const SurveyDesign& design, std::size_t n_replicates,
                                          std::uint64_t seed) {
    design.validate();
    const std::size_t n = design.n();

    // stratum -> ordered list of PSU ids (first appearance), and per-row PSU
    // position within its stratum
    std::map<int, std::vector<int>> psu_list;
    std::vector<std::size_t> psu_pos(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto& list = psu_list[design.stratum[i]];
        auto it = std::find(list.begin(), list.end(), design.psu[i]);
        if (it == list.end()) {
            list.push_back(design.psu[i]);
            psu_pos[i] = list.size() - 1;
        } else {
            psu_pos[i] = static_cast<std::size_t>(it - list.begin());
        }
    }
    std::vector<int> strata;
    for (const auto& [h, list] : psu_list) strata.push_back(h);

    ReplicateWeightSet set;
    set.seed = seed;
    set.weights.assign(n_replicates, std::vector<double>(n, 0.0));

    parallel_for(n_replicates, [&](std::size_t r) {
        Rng rng(seed, {stream::survey_weights, r});
        std::map<int, std::vector<double>> multiplier; // per stratum, per PSU position
        // Draw order follows the sorted stratum ids, so the stream is
        // independent of row order.
        for (int h : strata) {
            const std::size_t n_h = psu_list[h].size();
            std::vector<double> mult(n_h, 0.0);
            for (std::size_t d = 0; d + 1 < n_h; ++d)
                mult[rng.uniform_int(n_h)] += 1.0;
            const double rescale =
                static_cast<double>(n_h) / static_cast<double>(n_h - 1);
            for (auto& m : mult) m *= rescale;
            multiplier[h] = std::move(mult);
        }
        for (std::size_t i = 0; i < n; ++i)
            set.weights[r][i] = design.weight[i] * multiplier[design.stratum[i]][psu_pos[i]];
    });
    return set;
}

void adjust_replicate_weights(ReplicateWeightSet& set, const std::vector<double>& factors) {
    for (auto& rep : set.weights) {
        if (rep.size() != factors.size())
            throw DimensionMismatch("adjustment factor length != row count");
        for (std::size_t i = 0; i < rep.size(); ++i) rep[i] *= factors[i];
    }
}

void write_replicate_weights_csv(const ReplicateWeightSet& set, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write file: " + path);
    const std::size_t rcount = set.n_replicates();
    for (std::size_t r = 0; r < rcount; ++r) {
        if (r) out << ',';
        out << 'w' << (r + 1);
    }
    out << '\n';
    if (rcount == 0) return;
    const std::size_t n = set.weights[0].size();
    char buf[32];
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t r = 0; r < rcount; ++r) {
            if (r) out << ',';
            auto res = std::to_chars(buf, buf + sizeof buf, set.weights[r][i]);
            out.write(buf, res.ptr - buf);
        }
        out << '\n';
    }
}

ReplicateWeightSet read_replicate_weights_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw MalformedCsv("replicate weight file has no header");
    std::size_t rcount = std::count(line.begin(), line.end(), ',') + 1;
    ReplicateWeightSet set;
    set.method = "imported";
    set.weights.assign(rcount, {});
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::size_t r = 0;
        while (std::getline(ss, cell, ',')) {
            if (r >= rcount) throw MalformedCsv("ragged replicate weight row");
            double v = 0.0;
            auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (ec != std::errc{} || ptr != cell.data() + cell.size())
                throw MalformedCsv("non-numeric replicate weight '" + cell + "'");
            set.weights[r].push_back(v);
            ++r;
        }
        if (r != rcount) throw MalformedCsv("ragged replicate weight row");
    }
    return set;
}

namespace {

double weighted_exposure_estimate(const AnalysisDataset& calibrated,
                                  const std::vector<std::string>& exposure_columns,
                                  const OutcomeSpec& outcome,
                                  const std::vector<double>& weights, GlmFit* fit_out) {
    std::vector<std::string> covariates = exposure_columns;
    covariates.insert(covariates.end(), outcome.confounders.begin(),
                      outcome.confounders.end());
    std::vector<std::string> needed = covariates;
    needed.push_back(outcome.outcome);
    std::vector<std::size_t> rows = calibrated.complete_rows(needed);

    DesignMatrix design = build_design(calibrated, covariates, {}, rows);
    const Column& yc = calibrated.col(outcome.outcome);
    Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
    Eigen::VectorXd w(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        y(static_cast<Eigen::Index>(i)) = yc.values[rows[i]];
        w(static_cast<Eigen::Index>(i)) = weights[rows[i]];
    }
    GlmFit fit = glm::fit(outcome.family, y, design, w);
    const double est = fit.coefficients(1);
    if (fit_out) *fit_out = std::move(fit);
    return est;
}

} // namespace

SurveyRcFit survey_rc_fit(const AnalysisDataset& cohort, const SurveyDesign& design,
                          const ReplicateWeightSet& replicate_weights,
                          const CalibrationModel& model, const OutcomeSpec& outcome) {
    design.validate();
    if (design.n() != cohort.n_rows())
        throw DimensionMismatch("survey design length != cohort rows");

    AnalysisDataset calibrated = calibrate(model, cohort);
    SurveyRcFit out;
    out.estimate = weighted_exposure_estimate(calibrated, model.output_names, outcome,
                                              design.weight, &out.base_fit);

    const std::size_t rcount = replicate_weights.n_replicates();
    std::vector<double> reps(rcount, std::numeric_limits<double>::quiet_NaN());
    parallel_for(rcount, [&](std::size_t r) {
        try {
            reps[r] = weighted_exposure_estimate(calibrated, model.output_names, outcome,
                                                 replicate_weights.weights[r], nullptr);
        } catch (const Error&) {
        }
    });

    for (double e : reps)
        if (!std::isnan(e)) out.replicate_estimates.push_back(e);
    out.n_failed_replicates = rcount - out.replicate_estimates.size();
    if (out.n_failed_replicates > rcount / 20)
        throw TooManyFailedReplicates("more than 5% of replicate-weight fits failed");

    // 1/(R-1) variance about the 1/R replicate mean.
    out.se_replicate = sd(out.replicate_estimates);
    return out;
}

MiPooledEstimate mi_rc_pipeline(const AnalysisDataset& cohort, const AnalysisDataset& validation,
                                const CalibrationSpec& cal_spec, const OutcomeSpec& outcome,
                                const SurveyDesign& design, const MiOptions& options) {
    if (options.n_imputations < 2)
        throw InvalidInput("multiple imputation needs M >= 2 (the between-imputation "
                           "variance is undefined for M = 1)");
    design.validate();

    ReplicateWeightSet weights =
        make_replicate_weights(design, options.n_replicates, options.seed);

    // Stratify validation resampling on reliability-replicate membership
    // when a second replicate column exists: rows with both replicates keep
    // their representation in every resample.
    std::vector<std::size_t> with_second, without_second;
    {
        auto reps = validation.columns_with_role(ColumnRole::ReferenceReplicate);
        if (reps.size() == 2) {
            const Column& second = validation.col(reps[1]);
            for (std::size_t i = 0; i < validation.n_rows(); ++i)
                (second.is_missing(i) ? without_second : with_second).push_back(i);
        } else {
            for (std::size_t i = 0; i < validation.n_rows(); ++i) with_second.push_back(i);
        }
    }

    MiPooledEstimate out;
    out.robust = options.robust;
    out.rubin_factor = options.rubin_factor;
    out.seed = options.seed;
    out.n_imputations = options.n_imputations;
    out.n_replicates = options.n_replicates;
    out.beta_m.assign(options.n_imputations, 0.0);
    out.v_m.assign(options.n_imputations, 0.0);

    parallel_for(options.n_imputations, [&](std::size_t m) {
        Rng rng(options.seed, {stream::imputation, m});
        std::vector<std::size_t> rows;
        rows.reserve(validation.n_rows());
        for (const auto* grp : {&with_second, &without_second}) {
            const std::size_t g = grp->size();
            for (std::size_t i = 0; i < g; ++i) rows.push_back((*grp)[rng.uniform_int(g)]);
        }
        AnalysisDataset val_m = validation.subset(rows);
        CalibrationModel model_m = fit_calibration(val_m, cal_spec);
        SurveyRcFit fit = survey_rc_fit(cohort, design, weights, model_m, outcome);
        out.beta_m[m] = fit.estimate;
        out.v_m[m] = fit.se_replicate * fit.se_replicate;
    });

    const double m_count = static_cast<double>(options.n_imputations);
    if (options.robust) {
        // median / scaled-MAD pooling for numerical stability
        out.beta_pooled = median(out.beta_m);
        const double between = mad(out.beta_m);
        double factor = options.rubin_factor ? 1.0 + 1.0 / m_count : 1.0;
        out.v_pooled = median(out.v_m) + factor * between * between;
    } else {
        out.beta_pooled = mean(out.beta_m);
        double within = mean(out.v_m);
        double between = 0.0;
        for (double b : out.beta_m)
            between += (b - out.beta_pooled) * (b - out.beta_pooled);
        between /= (m_count - 1.0);
        double factor = options.rubin_factor ? 1.0 + 1.0 / m_count : 1.0;
        out.v_pooled = within + factor * between;
    }
    return out;
}

} // namespace rckit
