#include "rckit/samplesize.hpp"

#include <cmath>

#include "rckit/errors.hpp"
#include "rckit/parallel.hpp"
#include "rckit/rng.hpp"
#include "rckit/stats.hpp"

namespace rckit {

long validation_sample_size(const SampleSizeInputs& in) {
    if (!(in.f > 0.0)) throw InvalidInput("f must be positive");
    if (!(in.alpha > 0.0 && in.alpha < 1.0)) throw InvalidInput("alpha must lie in (0,1)");
    if (!(in.power > 0.0 && in.power < 1.0)) throw InvalidInput("power must lie in (0,1)");
    if (!(in.rho > 0.0 && in.rho <= 1.0)) throw InvalidInput("rho must lie in (0,1]");

    const double z = norm_quantile(1.0 - in.alpha / 2.0) + norm_quantile(in.power);
    const double rho2 = in.rho * in.rho;
    const double value = z * z * (1.0 - rho2) / (in.f * rho2);
    return static_cast<long>(std::ceil(value));
}

PowerTable sample_size_by_simulation(const ScenarioSpec& scenario,
                                     const std::vector<std::size_t>& candidate_n_validation,
                                     std::size_t n_sims, const BootstrapSpec& boot) {
    scenario.validate();
    PowerTable table;
    table.alpha = 1.0 - boot.ci_level;

    for (std::size_t n_val : candidate_n_validation) {
        ScenarioSpec sc = scenario;
        sc.n_validation = n_val;
        // decorrelate grid points
        sc.seed = Rng(scenario.seed, {stream::simulation, n_val}).next_u64();

        std::vector<char> reject(n_sims, 0), failed(n_sims, 0);
        parallel_for(n_sims, [&](std::size_t sim) {
            try {
                AnalysisDataset cohort = gen_cohort(sc, sim);
                CalibrationSpec cal;
                cal.dependent = "xref";
                cal.exposure = "xstar";
                cal.confounders = {"z", "v"};
                OutcomeSpec outcome;
                outcome.outcome = "y";
                outcome.confounders = {"z", "v"};
                outcome.family = sc.family;
                BootstrapSpec bs = boot;
                bs.seed = Rng(boot.seed, {stream::bootstrap, sim, n_val}).next_u64();
                VarianceReport rep = bootstrap_rc(cohort, cal, outcome, bs);
                reject[sim] =
                    rep.ci_bootstrap.first > 0.0 || rep.ci_bootstrap.second < 0.0;
            } catch (const Error&) {
                failed[sim] = 1;
            }
        });

        PowerPoint pt;
        pt.n_validation = n_val;
        pt.n_sims = n_sims;
        double r = 0.0, f = 0.0;
        for (std::size_t i = 0; i < n_sims; ++i) {
            r += reject[i];
            f += failed[i];
        }
        pt.n_failed = static_cast<std::size_t>(f);
        const double n_ok = static_cast<double>(n_sims) - f;
        pt.power = n_ok > 0 ? r / n_ok : 0.0;
        table.points.push_back(pt);
    }
    return table;
}

} // namespace rckit
