#include "swedge/simharness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <thread>

#include "swedge/rng.hpp"

namespace swedge {

AnalysisSpec AnalysisSpec::lmm(const ModelSpec& spec) {
    AnalysisSpec a;
    a.label = spec.label();
    a.is_mec = false;
    a.model = spec;
    return a;
}

AnalysisSpec AnalysisSpec::mec(const MecPrior& prior, const MecOptions& mcmc,
                               const std::string& label) {
    AnalysisSpec a;
    a.label = label;
    a.is_mec = true;
    a.prior = prior;
    a.mcmc = mcmc;
    return a;
}

std::string EstimandRequest::label() const {
    std::string s = spec.label();
    if (method == RiemannMethod::Trapezoid) s += ":trap";
    return s;
}

MetricSummary metrics(const std::vector<EstimandEstimate>& estimates, double truth) {
    if (estimates.empty())
        throw std::domain_error("metrics: estimate list is empty");
    const int n = static_cast<int>(estimates.size());
    MetricSummary m;
    m.n = n;
    m.truth = truth;

    double sum = 0.0, sum_sq_err = 0.0;
    int covered = 0, rejected = 0;
    for (const EstimandEstimate& e : estimates) {
        sum += e.estimate;
        const double err = e.estimate - truth;
        sum_sq_err += err * err;
        if (e.ci_lo <= truth && truth <= e.ci_hi) ++covered;
        if (e.p < 0.05) ++rejected;
    }
    m.mean_estimate = sum / n;
    m.bias = m.mean_estimate - truth;
    m.mse = sum_sq_err / n;
    m.coverage = static_cast<double>(covered) / n;
    m.power = static_cast<double>(rejected) / n;

    double var_est = 0.0, var_sq = 0.0;
    for (const EstimandEstimate& e : estimates) {
        const double d = e.estimate - m.mean_estimate;
        var_est += d * d;
        const double err = e.estimate - truth;
        const double dq = err * err - m.mse;
        var_sq += dq * dq;
    }
    const double denom = std::max(n - 1, 1);
    m.bias_mcse = std::sqrt(var_est / denom / n);
    m.mse_mcse = std::sqrt(var_sq / denom / n);
    m.coverage_mcse = std::sqrt(m.coverage * (1.0 - m.coverage) / n);
    m.power_mcse = std::sqrt(m.power * (1.0 - m.power) / n);
    return m;
}

const MetricSummary& SimResult::cell(const std::string& model,
                                     const std::string& estimand) const {
    for (const SimCell& c : cells)
        if (c.model == model && c.estimand == estimand) return c.summary;
    throw std::out_of_range("no simulation cell for model '" + model +
                            "', estimand '" + estimand + "'");
}

const ModelAggregate& SimResult::aggregate(const std::string& model) const {
    for (const ModelAggregate& a : models)
        if (a.model == model) return a;
    throw std::out_of_range("no aggregate for model '" + model + "'");
}

namespace {

struct RepOutcome {
    std::vector<char> ok;                            // per analysis
    std::vector<std::vector<EstimandEstimate>> est;  // [analysis][estimand]
    std::vector<double> pointwise;                   // per analysis
};

void run_replicate(const SimScenario& sc, int rep, RepOutcome& out) {
    const int n_an = static_cast<int>(sc.analyses.size());
    const int S = sc.design.max_exposure();
    out.ok.assign(static_cast<std::size_t>(n_an), 0);
    out.est.assign(static_cast<std::size_t>(n_an), {});
    out.pointwise.assign(static_cast<std::size_t>(n_an), 0.0);

    const std::uint64_t data_seed =
        derive_seed(sc.seed, 0xDA7AULL, static_cast<std::uint64_t>(rep));
    const TrialDataset data = generate(sc.design, sc.params, data_seed);
    const CollapsedData cd = collapse(data);

    for (int a = 0; a < n_an; ++a) {
        const AnalysisSpec& an = sc.analyses[static_cast<std::size_t>(a)];
        try {
            std::vector<EstimandEstimate> ests;
            std::vector<CurvePoint> curve_pts;
            if (an.is_mec) {
                MecOptions opts = an.mcmc;
                opts.seed = derive_seed(sc.seed, 0x6D6563ULL,
                                        static_cast<std::uint64_t>(rep),
                                        static_cast<std::uint64_t>(a));
                const MecDraws draws = fit_mec(data, an.prior, opts);
                for (const EstimandRequest& req : sc.estimands)
                    ests.push_back(mec_estimands(draws, req.spec, req.method, 0.95));
                curve_pts = mec_effect_curve(draws, 0.95);
            } else {
                const FittedModel fm = fit_collapsed(cd, an.model);
                for (const EstimandRequest& req : sc.estimands)
                    ests.push_back(estimate(fm, req.spec, req.method));
                curve_pts = effect_curve_estimate(fm);
            }
            double pw = 0.0;
            for (const CurvePoint& pt : curve_pts) {
                const double truth_s = sc.params.delta * sc.params.curve.at(pt.s);
                pw += (pt.estimate - truth_s) * (pt.estimate - truth_s);
            }
            out.pointwise[static_cast<std::size_t>(a)] = pw / S;
            out.est[static_cast<std::size_t>(a)] = std::move(ests);
            out.ok[static_cast<std::size_t>(a)] = 1;
        } catch (const std::exception&) {
            out.ok[static_cast<std::size_t>(a)] = 0;
        }
    }
}

}  // namespace

SimResult run_scenario(const SimScenario& scenario, int parallelism) {
    if (scenario.replicates < 1)
        throw std::domain_error("simulation: replicates must be >= 1");
    if (scenario.analyses.empty())
        throw std::domain_error("simulation: no analyses requested");
    if (scenario.estimands.empty())
        throw std::domain_error("simulation: no estimands requested");
    scenario.params.validate(scenario.design);

    const int R = scenario.replicates;
    std::vector<RepOutcome> outcomes(static_cast<std::size_t>(R));
    const int workers = std::max(1, std::min(parallelism, R));
    if (workers == 1) {
        for (int r = 0; r < R; ++r)
            run_replicate(scenario, r, outcomes[static_cast<std::size_t>(r)]);
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        for (int t = 0; t < workers; ++t)
            pool.emplace_back([&]() {
                for (;;) {
                    const int r = next.fetch_add(1);
                    if (r >= R) return;
                    run_replicate(scenario, r, outcomes[static_cast<std::size_t>(r)]);
                }
            });
        for (std::thread& th : pool) th.join();
    }

    SimResult result;
    result.scenario = scenario.name;
    result.curve = scenario.params.curve.label;
    result.replicates = R;
    const int S = scenario.design.max_exposure();
    const int n_an = static_cast<int>(scenario.analyses.size());
    const int n_es = static_cast<int>(scenario.estimands.size());

    for (int a = 0; a < n_an; ++a) {
        const AnalysisSpec& an = scenario.analyses[static_cast<std::size_t>(a)];
        int n_ok = 0;
        double pw_sum = 0.0;
        for (const RepOutcome& ro : outcomes)
            if (ro.ok[static_cast<std::size_t>(a)]) {
                ++n_ok;
                pw_sum += ro.pointwise[static_cast<std::size_t>(a)];
            }
        if (n_ok == 0)
            throw EstimationError("all replicates failed for analysis '" +
                                  an.label + "'");
        ModelAggregate agg;
        agg.model = an.label;
        agg.n_fail = R - n_ok;
        agg.avg_pointwise_mse = pw_sum / n_ok;
        result.models.push_back(agg);

        for (int e = 0; e < n_es; ++e) {
            const EstimandRequest& req = scenario.estimands[static_cast<std::size_t>(e)];
            std::vector<EstimandEstimate> ests;
            ests.reserve(static_cast<std::size_t>(n_ok));
            for (const RepOutcome& ro : outcomes)
                if (ro.ok[static_cast<std::size_t>(a)])
                    ests.push_back(ro.est[static_cast<std::size_t>(a)][static_cast<std::size_t>(e)]);
            const double truth = true_estimand(scenario.params.curve,
                                               scenario.params.delta, req.spec,
                                               req.method, S);
            SimCell cell;
            cell.model = an.label;
            cell.estimand = req.label();
            cell.summary = metrics(ests, truth);
            result.cells.push_back(cell);
        }
    }
    return result;
}

// ---- scenario catalog ----

namespace {

GenParams base_params(const StudyDesign& design, CurveKind kind) {
    GenParams p;
    p.mu = 1.0;
    p.delta = 0.5;
    p.sigma = 2.0;
    p.tau = 0.5;
    p.period_effects = linear_time_trend(design.num_periods(), -0.5);
    p.curve = canonical_curve(kind, design.max_exposure());
    return p;
}

std::vector<EstimandRequest> default_estimands() {
    std::vector<EstimandRequest> out;
    out.push_back({EstimandSpec::tate(0, 6), RiemannMethod::Right});
    out.push_back({EstimandSpec::lte(), RiemannMethod::Right});
    return out;
}

}  // namespace

std::vector<std::string> catalog_names() {
    return {"base", "reti", "extra", "rte", "dirichlet"};
}

std::vector<SimScenario> catalog_scenarios(const std::string& study,
                                           const std::vector<CurveKind>& curves,
                                           int replicates, std::uint64_t seed) {
    std::vector<SimScenario> out;
    const StudyDesign base = standard_design(6, 4, 20, 0);
    int variant = 0;
    for (CurveKind kind : curves) {
        if (study == "base") {
            SimScenario sc;
            sc.name = "base";
            sc.design = base;
            sc.params = base_params(base, kind);
            sc.analyses.push_back(AnalysisSpec::lmm(ModelSpec::it()));
            sc.analyses.push_back(AnalysisSpec::lmm(ModelSpec::eti()));
            sc.analyses.push_back(AnalysisSpec::lmm(ModelSpec::ncs(4)));
            MecOptions mcmc;
            sc.analyses.push_back(
                AnalysisSpec::mec(MecPrior::informative(6), mcmc, "mec"));
            sc.estimands = default_estimands();
            sc.replicates = replicates;
            sc.seed = derive_seed(seed, static_cast<std::uint64_t>(variant));
            out.push_back(sc);
        } else if (study == "reti") {
            SimScenario sc;
            sc.name = "reti";
            sc.design = base;
            sc.params = base_params(base, kind);
            sc.analyses.push_back(AnalysisSpec::lmm(ModelSpec::eti()));
            sc.analyses.push_back(AnalysisSpec::lmm(ModelSpec::reti(3)));
            sc.analyses.push_back(AnalysisSpec::lmm(ModelSpec::reti(4)));
            sc.estimands = default_estimands();
            sc.replicates = replicates;
            sc.seed = derive_seed(seed, static_cast<std::uint64_t>(variant));
            out.push_back(sc);
        } else if (study == "extra") {
            for (int extra = 0; extra <= 2; ++extra) {
                SimScenario sc;
                sc.name = "extra+" + std::to_string(extra);
                sc.design = standard_design(6, 4, 20, extra);
                sc.params = base_params(sc.design, kind);
                sc.analyses.push_back(AnalysisSpec::lmm(ModelSpec::eti()));
                sc.estimands.push_back({EstimandSpec::tate(0, 6), RiemannMethod::Right});
                // The long-term effect is pinned at exposure 6 (the flattening
                // point) so designs with extra periods target the same value.
                sc.estimands.push_back({EstimandSpec::pte(6), RiemannMethod::Right});
                sc.replicates = replicates;
                sc.seed = derive_seed(seed, static_cast<std::uint64_t>(variant),
                                      static_cast<std::uint64_t>(extra));
                out.push_back(sc);
            }
        } else if (study == "rte") {
            SimScenario sc;
            sc.name = "rte";
            sc.design = base;
            sc.params = base_params(base, kind);
            sc.params.nu = 1.0;
            sc.params.rho = -0.2;
            ModelSpec eti_rte = ModelSpec::eti();
            eti_rte.random_treatment = true;
            sc.analyses.push_back(AnalysisSpec::lmm(ModelSpec::eti()));
            sc.analyses.push_back(AnalysisSpec::lmm(eti_rte));
            sc.estimands = default_estimands();
            sc.replicates = replicates;
            sc.seed = derive_seed(seed, static_cast<std::uint64_t>(variant));
            out.push_back(sc);
        } else if (study == "dirichlet") {
            SimScenario sc;
            sc.name = "dirichlet";
            sc.design = base;
            sc.params = base_params(base, kind);
            MecOptions mcmc;
            sc.analyses.push_back(
                AnalysisSpec::mec(MecPrior::informative(6), mcmc, "mec"));
            sc.analyses.push_back(
                AnalysisSpec::mec(MecPrior::symmetric(6), mcmc, "mec-sym"));
            sc.estimands = default_estimands();
            sc.replicates = replicates;
            sc.seed = derive_seed(seed, static_cast<std::uint64_t>(variant));
            out.push_back(sc);
        } else {
            throw std::invalid_argument("unknown study '" + study + "'");
        }
        ++variant;
    }
    return out;
}

void write_results_csv(const std::vector<SimResult>& results,
                       const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << "scenario,curve,model,estimand,bias,bias_mcse,coverage,mse,power,"
           "avg_pointwise_mse,n_fail\n";
    char buf[512];
    for (const SimResult& res : results) {
        for (const SimCell& c : res.cells) {
            const ModelAggregate& agg = res.aggregate(c.model);
            std::snprintf(buf, sizeof(buf),
                          "%s,%s,%s,%s,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d\n",
                          res.scenario.c_str(), res.curve.c_str(), c.model.c_str(),
                          c.estimand.c_str(), c.summary.bias, c.summary.bias_mcse,
                          c.summary.coverage, c.summary.mse, c.summary.power,
                          agg.avg_pointwise_mse, agg.n_fail);
            out << buf;
        }
    }
    if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

}  // namespace swedge
