#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "swedge/simharness.hpp"

#include "helpers.hpp"

using namespace swedge;

namespace {

EstimandEstimate fake_estimate(double est, double half_width, double p) {
    EstimandEstimate e;
    e.estimate = est;
    e.se = half_width / 1.96;
    e.ci_lo = est - half_width;
    e.ci_hi = est + half_width;
    e.p = p;
    return e;
}

SimScenario tiny_scenario(int replicates, std::uint64_t seed) {
    SimScenario sc;
    sc.name = "tiny";
    sc.design = standard_design(3, 2, 5, 0);
    sc.params.mu = 1.0;
    sc.params.delta = 0.5;
    sc.params.sigma = 1.0;
    sc.params.tau = 0.3;
    sc.params.period_effects = linear_time_trend(sc.design.num_periods(), -0.2);
    sc.params.curve = testutil::ramp_curve(sc.design.max_exposure());
    sc.analyses.push_back(AnalysisSpec::lmm(ModelSpec::eti()));
    sc.analyses.push_back(AnalysisSpec::lmm(ModelSpec::it()));
    sc.estimands.push_back({EstimandSpec::tate(0, 3), RiemannMethod::Right});
    sc.estimands.push_back({EstimandSpec::tate(0, 3), RiemannMethod::Trapezoid});
    sc.estimands.push_back({EstimandSpec::lte(), RiemannMethod::Right});
    sc.replicates = replicates;
    sc.seed = seed;
    return sc;
}

}  // namespace

TEST_CASE("metric identities on synthetic estimates") {
    const double truth = 2.0;
    std::vector<EstimandEstimate> ests;
    // alternating truth +/- c, half the intervals covering
    const double c = 0.25;
    for (int r = 0; r < 40; ++r) {
        const double est = truth + (r % 2 == 0 ? c : -c);
        const double hw = (r % 4 < 2) ? 1.0 : 0.01;  // wide CIs cover, narrow miss
        ests.push_back(fake_estimate(est, hw, r % 5 == 0 ? 0.01 : 0.5));
    }
    const MetricSummary m = metrics(ests, truth);
    CHECK(m.n == 40);
    CHECK(m.truth == truth);
    CHECK(m.bias == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(m.mean_estimate == doctest::Approx(truth).epsilon(1e-14));
    CHECK(m.mse == doctest::Approx(c * c).epsilon(1e-12));
    CHECK(m.coverage == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(m.power == doctest::Approx(0.2).epsilon(1e-14));
    CHECK(m.coverage_mcse ==
          doctest::Approx(std::sqrt(0.25 / 40.0)).epsilon(1e-12));
    CHECK(m.power_mcse ==
          doctest::Approx(std::sqrt(0.2 * 0.8 / 40.0)).epsilon(1e-12));
    // constant squared error implies zero MCSE for the MSE
    CHECK(m.mse_mcse == doctest::Approx(0.0).epsilon(1e-14));

    // mse decomposes into variance plus squared bias
    std::vector<EstimandEstimate> skewed;
    for (int r = 0; r < 25; ++r)
        skewed.push_back(fake_estimate(0.1 * r, 0.5, 0.5));
    const MetricSummary s = metrics(skewed, truth);
    double mean = 0.0;
    for (const EstimandEstimate& e : skewed) mean += e.estimate;
    mean /= 25.0;
    double popvar = 0.0;
    for (const EstimandEstimate& e : skewed)
        popvar += (e.estimate - mean) * (e.estimate - mean);
    popvar /= 25.0;
    CHECK(s.mse == doctest::Approx(popvar + s.bias * s.bias).epsilon(1e-12));

    const MetricSummary one = metrics({fake_estimate(truth, 0.5, 0.9)}, truth);
    CHECK(one.n == 1);
    CHECK(one.bias == 0.0);
    CHECK(one.mse == 0.0);
    CHECK(one.coverage == 1.0);
    CHECK(one.power == 0.0);
    CHECK(one.bias_mcse == 0.0);

    CHECK_THROWS_AS(metrics({}, 0.0), std::domain_error);
}

TEST_CASE("scenario runs are deterministic at any parallelism") {
    const SimScenario sc = tiny_scenario(16, 2024ULL);
    const SimResult serial = run_scenario(sc, 1);
    const SimResult parallel = run_scenario(sc, 4);

    REQUIRE(serial.cells.size() == 6);  // 2 analyses x 3 estimands
    REQUIRE(parallel.cells.size() == 6);
    CHECK(serial.replicates == 16);
    CHECK(serial.curve == "ramp");
    for (std::size_t k = 0; k < serial.cells.size(); ++k) {
        const SimCell& a = serial.cells[k];
        const SimCell& b = parallel.cells[k];
        CHECK(a.model == b.model);
        CHECK(a.estimand == b.estimand);
        CHECK(a.summary.bias == b.summary.bias);
        CHECK(a.summary.mse == b.summary.mse);
        CHECK(a.summary.coverage == b.summary.coverage);
        CHECK(a.summary.mean_estimate == b.summary.mean_estimate);
    }
    for (std::size_t k = 0; k < serial.models.size(); ++k) {
        CHECK(serial.models[k].avg_pointwise_mse ==
              parallel.models[k].avg_pointwise_mse);
        CHECK(serial.models[k].n_fail == 0);
    }

    // truth column comes from the generating curve
    const double want_truth = true_estimand(sc.params.curve, sc.params.delta,
                                            EstimandSpec::tate(0, 3),
                                            RiemannMethod::Right, 3);
    CHECK(serial.cell("eti", "tate:0:3").truth == doctest::Approx(want_truth).epsilon(1e-14));
    CHECK(serial.cell("eti", "tate:0:3:trap").n == 16);
    CHECK(serial.cell("it", "lte").n == 16);
    CHECK_THROWS_AS(serial.cell("eti", "nope"), std::out_of_range);
    CHECK_THROWS_AS(serial.aggregate("nope"), std::out_of_range);

    // different master seed gives different data
    SimScenario sc2 = sc;
    sc2.seed = 2025ULL;
    const SimResult other = run_scenario(sc2, 4);
    CHECK(other.cell("eti", "lte").mean_estimate !=
          serial.cell("eti", "lte").mean_estimate);
}

TEST_CASE("scenario validation and failure accounting") {
    SimScenario sc = tiny_scenario(4, 7ULL);
    sc.replicates = 0;
    CHECK_THROWS_AS(run_scenario(sc, 1), std::domain_error);

    sc = tiny_scenario(4, 7ULL);
    sc.analyses.clear();
    CHECK_THROWS_AS(run_scenario(sc, 1), std::domain_error);

    sc = tiny_scenario(4, 7ULL);
    sc.estimands.clear();
    CHECK_THROWS_AS(run_scenario(sc, 1), std::domain_error);

    // an analysis that can never fit raises once all replicates have failed
    sc = tiny_scenario(4, 7ULL);
    MecOptions mcmc;
    mcmc.n_chains = 1;
    mcmc.n_warmup = 10;
    mcmc.n_samples = 10;
    sc.analyses.push_back(
        AnalysisSpec::mec(MecPrior::symmetric(2), mcmc, "broken"));  // wrong S
    CHECK_THROWS_AS(run_scenario(sc, 2), EstimationError);
}

TEST_CASE("a Bayesian analysis runs inside the harness") {
    SimScenario sc = tiny_scenario(4, 99ULL);
    MecOptions mcmc;
    mcmc.n_chains = 2;
    mcmc.n_warmup = 200;
    mcmc.n_samples = 200;
    mcmc.jobs = 1;
    sc.analyses.push_back(
        AnalysisSpec::mec(MecPrior::symmetric(sc.design.max_exposure()), mcmc));
    const SimResult res = run_scenario(sc, 4);
    CHECK(res.aggregate("mec").n_fail == 0);
    const MetricSummary& cell = res.cell("mec", "lte");
    CHECK(cell.n == 4);
    CHECK(cell.coverage >= 0.0);
    CHECK(cell.coverage <= 1.0);
    CHECK(std::isfinite(cell.mse));
    CHECK(res.aggregate("mec").avg_pointwise_mse > 0.0);
}

TEST_CASE("catalog structure") {
    CHECK(catalog_names() ==
          std::vector<std::string>{"base", "reti", "extra", "rte", "dirichlet"});

    const std::vector<SimScenario> base = catalog_scenarios(
        "base", {CurveKind::Constant, CurveKind::Delayed}, 100, 5ULL);
    REQUIRE(base.size() == 2);
    for (const SimScenario& sc : base) {
        CHECK(sc.name == "base");
        CHECK(sc.design.num_sequences == 6);
        CHECK(sc.design.clusters_per_sequence == 4);
        CHECK(sc.design.cluster_size == 20);
        CHECK(sc.design.num_periods() == 7);
        CHECK(sc.params.mu == 1.0);
        CHECK(sc.params.delta == 0.5);
        CHECK(sc.params.sigma == 2.0);
        CHECK(sc.params.tau == 0.5);
        CHECK(sc.params.nu == 0.0);
        CHECK(sc.replicates == 100);
        REQUIRE(sc.analyses.size() == 4);
        CHECK(sc.analyses[0].label == "it");
        CHECK(sc.analyses[1].label == "eti");
        CHECK(sc.analyses[2].label == "ncs:4");
        CHECK(sc.analyses[3].label == "mec");
        CHECK(sc.analyses[3].is_mec);
        const std::vector<double> want{5.0, 5.0, 5.0, 1.0, 1.0, 1.0};
        CHECK(sc.analyses[3].prior.c == want);
        REQUIRE(sc.estimands.size() == 2);
        CHECK(sc.estimands[0].label() == "tate:0:6");
        CHECK(sc.estimands[1].label() == "lte");
    }
    CHECK(base[0].params.curve.label != base[1].params.curve.label);
    CHECK(base[0].seed != base[1].seed);

    const std::vector<SimScenario> reti =
        catalog_scenarios("reti", {CurveKind::Delayed}, 10, 5ULL);
    REQUIRE(reti.size() == 1);
    REQUIRE(reti[0].analyses.size() == 3);
    CHECK(reti[0].analyses[0].label == "eti");
    CHECK(reti[0].analyses[1].label == "reti:3");
    CHECK(reti[0].analyses[2].label == "reti:4");

    const std::vector<SimScenario> extra =
        catalog_scenarios("extra", {CurveKind::Exponential}, 10, 5ULL);
    REQUIRE(extra.size() == 3);
    for (int e = 0; e < 3; ++e) {
        const SimScenario& sc = extra[static_cast<std::size_t>(e)];
        CHECK(sc.name == "extra+" + std::to_string(e));
        CHECK(sc.design.extra_periods == e);
        CHECK(sc.design.num_periods() == 7 + e);
        REQUIRE(sc.estimands.size() == 2);
        CHECK(sc.estimands[0].label() == "tate:0:6");
        CHECK(sc.estimands[1].label() == "pte:6");
    }
    CHECK(extra[0].seed != extra[1].seed);

    const std::vector<SimScenario> rte =
        catalog_scenarios("rte", {CurveKind::Delayed}, 10, 5ULL);
    REQUIRE(rte.size() == 1);
    CHECK(rte[0].params.nu == 1.0);
    CHECK(rte[0].params.rho == -0.2);
    REQUIRE(rte[0].analyses.size() == 2);
    CHECK(rte[0].analyses[0].label == "eti");
    CHECK(rte[0].analyses[1].label == "eti-rte");
    CHECK(rte[0].analyses[1].model.random_treatment);

    const std::vector<SimScenario> dir =
        catalog_scenarios("dirichlet", {CurveKind::Delayed}, 10, 5ULL);
    REQUIRE(dir.size() == 1);
    REQUIRE(dir[0].analyses.size() == 2);
    CHECK(dir[0].analyses[0].label == "mec");
    CHECK(dir[0].analyses[1].label == "mec-sym");
    CHECK(dir[0].analyses[1].prior.c == std::vector<double>(6, 1.0));

    CHECK_THROWS_AS(catalog_scenarios("nope", {CurveKind::Constant}, 10, 5ULL),
                    std::invalid_argument);
}

TEST_CASE("results csv layout") {
    const SimScenario sc = tiny_scenario(6, 11ULL);
    const SimResult res = run_scenario(sc, 2);
    const std::string path = "/tmp/swedge_test_results.csv";
    write_results_csv({res}, path);

    std::ifstream in(path);
    REQUIRE(in.good());
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line ==
          "scenario,curve,model,estimand,bias,bias_mcse,coverage,mse,power,"
          "avg_pointwise_mse,n_fail");
    int rows = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        ++rows;
        std::stringstream ss(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        REQUIRE(fields.size() == 11);
        CHECK(fields[0] == "tiny");
        CHECK(fields[1] == "ramp");
        CHECK(std::stoi(fields[10]) == 0);
        CHECK(std::isfinite(std::stod(fields[4])));
    }
    CHECK(rows == static_cast<int>(res.cells.size()));
    std::remove(path.c_str());
}
