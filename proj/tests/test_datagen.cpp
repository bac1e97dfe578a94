#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

#include "swedge/datagen.hpp"
#include "swedge/design.hpp"
#include "swedge/effect_curve.hpp"

#include "helpers.hpp"

using namespace swedge;

namespace {

std::string temp_path(const std::string& name) {
    return std::string("/tmp/swedge_test_") + name;
}

}  // namespace

TEST_CASE("canonical curve shapes") {
    const EffectCurve a = canonical_curve(CurveKind::Constant, 6);
    for (double h : a.values) CHECK(h == 1.0);
    CHECK(a.at(0) == 0.0);

    const EffectCurve b = canonical_curve(CurveKind::Delayed, 6);
    CHECK(b.at(1) < 1.0);
    for (int s = 3; s <= 6; ++s) CHECK(b.at(s) == 1.0);

    const EffectCurve c = canonical_curve(CurveKind::Exponential, 6);
    CHECK(c.at(6) == doctest::Approx(1.0).epsilon(1e-12));
    for (int s = 1; s <= 6; ++s) {
        const double incr = c.at(s) - c.at(s - 1);
        CHECK(incr > 0.0);
        if (s >= 2) CHECK(incr < c.at(s - 1) - c.at(s - 2));
    }
    CHECK(c.at(5) < 1.0);  // maximum reached only at s = 6

    const EffectCurve d = canonical_curve(CurveKind::Partial, 6);
    for (int s = 4; s <= 6; ++s) CHECK(d.at(s) == 1.0);
    CHECK(d.at(3) < 1.0);
    // convex rise: increments grow until the plateau
    CHECK(d.at(2) - d.at(1) > d.at(1) - d.at(0));
    CHECK(d.at(3) - d.at(2) > d.at(2) - d.at(1));

    // plateaus extend flat when the design has more exposure times
    for (CurveKind k : {CurveKind::Delayed, CurveKind::Exponential, CurveKind::Partial}) {
        const EffectCurve ext = canonical_curve(k, 8);
        CHECK(ext.at(7) == ext.at(6));
        CHECK(ext.at(8) == ext.at(6));
    }
}

TEST_CASE("curve parsing and validation") {
    CHECK(parse_curve_kind("a") == CurveKind::Constant);
    CHECK(parse_curve_kind("B") == CurveKind::Delayed);
    CHECK(parse_curve_kind("exponential") == CurveKind::Exponential);
    CHECK(parse_curve_kind("Partial") == CurveKind::Partial);
    CHECK_THROWS_AS(parse_curve_kind("z"), std::invalid_argument);

    CHECK_THROWS_AS(canonical_curve(CurveKind::Delayed, 5), std::domain_error);
    CHECK_THROWS_AS(canonical_curve(CurveKind::Constant, 0), std::domain_error);
    CHECK(canonical_curve(CurveKind::Constant, 3).max_exposure() == 3);

    const EffectCurve c = canonical_curve(CurveKind::Exponential, 6);
    CHECK_THROWS_AS(c.at(-1), std::domain_error);
    CHECK_THROWS_AS(c.at(7), std::domain_error);
}

TEST_CASE("generation parameter validation") {
    const StudyDesign d = testutil::base_design();
    GenParams p = testutil::base_params(d, CurveKind::Constant);
    CHECK_NOTHROW(p.validate(d));

    GenParams bad = p;
    bad.sigma = 0.0;
    CHECK_THROWS_AS(bad.validate(d), std::domain_error);
    bad = p;
    bad.tau = -0.1;
    CHECK_THROWS_AS(bad.validate(d), std::domain_error);
    bad = p;
    bad.period_effects[0] = 0.3;
    CHECK_THROWS_AS(bad.validate(d), std::domain_error);
    bad = p;
    bad.period_effects.pop_back();
    CHECK_THROWS_AS(bad.validate(d), std::domain_error);
    bad = p;
    bad.curve.values.resize(4);
    CHECK_THROWS_AS(bad.validate(d), std::domain_error);
    bad = p;
    bad.nu = 0.0;
    bad.rho = -0.2;
    CHECK_THROWS_AS(bad.validate(d), std::domain_error);
    bad = p;
    bad.nu = 1.0;
    bad.rho = -1.5;
    CHECK_THROWS_AS(bad.validate(d), std::domain_error);
}

TEST_CASE("linear time trend") {
    const std::vector<double> beta = linear_time_trend(7, -0.5);
    REQUIRE(beta.size() == 7);
    CHECK(beta[0] == 0.0);
    for (int j = 2; j <= 7; ++j)
        CHECK(beta[static_cast<std::size_t>(j - 1)] ==
              doctest::Approx(-0.5 * (j - 1) / 6.0).epsilon(1e-14));
}

TEST_CASE("noiseless generation reproduces the mean structure") {
    const StudyDesign d = standard_design(6, 1, 2, 0);
    GenParams p = testutil::base_params(d, CurveKind::Constant);
    p.sigma = 1e-12;
    p.tau = 0.0;
    const TrialDataset data = generate(d, p, 99ULL);
    REQUIRE(data.num_rows() == 6 * 7 * 2);
    for (const TrialRow& row : data.rows) {
        const double base =
            1.0 + p.period_effects[static_cast<std::size_t>(row.period - 1)];
        const double expect = row.treated ? base + 0.5 : base;
        CHECK(row.outcome == doctest::Approx(expect).epsilon(1e-6));
    }
}

TEST_CASE("generation is deterministic in the seed") {
    const StudyDesign d = testutil::base_design();
    const GenParams p = testutil::base_params(d, CurveKind::Exponential);
    const TrialDataset x = generate(d, p, 4242ULL);
    const TrialDataset y = generate(d, p, 4242ULL);
    const TrialDataset z = generate(d, p, 4243ULL);
    REQUIRE(x.num_rows() == y.num_rows());
    bool all_equal = true, any_diff = false;
    for (int r = 0; r < x.num_rows(); ++r) {
        const std::size_t i = static_cast<std::size_t>(r);
        if (x.rows[i].outcome != y.rows[i].outcome) all_equal = false;
        if (x.rows[i].outcome != z.rows[i].outcome) any_diff = true;
    }
    CHECK(all_equal);
    CHECK(any_diff);
}

TEST_CASE("row layout matches the design") {
    const StudyDesign d = standard_design(3, 2, 4, 1);
    const GenParams p = testutil::noiseless_params(d, CurveKind::Constant);
    const TrialDataset data = generate(d, p, 7ULL);
    REQUIRE(data.num_rows() == 6 * 5 * 4);
    int idx = 0;
    for (int i = 1; i <= 6; ++i)
        for (int j = 1; j <= 5; ++j)
            for (int k = 1; k <= 4; ++k) {
                const TrialRow& row = data.rows[static_cast<std::size_t>(idx++)];
                CHECK(row.cluster == i);
                CHECK(row.period == j);
                CHECK(row.sequence == d.sequence_of_cluster(i));
                CHECK(row.treated == treatment_indicator(d, row.sequence, j));
                CHECK(row.exposure == exposure_time(d, row.sequence, j));
            }
}

TEST_CASE("generated variance components match the configuration") {
    // Empirical ICC over many replicates of the base configuration: the
    // within-cell variance estimates sigma^2 and the between-cluster spread
    // of cell means estimates tau^2 + sigma^2/K.
    const StudyDesign d = testutil::base_design();
    GenParams p = testutil::base_params(d, CurveKind::Constant);
    p.delta = 0.0;  // no treatment shifts; cell means then share period means
    const int R = 100;
    const int K = d.cluster_size;

    double ssw = 0.0;
    long long n_within = 0;
    double ss_between = 0.0;
    long long n_between = 0;
    for (int r = 0; r < R; ++r) {
        const TrialDataset data = generate(d, p, 1000ULL + r);
        const CollapsedData cd = collapse(data);
        ssw += cd.ssw;
        n_within += static_cast<long long>(cd.means.size()) * (K - 1);
        for (int j = 0; j < d.num_periods(); ++j) {
            const Eigen::VectorXd col = cd.means.col(j);
            const double mean = col.mean();
            ss_between += (col.array() - mean).matrix().squaredNorm();
            n_between += col.size() - 1;
        }
    }
    const double sigma2_hat = ssw / n_within;
    const double cell_var = ss_between / n_between;          // tau^2 + sigma^2/K
    const double tau2_hat = cell_var - sigma2_hat / K;
    const double icc = tau2_hat / (tau2_hat + sigma2_hat);
    CHECK(sigma2_hat == doctest::Approx(4.0).epsilon(0.02));
    CHECK(icc == doctest::Approx(0.059).epsilon(0.12));
}

TEST_CASE("random treatment effects have the requested spread") {
    // Cluster-level treated-vs-control mean deviations estimate eta_i when
    // the residual noise is negligible.
    const StudyDesign d = standard_design(5, 300, 2, 0);  // 1500 clusters
    GenParams p;
    p.mu = 0.0;
    p.period_effects = linear_time_trend(d.num_periods(), 0.0);
    p.delta = 0.0;
    p.curve = testutil::ramp_curve(d.max_exposure());
    p.tau = 0.5;
    p.sigma = 0.01;
    p.nu = 1.0;
    p.rho = -0.2;
    const TrialDataset data = generate(d, p, 31ULL);
    const CollapsedData cd = collapse(data);

    std::vector<double> eta;
    for (int i = 1; i <= d.num_clusters(); ++i) {
        const int q = d.sequence_of_cluster(i);
        double treated = 0.0, control = 0.0;
        int nt = 0, nc = 0;
        for (int j = 1; j <= d.num_periods(); ++j) {
            if (treatment_indicator(d, q, j)) {
                treated += cd.means(i - 1, j - 1);
                ++nt;
            } else {
                control += cd.means(i - 1, j - 1);
                ++nc;
            }
        }
        eta.push_back(treated / nt - control / nc);
    }
    double mean = 0.0;
    for (double e : eta) mean += e;
    mean /= static_cast<double>(eta.size());
    double var = 0.0;
    for (double e : eta) var += (e - mean) * (e - mean);
    var /= static_cast<double>(eta.size() - 1);
    CHECK(var == doctest::Approx(1.0).epsilon(0.10));
}

TEST_CASE("csv round trip preserves every field") {
    const StudyDesign d = standard_design(4, 1, 3, 0);
    const GenParams p = testutil::base_params(d, CurveKind::Constant);
    const TrialDataset data = generate(d, p, 555ULL);
    const std::string path = temp_path("roundtrip.csv");
    write_csv(data, path);
    const TrialDataset back = read_csv(path);

    CHECK(back.design.num_sequences == d.num_sequences);
    CHECK(back.design.clusters_per_sequence == d.clusters_per_sequence);
    CHECK(back.design.cluster_size == d.cluster_size);
    CHECK(back.design.extra_periods == d.extra_periods);
    REQUIRE(back.num_rows() == data.num_rows());
    for (int r = 0; r < data.num_rows(); ++r) {
        const std::size_t i = static_cast<std::size_t>(r);
        CHECK(back.rows[i].cluster == data.rows[i].cluster);
        CHECK(back.rows[i].sequence == data.rows[i].sequence);
        CHECK(back.rows[i].period == data.rows[i].period);
        CHECK(back.rows[i].treated == data.rows[i].treated);
        CHECK(back.rows[i].exposure == data.rows[i].exposure);
        CHECK(back.rows[i].outcome == data.rows[i].outcome);  // bit-exact
    }
    std::remove(path.c_str());
}

TEST_CASE("csv reading rejects malformed input") {
    const std::string path = temp_path("bad.csv");

    auto write_file = [&](const std::string& text) {
        std::FILE* f = std::fopen(path.c_str(), "w");
        REQUIRE(f != nullptr);
        std::fputs(text.c_str(), f);
        std::fclose(f);
    };

    write_file("time,outcome\n1,2\n");
    CHECK_THROWS_AS(read_csv(path), std::runtime_error);

    write_file("cluster,sequence,period,treated,exposure,outcome\n");
    CHECK_THROWS_AS(read_csv(path), std::runtime_error);

    write_file("cluster,sequence,period,treated,exposure,outcome\n1,1,1,0,0,oops\n");
    CHECK_THROWS_AS(read_csv(path), std::runtime_error);

    write_file("cluster,sequence,period,treated,exposure,outcome\n1,1,1,0,0\n");
    CHECK_THROWS_AS(read_csv(path), std::runtime_error);

    // treated flag inconsistent with the staircase design
    write_file(
        "cluster,sequence,period,treated,exposure,outcome\n"
        "1,1,1,1,0,0.1\n1,1,2,1,1,0.1\n1,1,3,1,2,0.1\n"
        "2,2,1,0,0,0.1\n2,2,2,0,0,0.1\n2,2,3,1,1,0.1\n");
    CHECK_THROWS_AS(read_csv(path), std::runtime_error);

    std::remove(path.c_str());
}

TEST_CASE("collapse computes cell means and within-cell scatter") {
    const StudyDesign d = standard_design(2, 1, 2, 0);
    GenParams p;
    p.mu = 0.0;
    p.period_effects = {0.0, 0.0, 0.0};
    p.delta = 0.0;
    p.curve = testutil::ramp_curve(2);
    p.tau = 0.0;
    p.sigma = 1.0;
    TrialDataset data = generate(d, p, 9ULL);
    // overwrite with hand-picked outcomes: cluster x period cell (i, j)
    const double vals[2][3][2] = {{{1.0, 3.0}, {2.0, 2.0}, {0.0, 4.0}},
                                  {{5.0, 5.0}, {1.0, 2.0}, {8.0, 6.0}}};
    for (std::size_t r = 0; r < data.rows.size(); ++r) {
        TrialRow& row = data.rows[r];
        row.outcome = vals[row.cluster - 1][row.period - 1][r % 2];
    }
    const CollapsedData cd = collapse(data);
    CHECK(cd.cell_count == 2);
    CHECK(cd.means(0, 0) == 2.0);
    CHECK(cd.means(0, 1) == 2.0);
    CHECK(cd.means(0, 2) == 2.0);
    CHECK(cd.means(1, 0) == 5.0);
    CHECK(cd.means(1, 1) == 1.5);
    CHECK(cd.means(1, 2) == 7.0);
    // within-cell sum of squares: 2+0+8 + 0+0.5+2 = 12.5
    CHECK(cd.ssw == doctest::Approx(12.5).epsilon(1e-12));
    CHECK(cd.exposures(0, 0) == 0);
    CHECK(cd.exposures(0, 2) == 2);
    CHECK(cd.exposures(1, 2) == 1);

    data.rows.pop_back();
    CHECK_THROWS_AS(collapse(data), std::runtime_error);
}

TEST_CASE("sequence-period means average clusters within a sequence") {
    const StudyDesign d = standard_design(2, 2, 3, 0);
    const GenParams p = testutil::noiseless_params(d, CurveKind::Constant, 1e-9);
    const TrialDataset data = generate(d, p, 77ULL);
    const CollapsedData cd = collapse(data);
    const Eigen::MatrixXd spm = sequence_period_means(data);
    REQUIRE(spm.rows() == 2);
    REQUIRE(spm.cols() == 3);
    for (int q = 0; q < 2; ++q)
        for (int j = 0; j < 3; ++j)
            CHECK(spm(q, j) == doctest::Approx(0.5 * (cd.means(2 * q, j) +
                                                      cd.means(2 * q + 1, j)))
                                   .epsilon(1e-12));
}
