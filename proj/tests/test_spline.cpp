#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "swedge/spline.hpp"

using namespace swedge;

namespace {

// Central second difference, h^2-normalized.
Eigen::VectorXd second_diff(const SplineBasis& b, double x, double h) {
    return (b.evaluate(x - h) - 2.0 * b.evaluate(x) + b.evaluate(x + h)) / (h * h);
}

}  // namespace

TEST_CASE("basis construction and knot placement") {
    const SplineBasis b = build_basis(4, 6);
    CHECK(b.df == 4);
    REQUIRE(b.knots.size() == 5);
    CHECK(b.knots.front() == doctest::Approx(1.0));
    CHECK(b.knots.back() == doctest::Approx(6.0));
    // interior knots at evenly spaced quantiles of {1..6}
    CHECK(b.knots[1] == doctest::Approx(2.25));
    CHECK(b.knots[2] == doctest::Approx(3.5));
    CHECK(b.knots[3] == doctest::Approx(4.75));

    CHECK_THROWS_AS(build_basis(1, 6), std::domain_error);
    CHECK_THROWS_AS(build_basis(7, 6), std::domain_error);
    CHECK_THROWS_AS(build_basis(2, 0), std::domain_error);
}

TEST_CASE("basis passes through the origin") {
    for (int df : {2, 3, 4, 6}) {
        const SplineBasis b = build_basis(df, 6);
        const Eigen::VectorXd at0 = b.evaluate(0.0);
        for (int k = 0; k < df; ++k) CHECK(at0(k) == 0.0);
    }
    CHECK_THROWS_AS(build_basis(4, 6).evaluate(-0.5), std::domain_error);
}

TEST_CASE("basis functions are continuous at the knots") {
    const SplineBasis b = build_basis(4, 6);
    const double eps = 1e-7;
    for (double knot : b.knots) {
        const Eigen::VectorXd lo = b.evaluate(knot - eps);
        const Eigen::VectorXd hi = b.evaluate(knot + eps);
        CHECK((hi - lo).cwiseAbs().maxCoeff() < 1e-5);
    }
}

TEST_CASE("basis functions are C2 across the knots") {
    const SplineBasis b = build_basis(5, 8);
    const double h = 1e-4;
    for (double knot : b.knots) {
        if (knot < 2.0 * h) continue;
        const Eigen::VectorXd left = second_diff(b, knot - 5.0 * h, h);
        const Eigen::VectorXd right = second_diff(b, knot + 5.0 * h, h);
        // curvature changes smoothly: second derivative jump vanishes
        CHECK((right - left).cwiseAbs().maxCoeff() < 1e-2);
    }
}

TEST_CASE("basis is linear beyond the boundary knots") {
    const SplineBasis b = build_basis(4, 6);
    const double kd = b.knots.back();
    for (double t : {0.5, 1.0, 2.0}) {
        const Eigen::VectorXd d1 = b.evaluate(kd + 2.0 * t) - b.evaluate(kd + t);
        const Eigen::VectorXd d2 = b.evaluate(kd + 3.0 * t) - b.evaluate(kd + 2.0 * t);
        CHECK((d2 - d1).cwiseAbs().maxCoeff() < 1e-9);
    }
    // natural boundary: curvature vanishes outside the knots
    CHECK(second_diff(b, kd + 1.5, 1e-4).cwiseAbs().maxCoeff() < 1e-4);
    // and on the linear segment left of the first knot as well
    CHECK(second_diff(b, 0.5, 1e-4).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("saturated basis spans all functions vanishing at zero") {
    const int S = 6;
    const SplineBasis b = build_basis(S, S);
    std::vector<double> grid;
    for (int s = 1; s <= S; ++s) grid.push_back(static_cast<double>(s));
    const Eigen::MatrixXd D = design_matrix(b, grid);
    REQUIRE(D.rows() == S);
    REQUIRE(D.cols() == S);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(D);
    CHECK(lu.isInvertible());

    // any target vector on the grid is interpolated exactly
    Eigen::VectorXd target(S);
    target << 0.3, -0.1, 0.8, 1.4, 1.2, 2.0;
    const Eigen::VectorXd coef = lu.solve(target);
    for (int s = 1; s <= S; ++s)
        CHECK(b.evaluate(s).dot(coef) == doctest::Approx(target(s - 1)).epsilon(1e-9));
}

TEST_CASE("design_matrix rows match evaluate") {
    const SplineBasis b = build_basis(3, 7);
    const std::vector<double> pts = {0.0, 1.5, 3.0, 6.9};
    const Eigen::MatrixXd D = design_matrix(b, pts);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const Eigen::VectorXd row = D.row(static_cast<int>(i)).transpose();
        CHECK((row - b.evaluate(pts[i])).cwiseAbs().maxCoeff() == 0.0);
    }
}
