#pragma once

#include <vector>

#include <Eigen/Dense>

namespace swedge {

// Natural cubic spline basis on exposure time, constrained to pass through
// the origin.  The d functions are cubic between the knots, linear outside
// the boundary knots, and identically zero on [0, first knot].
struct SplineBasis {
    std::vector<double> knots;  // increasing, first = 1, last = max_exposure
    int df = 0;                 // number of basis functions

    // b_1(s), ..., b_d(s)
    Eigen::VectorXd evaluate(double s) const;
};

// Basis with d degrees of freedom: boundary knots at 1 and max_exposure,
// interior knots at evenly spaced quantiles of {1, ..., max_exposure}.
SplineBasis build_basis(int df, int max_exposure);

// Rows are evaluate(points[i]).
Eigen::MatrixXd design_matrix(const SplineBasis& basis,
                              const std::vector<double>& points);

}  // namespace swedge
