#include "swedge/spline.hpp"

#include <cmath>
#include <stdexcept>

namespace swedge {

namespace {

double cube_pos(double x) {
    return x > 0.0 ? x * x * x : 0.0;
}

// Scaled truncated-cube difference; together with {1, x} these span the
// natural cubic splines on the given knots.
double d_func(const std::vector<double>& knots, std::size_t k, double x) {
    const double last = knots.back();
    return (cube_pos(x - knots[k]) - cube_pos(x - last)) / (last - knots[k]);
}

// Linear interpolation quantile of sorted values (the common default).
double quantile(const std::vector<double>& sorted, double p) {
    const std::size_t n = sorted.size();
    if (n == 1) return sorted[0];
    const double h = (static_cast<double>(n) - 1.0) * p;
    const std::size_t lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = lo + 1 < n ? lo + 1 : lo;
    return sorted[lo] + (h - std::floor(h)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

Eigen::VectorXd SplineBasis::evaluate(double s) const {
    if (s < 0.0)
        throw std::domain_error("spline: evaluation point must be >= 0");
    Eigen::VectorXd out(df);
    // Natural basis {1, x, N_3, ...}; the constant is dropped and each
    // remaining function is shifted by its value at 0 (zero here, since all
    // knots are positive) to pin the curve to the origin.
    out(0) = s - 0.0;
    const std::size_t m = knots.size();
    for (std::size_t k = 0; k + 2 < m; ++k)
        out(static_cast<int>(k) + 1) =
            (d_func(knots, k, s) - d_func(knots, m - 2, s)) -
            (d_func(knots, k, 0.0) - d_func(knots, m - 2, 0.0));
    return out;
}

SplineBasis build_basis(int df, int max_exposure) {
    if (max_exposure < 1)
        throw std::domain_error("spline: max_exposure must be >= 1");
    if (df < 2 || df > max_exposure)
        throw std::domain_error("spline: df must be in [2, max_exposure]");

    std::vector<double> grid;
    grid.reserve(static_cast<std::size_t>(max_exposure));
    for (int s = 1; s <= max_exposure; ++s) grid.push_back(static_cast<double>(s));

    SplineBasis basis;
    basis.df = df;
    basis.knots.push_back(1.0);
    for (int k = 1; k < df; ++k)
        basis.knots.push_back(quantile(grid, static_cast<double>(k) / df));
    basis.knots.push_back(static_cast<double>(max_exposure));
    for (std::size_t i = 1; i < basis.knots.size(); ++i)
        if (basis.knots[i] <= basis.knots[i - 1])
            throw std::domain_error("spline: knots are not strictly increasing");

    // The NCS model relies on the basis spanning d dimensions on the integer
    // exposure grid; verify once at construction.
    Eigen::MatrixXd design(max_exposure, df);
    for (int s = 1; s <= max_exposure; ++s)
        design.row(s - 1) = basis.evaluate(static_cast<double>(s)).transpose();
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    if (qr.rank() < df)
        throw std::domain_error("spline: basis is rank deficient on the exposure grid");
    return basis;
}

Eigen::MatrixXd design_matrix(const SplineBasis& basis,
                              const std::vector<double>& points) {
    Eigen::MatrixXd out(static_cast<int>(points.size()), basis.df);
    for (std::size_t i = 0; i < points.size(); ++i)
        out.row(static_cast<int>(i)) = basis.evaluate(points[i]).transpose();
    return out;
}

}  // namespace swedge
