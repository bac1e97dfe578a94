#include "swedge/dist.hpp"

#include <cmath>
#include <stdexcept>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

namespace swedge {

namespace {
const boost::math::normal_distribution<double> std_normal(0.0, 1.0);
}

double normal_cdf(double z) { return boost::math::cdf(std_normal, z); }

double normal_quantile(double p) {
    if (p <= 0.0 || p >= 1.0)
        throw std::domain_error("normal_quantile: p must be in (0, 1)");
    return boost::math::quantile(std_normal, p);
}

double chisq_upper_tail(double x, int df) {
    if (df < 1) throw std::domain_error("chisq_upper_tail: df must be >= 1");
    if (x <= 0.0) return 1.0;
    const boost::math::chi_squared_distribution<double> dist(df);
    return boost::math::cdf(boost::math::complement(dist, x));
}

double two_sided_p(double z) {
    return 2.0 * boost::math::cdf(boost::math::complement(std_normal, std::fabs(z)));
}

}  // namespace swedge
