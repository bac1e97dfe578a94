#pragma once

namespace swedge {

// Thin wrappers around Boost.Math so only one translation unit pulls in the
// heavy distribution headers.
double normal_cdf(double z);
double normal_quantile(double p);

// P(chi2_df > x)
double chisq_upper_tail(double x, int df);

// Two-sided p-value of a z statistic.
double two_sided_p(double z);

}  // namespace swedge
