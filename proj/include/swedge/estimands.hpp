#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "swedge/models.hpp"

namespace swedge {

struct EstimandSpec {
    enum class Kind { TATE, PTE, LTE };
    Kind kind = Kind::TATE;
    int s1 = 0, s2 = 0;  // TATE window [s1, s2]
    int s0 = 0;          // PTE exposure time

    static EstimandSpec tate(int s1, int s2);
    static EstimandSpec pte(int s0);
    static EstimandSpec lte();

    std::string label() const;
};

enum class RiemannMethod { Right, Trapezoid };

struct EstimandEstimate {
    EstimandSpec spec;
    RiemannMethod method = RiemannMethod::Right;
    double estimate = 0.0;
    double se = 0.0;
    double ci_lo = 0.0, ci_hi = 0.0;
    double z = 0.0;
    double p = 1.0;
};

// Row vector M with estimate = M . theta_hat.
Eigen::RowVectorXd contrast(const FittedModel& fit, const EstimandSpec& spec,
                            RiemannMethod method = RiemannMethod::Right);

EstimandEstimate estimate(const FittedModel& fit, const EstimandSpec& spec,
                          RiemannMethod method = RiemannMethod::Right);

// Per-exposure-time point effects with pointwise Wald intervals.
struct CurvePoint {
    int s = 0;
    double estimate = 0.0;
    double ci_lo = 0.0, ci_hi = 0.0;
};
std::vector<CurvePoint> effect_curve_estimate(const FittedModel& fit);

// True value of an estimand under a generating curve delta * h(.), using the
// same Riemann approximation as the estimator.
double true_estimand(const EffectCurve& curve, double delta,
                     const EstimandSpec& spec, RiemannMethod method,
                     int max_exposure);

// Contrast over the saturated delta(1..S) scale (weights on delta_hat_s);
// exposed for the variance-decomposition checks.
Eigen::RowVectorXd saturated_contrast(const EstimandSpec& spec,
                                      RiemannMethod method, int max_exposure);

}  // namespace swedge
