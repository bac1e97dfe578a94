#pragma once

#include <vector>

#include <Eigen/Dense>

#include "swedge/design.hpp"

namespace swedge {

// Decomposition of the expected immediate-treatment (IT) estimate as a
// weighted combination of the point treatment effects delta(1..Q).
struct WeightProfile {
    int Q = 0;
    double phi = 0.0;              // exchangeable correlation of cell means
    std::vector<double> weights;   // w(1..Q)
};

// Within-cluster correlation structure of a complete trial, used by the
// numerical weight oracle.
struct CorrelationSpec {
    enum class Kind { Exchangeable, NestedExchangeable, RandomTreatment };
    Kind kind = Kind::Exchangeable;
    double phi = 0.0;      // exchangeable: correlation between cell means
    double rho_w = 0.0;    // nested: same-period pairs
    double rho_b = 0.0;    // nested: cross-period pairs
    double rho_0 = 0.0;    // random treatment: both control
    double rho_1 = 0.0;    // random treatment: both treated
    double rho_10 = 0.0;   // random treatment: mixed pair

    static CorrelationSpec exchangeable(double phi);
    static CorrelationSpec nested_exchangeable(double rho_w, double rho_b);
    static CorrelationSpec random_treatment(double rho_0, double rho_1, double rho_10);
};

// Closed-form weight w(Q, phi, s) attached to delta(s) in the expectation of
// the IT estimator under a complete balanced design.
double weight(int Q, double phi, int s);

WeightProfile weight_profile(int Q, double phi);

// Closed-form IT estimate from the Q x (Q+1) matrix of sequence-period means.
double it_closed_form(const Eigen::MatrixXd& means, int Q, double phi);

// E[IT estimate] = sum_s w(s) * pte(s).
double expected_it_estimate(const WeightProfile& profile,
                            const std::vector<double>& pte);

// Independent oracle: recovers the weights for an arbitrary correlation
// structure by evaluating the GLS projection of the IT model analytically.
WeightProfile numeric_weights(const StudyDesign& design, const CorrelationSpec& corr);

}  // namespace swedge
