#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "swedge/design.hpp"
#include "swedge/effect_curve.hpp"

namespace swedge {

// Parameters of the generating model
//   Y_ijk = mu + beta_j + delta * h(s_ij) + C_i + eta_i * X_ij + eps_ijk
// with C_i ~ N(0, tau2), eta_i ~ N(rho * nu / tau * C_i, ...) jointly normal
// with Cov(C_i, eta_i) = rho * tau * nu, eps ~ N(0, sigma2).  nu = 0 recovers
// the shared-intercept model.
struct GenParams {
    double mu = 1.0;
    std::vector<double> period_effects;  // beta_1..beta_J (beta_1 = 0)
    double delta = 0.5;                  // scale of the effect curve
    EffectCurve curve;                   // h(1..S)
    double tau = 0.5;                    // SD of cluster intercepts
    double sigma = 2.0;                  // SD of individual noise
    double nu = 0.0;                     // SD of random treatment effects
    double rho = 0.0;                    // corr(intercept, treatment effect)

    void validate(const StudyDesign& design) const;
};

// Linear secular trend beta_j = slope * (j - 1) / (J - 1), beta_1 = 0.
std::vector<double> linear_time_trend(int num_periods, double slope);

struct TrialRow {
    int cluster;    // 1..I
    int sequence;   // 1..Q
    int period;     // 1..J
    int treated;    // 0/1
    int exposure;   // 0..S
    double outcome;
};

struct TrialDataset {
    StudyDesign design;
    std::vector<TrialRow> rows;  // cluster-major, period-minor, individual-minor

    int num_rows() const { return static_cast<int>(rows.size()); }
};

// Simulate one complete trial.  Draws depend only on (params, design, seed).
TrialDataset generate(const StudyDesign& design, const GenParams& params,
                      std::uint64_t seed);

// Round-trip through the on-disk format:
// header cluster,sequence,period,treated,exposure,outcome.
void write_csv(const TrialDataset& data, const std::string& path);
TrialDataset read_csv(const std::string& path);

// Cluster-period summary used by the fitting routines.
struct CollapsedData {
    StudyDesign design;
    Eigen::MatrixXd means;      // I x J cell means
    Eigen::MatrixXi exposures;  // I x J exposure times
    double ssw = 0.0;           // within-cell sum of squares, all cells
    int cell_count = 0;         // K (constant across cells)
};

CollapsedData collapse(const TrialDataset& data);

// Sequence-by-period outcome means (Q x J), averaging clusters within
// a sequence; the sufficient statistics of the closed-form estimator.
Eigen::MatrixXd sequence_period_means(const TrialDataset& data);

}  // namespace swedge
