#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "swedge/datagen.hpp"
#include "swedge/design.hpp"
#include "swedge/spline.hpp"

namespace swedge {

// Raised when a model cannot be estimated on the given data (unidentifiable
// parameterization, optimizer failure, singular covariance).
struct EstimationError : std::runtime_error {
    explicit EstimationError(const std::string& what) : std::runtime_error(what) {}
};

enum class ModelKind { IT, ETI, RETI, NCS };

struct ModelSpec {
    ModelKind kind = ModelKind::ETI;
    int pool_from = 0;        // RETI: effects pooled at and beyond this exposure
    int spline_df = 0;        // NCS: degrees of freedom
    bool random_treatment = false;
    double ci_level = 0.95;

    static ModelSpec it();
    static ModelSpec eti();
    static ModelSpec reti(int pool_from);
    static ModelSpec ncs(int spline_df);

    std::string label() const;
    void validate(const StudyDesign& design) const;
};

struct VarianceComponents {
    double tau2 = 0.0;    // cluster intercept variance
    double sigma2 = 1.0;  // individual-level residual variance
    double nu2 = 0.0;     // random treatment effect variance
    double rho_re = 0.0;  // corr(intercept, treatment effect)
};

struct FittedModel {
    ModelSpec spec;
    StudyDesign design;
    Eigen::VectorXd beta_hat;    // [mu, beta_2, ..., beta_J]
    Eigen::VectorXd theta_hat;   // treatment parameters (model-dependent)
    Eigen::MatrixXd vcov_theta;  // GLS covariance of theta_hat
    VarianceComponents varcomp;
    double reml_value = 0.0;
    bool converged = false;
    int n_iter = 0;
    SplineBasis basis;           // populated for NCS fits
};

// REML fit: variance components by derivative-free maximization of the
// restricted likelihood (profiled over sigma2), fixed effects by GLS.
FittedModel fit(const TrialDataset& data, const ModelSpec& spec);
FittedModel fit_collapsed(const CollapsedData& data, const ModelSpec& spec);

// Restricted log-likelihood of the implied linear mixed model at the given
// variance components (individual-level scale).
double reml_criterion(const TrialDataset& data, const ModelSpec& spec,
                      const VarianceComponents& vc);
double reml_criterion(const CollapsedData& data, const ModelSpec& spec,
                      const VarianceComponents& vc);

// Maximum (unrestricted) log-likelihood, maximized over variance components;
// used by the likelihood ratio test.
double max_loglik(const CollapsedData& data, const ModelSpec& spec);

struct LrtResult {
    double statistic = 0.0;
    int df = 0;
    double p = 1.0;
};

// Likelihood ratio test of IT against ETI, both fit by maximum likelihood.
LrtResult lrt_it_vs_eti(const TrialDataset& data);

// Linear map from theta_hat to the fitted point treatment effects: row s
// gives delta_hat(s) = row . theta_hat, for s = 1..max_exposure.  RETI and IT
// rows flatten beyond their last parameter, so s may exceed max_exposure for
// those models.
Eigen::MatrixXd exposure_mapping(const FittedModel& model, int max_s);

}  // namespace swedge
