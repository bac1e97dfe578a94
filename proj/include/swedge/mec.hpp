#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "swedge/datagen.hpp"
#include "swedge/estimands.hpp"

namespace swedge {

// Priors of the monotone effect curve model: the treatment effect at
// exposure s is delta * (alpha_1 + ... + alpha_s) with alpha on the simplex.
struct MecPrior {
    std::vector<double> c;          // Dirichlet shape multipliers c_1..c_S
    double delta_prior_sd = 100.0;  // delta ~ Normal(0, sd^2)
    double omega_lo = 0.01;         // omega ~ Uniform(lo, hi)
    double omega_hi = 100.0;
    double sd_prior_scale = 10.0;   // tau, sigma ~ half-Normal(0, scale^2)

    static MecPrior symmetric(int max_exposure);
    // Front-loaded shape (5,...,5,1,...,1): first half of the rise expected
    // within the first ceil(S/2) exposure times.
    static MecPrior informative(int max_exposure);

    void validate(int max_exposure) const;
};

struct MecOptions {
    int n_chains = 4;
    int n_warmup = 2500;
    int n_samples = 2500;
    std::uint64_t seed = 0;
    int jobs = 1;  // concurrent chains
};

// One point in parameter space (untransformed scale).
struct MecParams {
    double mu = 0.0;
    Eigen::VectorXd beta;   // beta_2..beta_J
    double delta = 0.0;
    double omega = 1.0;
    Eigen::VectorXd alpha;  // simplex of length S
    double tau = 0.0;
    double sigma = 1.0;
};

struct MecDraws {
    int S = 0;
    int n_chains = 0, n_warmup = 0, n_samples = 0;
    // Kept draws, chain-major: index = chain * n_samples + t.
    std::vector<double> delta, omega, tau, sigma;
    Eigen::MatrixXd alpha;  // n_draws x S
    std::vector<std::pair<std::string, double>> rhat;  // split-Rhat per parameter
    std::vector<std::pair<std::string, double>> acceptance;  // per proposal block
    bool convergence_warning = false;

    int n_draws() const { return static_cast<int>(delta.size()); }
    double rhat_for(const std::string& name) const;
    // delta * cumsum(alpha) of draw d.
    Eigen::VectorXd curve_at(int d) const;
};

// Log posterior density (log prior + exact individual-level log likelihood
// with cluster intercepts marginalized).  Returns -inf outside the support.
double log_posterior(const MecParams& params, const CollapsedData& data,
                     const MecPrior& prior);
double log_posterior(const MecParams& params, const TrialDataset& data,
                     const MecPrior& prior);

// Adaptive random-walk Metropolis-within-Gibbs sampler.
MecDraws fit_mec(const TrialDataset& data, const MecPrior& prior,
                 const MecOptions& opts);

// Posterior point estimate (from posterior means), equal-tailed credible
// interval, and posterior-sd-based z/p for the requested estimand.
EstimandEstimate mec_estimands(const MecDraws& draws, const EstimandSpec& spec,
                               RiemannMethod method = RiemannMethod::Right,
                               double level = 0.95);

std::vector<CurvePoint> mec_effect_curve(const MecDraws& draws,
                                         double level = 0.95);

}  // namespace swedge
