#include "swedge/mec.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <thread>

#include "swedge/dist.hpp"
#include "swedge/models.hpp"
#include "swedge/rng.hpp"

namespace swedge {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLog2Pi = 1.8378770664093454835606594728112;

}  // namespace

// ---- priors ----

MecPrior MecPrior::symmetric(int max_exposure) {
    MecPrior p;
    p.c.assign(static_cast<std::size_t>(max_exposure), 1.0);
    return p;
}

MecPrior MecPrior::informative(int max_exposure) {
    MecPrior p;
    const int heavy = (max_exposure + 1) / 2;
    for (int s = 1; s <= max_exposure; ++s) p.c.push_back(s <= heavy ? 5.0 : 1.0);
    return p;
}

void MecPrior::validate(int max_exposure) const {
    if (static_cast<int>(c.size()) != max_exposure)
        throw std::domain_error("mec prior: c must have one entry per exposure time");
    for (double ct : c)
        if (!(ct > 0.0)) throw std::domain_error("mec prior: all c_t must be > 0");
    if (!(delta_prior_sd > 0.0))
        throw std::domain_error("mec prior: delta_prior_sd must be > 0");
    if (!(omega_lo >= 0.0) || !(omega_hi > omega_lo))
        throw std::domain_error("mec prior: omega bounds invalid");
    if (!(sd_prior_scale > 0.0))
        throw std::domain_error("mec prior: sd_prior_scale must be > 0");
}

// ---- draws container ----

double MecDraws::rhat_for(const std::string& name) const {
    for (const auto& kv : rhat)
        if (kv.first == name) return kv.second;
    throw std::out_of_range("no rhat recorded for '" + name + "'");
}

Eigen::VectorXd MecDraws::curve_at(int d) const {
    Eigen::VectorXd out(S);
    double cum = 0.0;
    for (int s = 0; s < S; ++s) {
        cum += alpha(d, s);
        out(s) = delta[static_cast<std::size_t>(d)] * cum;
    }
    return out;
}

// ---- likelihood machinery ----

namespace {

// Sufficient statistics of the collapsed data for repeated likelihood
// evaluation: per-sequence sums and the second-moment matrix of cell means.
struct MecWork {
    StudyDesign design;
    int Q = 0, J = 0, I = 0, K = 0, S = 0;
    double cps = 0.0;
    Eigen::MatrixXd Z;                      // J x J: intercept + period dummies
    std::vector<Eigen::VectorXi> expo;      // per sequence: exposure by period
    std::vector<Eigen::VectorXd> sy_seq;    // per sequence: sum of cell means
    Eigen::VectorXd sy_tot;
    Eigen::MatrixXd G;                      // sum_i ybar_i ybar_i'
    double ssw = 0.0;
    double mw = 0.0;                        // within-cell residual df
    double mean_y = 0.0;
    double sd_y = 1.0;
};

MecWork make_work(const CollapsedData& cd) {
    MecWork w;
    w.design = cd.design;
    w.Q = cd.design.num_sequences;
    w.J = cd.design.num_periods();
    w.I = cd.design.num_clusters();
    w.K = cd.cell_count;
    w.S = cd.design.max_exposure();
    w.cps = static_cast<double>(cd.design.clusters_per_sequence);
    w.Z = Eigen::MatrixXd::Zero(w.J, w.J);
    for (int j = 1; j <= w.J; ++j) {
        w.Z(j - 1, 0) = 1.0;
        if (j >= 2) w.Z(j - 1, j - 1) = 1.0;
    }
    w.expo.resize(static_cast<std::size_t>(w.Q));
    w.sy_seq.assign(static_cast<std::size_t>(w.Q), Eigen::VectorXd::Zero(w.J));
    int treated_cells = 0;
    for (int q = 1; q <= w.Q; ++q) {
        Eigen::VectorXi e(w.J);
        for (int j = 1; j <= w.J; ++j) {
            e(j - 1) = exposure_time(cd.design, q, j);
            if (e(j - 1) > 0) ++treated_cells;
        }
        w.expo[static_cast<std::size_t>(q - 1)] = e;
    }
    if (treated_cells == 0)
        throw EstimationError("mec: data contain no treated observations");
    w.sy_tot = Eigen::VectorXd::Zero(w.J);
    w.G = Eigen::MatrixXd::Zero(w.J, w.J);
    for (int i = 1; i <= w.I; ++i) {
        const int q = cd.design.sequence_of_cluster(i);
        const Eigen::VectorXd y = cd.means.row(i - 1).transpose();
        w.sy_seq[static_cast<std::size_t>(q - 1)] += y;
        w.sy_tot += y;
        w.G += y * y.transpose();
    }
    w.ssw = cd.ssw;
    w.mw = static_cast<double>(w.I) * w.J * (w.K - 1);
    // Grand mean / total SD of individual outcomes, for initialization only.
    const double n_cells = static_cast<double>(w.I) * w.J;
    const double grand_mean = w.sy_tot.sum() / n_cells;
    double centered = w.ssw;
    for (int i = 1; i <= w.I; ++i)
        centered += static_cast<double>(w.K) *
                    (cd.means.row(i - 1).transpose().array() - grand_mean)
                        .matrix()
                        .squaredNorm();
    w.mean_y = grand_mean;
    w.sd_y = std::sqrt(
        std::max(centered / std::max(n_cells * w.K - 1.0, 1.0), 1e-12));
    return w;
}

// Treatment profile of sequence q: cumulative-alpha value at each period.
Eigen::VectorXd curve_profile(const MecWork& w, int q, const Eigen::VectorXd& cum) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(w.J);
    const Eigen::VectorXi& e = w.expo[static_cast<std::size_t>(q - 1)];
    for (int j = 0; j < w.J; ++j)
        if (e(j) > 0) g(j) = cum(e(j) - 1);
    return g;
}

// Exact individual-level log likelihood with cluster intercepts marginalized.
double log_likelihood(const MecWork& w, const Eigen::VectorXd& gamma,
                      double delta, const Eigen::VectorXd& cum, double tau,
                      double sigma) {
    if (!(sigma > 0.0) || !(tau >= 0.0)) return kNegInf;
    const int J = w.J;
    Eigen::MatrixXd V = (sigma * sigma / w.K) * Eigen::MatrixXd::Identity(J, J);
    V.array() += tau * tau;
    Eigen::LLT<Eigen::MatrixXd> llt(V);
    if (llt.info() != Eigen::Success) return kNegInf;
    const double logdet_v = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    const Eigen::MatrixXd Vinv = llt.solve(Eigen::MatrixXd::Identity(J, J));

    double quad = (Vinv.array() * w.G.array()).sum();
    const Eigen::VectorXd zg = w.Z * gamma;
    for (int q = 1; q <= w.Q; ++q) {
        const Eigen::VectorXd m = zg + delta * curve_profile(w, q, cum);
        const Eigen::VectorXd a = Vinv * m;
        quad += -2.0 * a.dot(w.sy_seq[static_cast<std::size_t>(q - 1)]) +
                w.cps * m.dot(a);
    }
    const double cells = static_cast<double>(w.I) * J;
    double ll = -0.5 * (cells * kLog2Pi + w.I * logdet_v + quad);
    ll += -0.5 * (w.mw * (kLog2Pi + 2.0 * std::log(sigma)) +
                  w.ssw / (sigma * sigma));
    ll += -0.5 * cells * std::log(static_cast<double>(w.K));
    return ll;
}

double log_prior(const MecPrior& prior, double delta, double omega,
                 const Eigen::VectorXd& alpha, double tau, double sigma) {
    const int S = static_cast<int>(prior.c.size());
    if (alpha.size() != S) return kNegInf;
    if (!(omega >= prior.omega_lo && omega <= prior.omega_hi)) return kNegInf;
    if (!(tau >= 0.0) || !(sigma > 0.0)) return kNegInf;
    double sum_a = 0.0;
    for (int t = 0; t < S; ++t) {
        if (!(alpha(t) > 0.0)) return kNegInf;
        sum_a += alpha(t);
    }
    if (std::abs(sum_a - 1.0) > 1e-8) return kNegInf;

    double lp = 0.0;
    const double sd = prior.delta_prior_sd;
    lp += -0.5 * (kLog2Pi + 2.0 * std::log(sd)) - delta * delta / (2.0 * sd * sd);
    lp += -std::log(prior.omega_hi - prior.omega_lo);
    double shape_sum = 0.0;
    for (int t = 0; t < S; ++t) {
        const double a = prior.c[static_cast<std::size_t>(t)] * omega;
        shape_sum += a;
        lp += (a - 1.0) * std::log(alpha(t)) - std::lgamma(a);
    }
    lp += std::lgamma(shape_sum);
    const double hs = prior.sd_prior_scale;
    constexpr double kPi = 3.14159265358979323846;
    const double half_norm_const =
        0.5 * std::log(2.0) - 0.5 * std::log(kPi) - std::log(hs);
    lp += half_norm_const - tau * tau / (2.0 * hs * hs);
    lp += half_norm_const - sigma * sigma / (2.0 * hs * hs);
    return lp;
}

Eigen::VectorXd cumsum(const Eigen::VectorXd& alpha) {
    Eigen::VectorXd cum(alpha.size());
    double acc = 0.0;
    for (int t = 0; t < alpha.size(); ++t) {
        acc += alpha(t);
        cum(t) = acc;
    }
    return cum;
}

}  // namespace

double log_posterior(const MecParams& params, const CollapsedData& data,
                     const MecPrior& prior) {
    const int J = data.design.num_periods();
    const int S = data.design.max_exposure();
    prior.validate(S);
    if (params.beta.size() != J - 1)
        throw std::domain_error("mec: beta must have J-1 entries");
    if (params.alpha.size() != S)
        throw std::domain_error("mec: alpha must have one entry per exposure time");
    const double lp = log_prior(prior, params.delta, params.omega, params.alpha,
                                params.tau, params.sigma);
    if (lp == kNegInf) return kNegInf;
    const MecWork w = make_work(data);
    Eigen::VectorXd gamma(J);
    gamma(0) = params.mu;
    gamma.tail(J - 1) = params.beta;
    return lp + log_likelihood(w, gamma, params.delta, cumsum(params.alpha),
                               params.tau, params.sigma);
}

double log_posterior(const MecParams& params, const TrialDataset& data,
                     const MecPrior& prior) {
    return log_posterior(params, collapse(data), prior);
}

// ---- sampler ----

namespace {

// State in the transformed space the random-walk blocks operate on.
struct ChainState {
    Eigen::VectorXd gamma;   // mu, beta_2..beta_J (Gibbs block)
    double delta = 0.0;
    double z_omega = 0.0;    // logit over [omega_lo, omega_hi]
    Eigen::VectorXd z_alpha; // additive log-ratio, length S-1
    double log_tau = 0.0;
    double log_sigma = 0.0;

    // cached untransformed values and target density
    double omega = 1.0;
    Eigen::VectorXd alpha;
    double tau = 0.1, sigma = 1.0;
    double target = kNegInf;  // log posterior + transform Jacobians
};

double inv_logit(double z) { return 1.0 / (1.0 + std::exp(-z)); }

void decode_omega(const MecPrior& prior, double z, double& omega, double& log_jac) {
    const double u = inv_logit(z);
    omega = prior.omega_lo + (prior.omega_hi - prior.omega_lo) * u;
    // d omega / d z = (omega - lo)(hi - omega)/(hi - lo)
    const double num = (omega - prior.omega_lo) * (prior.omega_hi - omega);
    log_jac = num > 0.0 ? std::log(num / (prior.omega_hi - prior.omega_lo)) : kNegInf;
}

void decode_alpha(const Eigen::VectorXd& z, Eigen::VectorXd& alpha, double& log_jac) {
    const int S = static_cast<int>(z.size()) + 1;
    alpha.resize(S);
    double mx = 0.0;
    for (int t = 0; t < S - 1; ++t) mx = std::max(mx, z(t));
    double denom = std::exp(-mx);
    for (int t = 0; t < S - 1; ++t) denom += std::exp(z(t) - mx);
    for (int t = 0; t < S - 1; ++t) alpha(t) = std::exp(z(t) - mx) / denom;
    alpha(S - 1) = std::exp(-mx) / denom;
    log_jac = 0.0;
    for (int t = 0; t < S; ++t) log_jac += std::log(alpha(t));
}

// Full transformed-space target: log posterior plus the Jacobians of every
// transformed coordinate (constant terms cancel per block but keeping the
// full value lets all blocks share one cached number).
double eval_target(const MecWork& w, const MecPrior& prior, ChainState& st) {
    double jac_omega;
    decode_omega(prior, st.z_omega, st.omega, jac_omega);
    double jac_alpha;
    decode_alpha(st.z_alpha, st.alpha, jac_alpha);
    st.tau = std::exp(st.log_tau);
    st.sigma = std::exp(st.log_sigma);
    const double lp = log_prior(prior, st.delta, st.omega, st.alpha, st.tau, st.sigma);
    if (lp == kNegInf) return kNegInf;
    const double ll = log_likelihood(w, st.gamma, st.delta, cumsum(st.alpha),
                                     st.tau, st.sigma);
    return lp + ll + jac_omega + jac_alpha + st.log_tau + st.log_sigma;
}

struct BlockStats {
    double log_scale = 0.0;
    long long proposals = 0, accepts = 0;  // post-warmup only
};

struct ChainOutput {
    std::vector<double> delta, omega, tau, sigma;
    Eigen::MatrixXd alpha;
    double acc_delta = 0.0, acc_omega = 0.0, acc_alpha = 0.0, acc_tausigma = 0.0;
};

void run_chain(const MecWork& w, const MecPrior& prior, const MecOptions& opts,
               int chain, ChainOutput& out) {
    RandomStream rng(derive_seed(opts.seed, 0x4D454331ULL,
                                 static_cast<std::uint64_t>(chain)));
    const int S = w.S;
    const int J = w.J;

    ChainState st;
    st.gamma = Eigen::VectorXd::Zero(J);
    st.gamma(0) = w.mean_y;
    st.delta = rng.normal();
    st.z_omega = rng.normal();
    st.z_alpha = Eigen::VectorXd::Zero(S - 1);
    for (int t = 0; t < S - 1; ++t) st.z_alpha(t) = 0.5 * rng.normal();
    st.log_tau = std::log(0.05 + std::abs(0.5 * rng.normal()));
    st.log_sigma = std::log(w.sd_y * (0.7 + 0.6 * rng.uniform()));
    st.target = eval_target(w, prior, st);

    BlockStats b_delta, b_omega, b_alpha, b_ts;
    b_delta.log_scale = std::log(0.5);
    b_omega.log_scale = std::log(0.5);
    b_alpha.log_scale = std::log(0.3);
    b_ts.log_scale = std::log(0.2);

    const int total = opts.n_warmup + opts.n_samples;
    out.delta.resize(static_cast<std::size_t>(opts.n_samples));
    out.omega.resize(static_cast<std::size_t>(opts.n_samples));
    out.tau.resize(static_cast<std::size_t>(opts.n_samples));
    out.sigma.resize(static_cast<std::size_t>(opts.n_samples));
    out.alpha.resize(opts.n_samples, S);

    const auto rw_update = [&](BlockStats& bs, int iter, auto&& mutate) {
        ChainState prop = st;
        mutate(prop, std::exp(bs.log_scale));
        prop.target = eval_target(w, prior, prop);
        const double log_ratio = prop.target - st.target;
        const double acc_prob =
            prop.target == kNegInf ? 0.0 : std::min(1.0, std::exp(log_ratio));
        const bool accept = rng.uniform() <= acc_prob && prop.target != kNegInf;
        if (accept) st = std::move(prop);
        if (iter < opts.n_warmup) {
            const double rate =
                0.5 / std::pow(1.0 + static_cast<double>(iter) / 50.0, 0.7);
            bs.log_scale += rate * (acc_prob - 0.3);
            bs.log_scale = std::clamp(bs.log_scale, -8.0, 3.0);
        } else {
            ++bs.proposals;
            if (accept) ++bs.accepts;
        }
    };

    for (int iter = 0; iter < total; ++iter) {
        // Gibbs draw for (mu, beta): conditionally Gaussian under the flat
        // prior; V is shared by all clusters at fixed (tau, sigma).
        {
            Eigen::MatrixXd V =
                (st.sigma * st.sigma / w.K) * Eigen::MatrixXd::Identity(J, J);
            V.array() += st.tau * st.tau;
            const Eigen::MatrixXd Vinv =
                Eigen::LLT<Eigen::MatrixXd>(V).solve(Eigen::MatrixXd::Identity(J, J));
            const Eigen::VectorXd cum = cumsum(st.alpha);
            Eigen::VectorXd resid_sum = w.sy_tot;
            for (int q = 1; q <= w.Q; ++q)
                resid_sum -= w.cps * st.delta * curve_profile(w, q, cum);
            const Eigen::MatrixXd A =
                static_cast<double>(w.I) * w.Z.transpose() * Vinv * w.Z;
            const Eigen::VectorXd bvec = w.Z.transpose() * (Vinv * resid_sum);
            Eigen::LLT<Eigen::MatrixXd> llt(A);
            Eigen::VectorXd zdraw(J);
            for (int j = 0; j < J; ++j) zdraw(j) = rng.normal();
            st.gamma = llt.solve(bvec) + llt.matrixU().solve(zdraw);
            st.target = eval_target(w, prior, st);
        }

        rw_update(b_delta, iter, [&](ChainState& p, double scale) {
            p.delta += scale * rng.normal();
        });
        rw_update(b_omega, iter, [&](ChainState& p, double scale) {
            p.z_omega += scale * rng.normal();
        });
        rw_update(b_alpha, iter, [&](ChainState& p, double scale) {
            for (int t = 0; t < p.z_alpha.size(); ++t)
                p.z_alpha(t) += scale * rng.normal();
        });
        rw_update(b_ts, iter, [&](ChainState& p, double scale) {
            p.log_tau += scale * rng.normal();
            p.log_sigma += scale * rng.normal();
        });

        if (iter >= opts.n_warmup) {
            const int t = iter - opts.n_warmup;
            out.delta[static_cast<std::size_t>(t)] = st.delta;
            out.omega[static_cast<std::size_t>(t)] = st.omega;
            out.tau[static_cast<std::size_t>(t)] = st.tau;
            out.sigma[static_cast<std::size_t>(t)] = st.sigma;
            out.alpha.row(t) = st.alpha.transpose();
        }
    }

    const auto rate_of = [](const BlockStats& bs) {
        return bs.proposals > 0
                   ? static_cast<double>(bs.accepts) / static_cast<double>(bs.proposals)
                   : 0.0;
    };
    out.acc_delta = rate_of(b_delta);
    out.acc_omega = rate_of(b_omega);
    out.acc_alpha = rate_of(b_alpha);
    out.acc_tausigma = rate_of(b_ts);
}

double split_rhat(const std::vector<const double*>& chains, int n_samples) {
    const int half = n_samples / 2;
    if (half < 2) return 1.0;
    std::vector<double> means, vars;
    for (const double* chain : chains) {
        for (int part = 0; part < 2; ++part) {
            const double* seg = chain + part * half;
            double m = 0.0;
            for (int t = 0; t < half; ++t) m += seg[t];
            m /= half;
            double v = 0.0;
            for (int t = 0; t < half; ++t) v += (seg[t] - m) * (seg[t] - m);
            v /= (half - 1);
            means.push_back(m);
            vars.push_back(v);
        }
    }
    const std::size_t m_seq = means.size();
    double w_mean = 0.0, grand = 0.0;
    for (std::size_t k = 0; k < m_seq; ++k) {
        w_mean += vars[k];
        grand += means[k];
    }
    w_mean /= static_cast<double>(m_seq);
    grand /= static_cast<double>(m_seq);
    double b = 0.0;
    for (double m : means) b += (m - grand) * (m - grand);
    b *= static_cast<double>(half) / static_cast<double>(m_seq - 1);
    if (w_mean <= 0.0) return b <= 1e-300 ? 1.0 : std::numeric_limits<double>::infinity();
    const double var_plus =
        (static_cast<double>(half - 1) / half) * w_mean + b / half;
    return std::sqrt(var_plus / w_mean);
}

}  // namespace

MecDraws fit_mec(const TrialDataset& data, const MecPrior& prior,
                 const MecOptions& opts) {
    const CollapsedData cd = collapse(data);
    const int S = cd.design.max_exposure();
    prior.validate(S);
    if (opts.n_chains < 1 || opts.n_warmup < 1 || opts.n_samples < 1)
        throw std::domain_error("mec: chain/warmup/sample counts must be >= 1");
    const MecWork w = make_work(cd);

    std::vector<ChainOutput> outputs(static_cast<std::size_t>(opts.n_chains));
    const int jobs = std::max(1, std::min(opts.jobs, opts.n_chains));
    if (jobs == 1) {
        for (int c = 0; c < opts.n_chains; ++c)
            run_chain(w, prior, opts, c, outputs[static_cast<std::size_t>(c)]);
    } else {
        std::vector<std::thread> pool;
        std::atomic<int> next{0};
        for (int t = 0; t < jobs; ++t)
            pool.emplace_back([&]() {
                for (;;) {
                    const int c = next.fetch_add(1);
                    if (c >= opts.n_chains) return;
                    run_chain(w, prior, opts, c, outputs[static_cast<std::size_t>(c)]);
                }
            });
        for (std::thread& th : pool) th.join();
    }

    MecDraws draws;
    draws.S = S;
    draws.n_chains = opts.n_chains;
    draws.n_warmup = opts.n_warmup;
    draws.n_samples = opts.n_samples;
    const int total = opts.n_chains * opts.n_samples;
    draws.delta.reserve(static_cast<std::size_t>(total));
    draws.omega.reserve(static_cast<std::size_t>(total));
    draws.tau.reserve(static_cast<std::size_t>(total));
    draws.sigma.reserve(static_cast<std::size_t>(total));
    draws.alpha.resize(total, S);
    for (int c = 0; c < opts.n_chains; ++c) {
        const ChainOutput& co = outputs[static_cast<std::size_t>(c)];
        for (int t = 0; t < opts.n_samples; ++t) {
            draws.alpha.row(c * opts.n_samples + t) = co.alpha.row(t);
            draws.delta.push_back(co.delta[static_cast<std::size_t>(t)]);
            draws.omega.push_back(co.omega[static_cast<std::size_t>(t)]);
            draws.tau.push_back(co.tau[static_cast<std::size_t>(t)]);
            draws.sigma.push_back(co.sigma[static_cast<std::size_t>(t)]);
        }
    }

    const auto rhat_of = [&](const std::vector<std::vector<double>>& per_chain,
                             const std::string& name) {
        std::vector<const double*> ptrs;
        for (const auto& v : per_chain) ptrs.push_back(v.data());
        draws.rhat.emplace_back(name, split_rhat(ptrs, opts.n_samples));
    };
    std::vector<std::vector<double>> tmp(static_cast<std::size_t>(opts.n_chains));
    const auto gather = [&](const std::function<double(const ChainOutput&, int)>& get) {
        for (int c = 0; c < opts.n_chains; ++c) {
            auto& v = tmp[static_cast<std::size_t>(c)];
            v.resize(static_cast<std::size_t>(opts.n_samples));
            for (int t = 0; t < opts.n_samples; ++t)
                v[static_cast<std::size_t>(t)] = get(outputs[static_cast<std::size_t>(c)], t);
        }
    };
    gather([](const ChainOutput& co, int t) { return co.delta[static_cast<std::size_t>(t)]; });
    rhat_of(tmp, "delta");
    gather([](const ChainOutput& co, int t) { return co.omega[static_cast<std::size_t>(t)]; });
    rhat_of(tmp, "omega");
    gather([](const ChainOutput& co, int t) { return co.tau[static_cast<std::size_t>(t)]; });
    rhat_of(tmp, "tau");
    gather([](const ChainOutput& co, int t) { return co.sigma[static_cast<std::size_t>(t)]; });
    rhat_of(tmp, "sigma");
    for (int s = 0; s < S; ++s) {
        gather([s](const ChainOutput& co, int t) { return co.alpha(t, s); });
        rhat_of(tmp, "alpha" + std::to_string(s + 1));
    }

    double acc_d = 0.0, acc_o = 0.0, acc_a = 0.0, acc_t = 0.0;
    for (const ChainOutput& co : outputs) {
        acc_d += co.acc_delta;
        acc_o += co.acc_omega;
        acc_a += co.acc_alpha;
        acc_t += co.acc_tausigma;
    }
    const double nc = static_cast<double>(opts.n_chains);
    draws.acceptance.emplace_back("delta", acc_d / nc);
    draws.acceptance.emplace_back("omega", acc_o / nc);
    draws.acceptance.emplace_back("alpha", acc_a / nc);
    draws.acceptance.emplace_back("tausigma", acc_t / nc);

    draws.convergence_warning = draws.rhat_for("delta") > 1.1;
    return draws;
}

// ---- posterior summaries ----

namespace {

double quantile_sorted(std::vector<double> v, double p) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    if (n == 1) return v[0];
    const double h = (static_cast<double>(n) - 1.0) * p;
    const std::size_t lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = lo + 1 < n ? lo + 1 : lo;
    return v[lo] + (h - std::floor(h)) * (v[hi] - v[lo]);
}

}  // namespace

EstimandEstimate mec_estimands(const MecDraws& draws, const EstimandSpec& spec,
                               RiemannMethod method, double level) {
    if (draws.n_draws() == 0)
        throw std::domain_error("mec_estimands: no draws");
    if (level <= 0.0 || level >= 1.0)
        throw std::domain_error("mec_estimands: level must be in (0, 1)");
    EstimandSpec resolved = spec;
    if (spec.kind == EstimandSpec::Kind::LTE) resolved = EstimandSpec::pte(draws.S);
    const Eigen::RowVectorXd m = saturated_contrast(
        resolved, method,
        resolved.kind == EstimandSpec::Kind::TATE ? std::max(resolved.s2, 1)
                                                  : std::max(resolved.s0, 1));
    if (m.size() > draws.S)
        throw std::domain_error("mec_estimands: estimand beyond max exposure");

    const int n = draws.n_draws();
    std::vector<double> per_draw(static_cast<std::size_t>(n));
    double mean_delta = 0.0;
    Eigen::VectorXd mean_alpha = Eigen::VectorXd::Zero(draws.S);
    for (int d = 0; d < n; ++d) {
        const Eigen::VectorXd curve = draws.curve_at(d);
        double v = 0.0;
        for (int s = 0; s < m.size(); ++s) v += m(s) * curve(s);
        per_draw[static_cast<std::size_t>(d)] = v;
        mean_delta += draws.delta[static_cast<std::size_t>(d)];
        mean_alpha += draws.alpha.row(d).transpose();
    }
    mean_delta /= n;
    mean_alpha /= n;

    // Point estimate from posterior means of the parameters themselves.
    Eigen::VectorXd cum = mean_alpha;
    for (int s = 1; s < draws.S; ++s) cum(s) += cum(s - 1);
    double point = 0.0;
    for (int s = 0; s < m.size(); ++s) point += m(s) * mean_delta * cum(s);

    double mean_v = 0.0, var_v = 0.0;
    for (double v : per_draw) mean_v += v;
    mean_v /= n;
    for (double v : per_draw) var_v += (v - mean_v) * (v - mean_v);
    var_v /= std::max(n - 1, 1);

    EstimandEstimate out;
    out.spec = spec;
    out.method = method;
    out.estimate = point;
    out.se = std::sqrt(var_v);
    out.ci_lo = quantile_sorted(per_draw, 0.5 * (1.0 - level));
    out.ci_hi = quantile_sorted(per_draw, 1.0 - 0.5 * (1.0 - level));
    out.z = out.se > 0.0 ? out.estimate / out.se : 0.0;
    out.p = out.se > 0.0 ? two_sided_p(out.z) : (out.estimate == 0.0 ? 1.0 : 0.0);
    return out;
}

std::vector<CurvePoint> mec_effect_curve(const MecDraws& draws, double level) {
    const int n = draws.n_draws();
    if (n == 0) throw std::domain_error("mec_effect_curve: no draws");
    std::vector<CurvePoint> out;
    Eigen::MatrixXd curves(n, draws.S);
    double mean_delta = 0.0;
    Eigen::VectorXd mean_alpha = Eigen::VectorXd::Zero(draws.S);
    for (int d = 0; d < n; ++d) {
        curves.row(d) = draws.curve_at(d).transpose();
        mean_delta += draws.delta[static_cast<std::size_t>(d)];
        mean_alpha += draws.alpha.row(d).transpose();
    }
    mean_delta /= n;
    mean_alpha /= n;
    double cum = 0.0;
    for (int s = 0; s < draws.S; ++s) {
        cum += mean_alpha(s);
        CurvePoint pt;
        pt.s = s + 1;
        pt.estimate = mean_delta * cum;
        std::vector<double> col(static_cast<std::size_t>(n));
        for (int d = 0; d < n; ++d) col[static_cast<std::size_t>(d)] = curves(d, s);
        pt.ci_lo = quantile_sorted(col, 0.5 * (1.0 - level));
        pt.ci_hi = quantile_sorted(col, 1.0 - 0.5 * (1.0 - level));
        out.push_back(pt);
    }
    return out;
}

}  // namespace swedge
