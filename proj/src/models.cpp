#include "swedge/models.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>

#include "swedge/dist.hpp"

namespace swedge {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLog2Pi = 1.8378770664093454835606594728112;

}  // namespace

// ---- model specification ----

ModelSpec ModelSpec::it() {
    ModelSpec s;
    s.kind = ModelKind::IT;
    return s;
}

ModelSpec ModelSpec::eti() {
    ModelSpec s;
    s.kind = ModelKind::ETI;
    return s;
}

ModelSpec ModelSpec::reti(int pool_from) {
    ModelSpec s;
    s.kind = ModelKind::RETI;
    s.pool_from = pool_from;
    return s;
}

ModelSpec ModelSpec::ncs(int spline_df) {
    ModelSpec s;
    s.kind = ModelKind::NCS;
    s.spline_df = spline_df;
    return s;
}

std::string ModelSpec::label() const {
    std::string base;
    switch (kind) {
        case ModelKind::IT: base = "it"; break;
        case ModelKind::ETI: base = "eti"; break;
        case ModelKind::RETI: base = "reti:" + std::to_string(pool_from); break;
        case ModelKind::NCS: base = "ncs:" + std::to_string(spline_df); break;
    }
    if (random_treatment) base += "-rte";
    return base;
}

void ModelSpec::validate(const StudyDesign& design) const {
    design.validate();
    const int S = design.max_exposure();
    if (kind == ModelKind::RETI && (pool_from < 1 || pool_from > S))
        throw std::domain_error("model: RETI pooling time must be in [1, max exposure]");
    if (kind == ModelKind::NCS && (spline_df < 2 || spline_df > S))
        throw std::domain_error("model: NCS df must be in [2, max exposure]");
    if (ci_level <= 0.0 || ci_level >= 1.0)
        throw std::domain_error("model: ci_level must be in (0, 1)");
}

// ---- fitting workspace ----

namespace {

int treatment_dim(const ModelSpec& spec, int S) {
    switch (spec.kind) {
        case ModelKind::IT: return 1;
        case ModelKind::ETI: return S;
        case ModelKind::RETI: return spec.pool_from;
        case ModelKind::NCS: return spec.spline_df;
    }
    return 0;
}

struct Workspace {
    const CollapsedData* cd = nullptr;
    ModelSpec spec;
    int Q = 0, J = 0, I = 0, K = 0, S = 0;
    int p = 0;                            // total fixed effects
    int T = 0;                            // treatment parameters
    std::vector<Eigen::MatrixXd> X;       // per sequence, J x p
    std::vector<Eigen::VectorXd> xvec;    // per sequence, treatment indicator
    long long N = 0;                      // individual-level observations
    SplineBasis basis;                    // NCS only
};

// Treatment-block row for exposure time s (length T).
Eigen::RowVectorXd treatment_row(const Workspace& ws, int s) {
    Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(ws.T);
    if (s == 0) return row;
    switch (ws.spec.kind) {
        case ModelKind::IT:
            row(0) = 1.0;
            break;
        case ModelKind::ETI:
            row(s - 1) = 1.0;
            break;
        case ModelKind::RETI:
            row(std::min(s, ws.spec.pool_from) - 1) = 1.0;
            break;
        case ModelKind::NCS:
            row = ws.basis.evaluate(static_cast<double>(s)).transpose();
            break;
    }
    return row;
}

Workspace make_workspace(const CollapsedData& cd, const ModelSpec& spec) {
    spec.validate(cd.design);
    Workspace ws;
    ws.cd = &cd;
    ws.spec = spec;
    ws.Q = cd.design.num_sequences;
    ws.J = cd.design.num_periods();
    ws.I = cd.design.num_clusters();
    ws.K = cd.cell_count;
    ws.S = cd.design.max_exposure();
    ws.N = static_cast<long long>(ws.I) * ws.J * ws.K;
    ws.T = treatment_dim(spec, ws.S);
    ws.p = ws.J + ws.T;
    if (spec.kind == ModelKind::NCS) ws.basis = build_basis(spec.spline_df, ws.S);

    // Every exposure level the spec parameterizes must occur in the data.
    std::vector<int> seen(static_cast<std::size_t>(ws.S) + 1, 0);
    for (int i = 0; i < ws.I; ++i)
        for (int j = 0; j < ws.J; ++j) seen[static_cast<std::size_t>(cd.exposures(i, j))]++;
    const auto any_at_or_beyond = [&](int s) {
        for (int t = s; t <= ws.S; ++t)
            if (seen[static_cast<std::size_t>(t)] > 0) return true;
        return false;
    };
    std::vector<int> required;  // exposure levels needing their own cells
    switch (spec.kind) {
        case ModelKind::IT:
            if (!any_at_or_beyond(1))
                throw EstimationError("no treated observations in the data");
            break;
        case ModelKind::ETI:
        case ModelKind::NCS:
            for (int s = 1; s <= ws.S; ++s) required.push_back(s);
            break;
        case ModelKind::RETI:
            for (int s = 1; s < spec.pool_from; ++s) required.push_back(s);
            if (!any_at_or_beyond(spec.pool_from))
                throw EstimationError("no observations at exposure time " +
                                      std::to_string(spec.pool_from) + " or beyond");
            break;
    }
    for (int s : required)
        if (seen[static_cast<std::size_t>(s)] == 0)
            throw EstimationError("no observations at exposure time " + std::to_string(s));

    ws.X.resize(static_cast<std::size_t>(ws.Q));
    ws.xvec.resize(static_cast<std::size_t>(ws.Q));
    for (int q = 1; q <= ws.Q; ++q) {
        Eigen::MatrixXd Xq = Eigen::MatrixXd::Zero(ws.J, ws.p);
        Eigen::VectorXd xv = Eigen::VectorXd::Zero(ws.J);
        for (int j = 1; j <= ws.J; ++j) {
            Xq(j - 1, 0) = 1.0;
            if (j >= 2) Xq(j - 1, j - 1) = 1.0;
            const int s = exposure_time(cd.design, q, j);
            Xq.block(j - 1, ws.J, 1, ws.T) = treatment_row(ws, s);
            xv(j - 1) = treatment_indicator(cd.design, q, j);
        }
        ws.X[static_cast<std::size_t>(q - 1)] = Xq;
        ws.xvec[static_cast<std::size_t>(q - 1)] = xv;
    }
    return ws;
}

struct Evaluation {
    double value = kNegInf;
    double sigma2 = 0.0;
    Eigen::VectorXd theta;     // all fixed effects
    Eigen::MatrixXd info_inv;  // (sum X' W^-1 X)^-1
    bool ok = false;
};

// Log-likelihood (restricted or not) with the covariance written as
// V_i = sigma2 * W_i, W_i = I/K + lt 11' + lv x x' + rho sqrt(lt lv)(1x'+x1').
// When sigma2 < 0 it is profiled out analytically.
Evaluation evaluate(const Workspace& ws, double lt, double lv, double rho,
                    bool restricted, double sigma2_fixed = -1.0) {
    Evaluation ev;
    if (!(lt >= 0.0) || !(lv >= 0.0) || !(rho >= -1.0 && rho <= 1.0)) return ev;
    const int J = ws.J, p = ws.p;
    const double cps = static_cast<double>(ws.cd->design.clusters_per_sequence);
    const double cross = rho * std::sqrt(lt * lv);

    double logdet_w = 0.0;
    std::vector<Eigen::MatrixXd> Winv(static_cast<std::size_t>(ws.Q));
    Eigen::MatrixXd info = Eigen::MatrixXd::Zero(p, p);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(p);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(J);

    for (int q = 1; q <= ws.Q; ++q) {
        const Eigen::VectorXd& xv = ws.xvec[static_cast<std::size_t>(q - 1)];
        Eigen::MatrixXd W = Eigen::MatrixXd::Identity(J, J) / static_cast<double>(ws.K);
        W += lt * ones * ones.transpose();
        W += lv * xv * xv.transpose();
        W += cross * (ones * xv.transpose() + xv * ones.transpose());
        Eigen::LLT<Eigen::MatrixXd> llt(W);
        if (llt.info() != Eigen::Success) return ev;
        logdet_w += cps * 2.0 * llt.matrixLLT().diagonal().array().log().sum();
        Winv[static_cast<std::size_t>(q - 1)] = llt.solve(Eigen::MatrixXd::Identity(J, J));
        const Eigen::MatrixXd& Xq = ws.X[static_cast<std::size_t>(q - 1)];
        info += cps * Xq.transpose() * Winv[static_cast<std::size_t>(q - 1)] * Xq;
    }
    for (int i = 1; i <= ws.I; ++i) {
        const int q = ws.cd->design.sequence_of_cluster(i);
        const Eigen::MatrixXd& Xq = ws.X[static_cast<std::size_t>(q - 1)];
        rhs += Xq.transpose() * Winv[static_cast<std::size_t>(q - 1)] *
               ws.cd->means.row(i - 1).transpose();
    }

    Eigen::LLT<Eigen::MatrixXd> info_llt(info);
    if (info_llt.info() != Eigen::Success) return ev;
    const double logdet_info =
        2.0 * info_llt.matrixLLT().diagonal().array().log().sum();
    ev.theta = info_llt.solve(rhs);
    ev.info_inv = info_llt.solve(Eigen::MatrixXd::Identity(p, p));

    double quad = 0.0;
    for (int i = 1; i <= ws.I; ++i) {
        const int q = ws.cd->design.sequence_of_cluster(i);
        const Eigen::VectorXd r = ws.cd->means.row(i - 1).transpose() -
                                  ws.X[static_cast<std::size_t>(q - 1)] * ev.theta;
        quad += r.dot(Winv[static_cast<std::size_t>(q - 1)] * r);
    }

    const double N = static_cast<double>(ws.N);
    const double dof = restricted ? N - static_cast<double>(p) : N;
    double sigma2 = sigma2_fixed;
    if (sigma2 < 0.0) sigma2 = std::max((quad + ws.cd->ssw) / dof, 1e-300);
    if (!(sigma2 > 0.0)) return ev;

    double value = dof * (kLog2Pi + std::log(sigma2)) + logdet_w +
                   (quad + ws.cd->ssw) / sigma2;
    if (restricted) value += logdet_info;
    value = -0.5 * value -
            0.5 * static_cast<double>(ws.I) * J * std::log(static_cast<double>(ws.K));
    ev.value = value;
    ev.sigma2 = sigma2;
    ev.ok = true;
    return ev;
}

// ---- variance-component optimization ----

struct OptResult {
    double lt = 0.0, lv = 0.0, rho = 0.0;
    Evaluation ev;
    bool converged = false;
    int n_iter = 0;
};

// Single-component case: maximize over lambda_tau via the bounded map
// lambda = u/(1-u), grid scan then golden-section refinement.
OptResult optimize_1d(const Workspace& ws, bool restricted) {
    OptResult res;
    const auto objective = [&](double u) {
        const double lambda = u / (1.0 - u);
        ++res.n_iter;
        return evaluate(ws, lambda, 0.0, 0.0, restricted).value;
    };

    const int grid_n = 200;
    double best_u = 0.0, best_f = kNegInf;
    for (int g = 0; g <= grid_n; ++g) {
        const double u = 0.995 * static_cast<double>(g) / grid_n;
        const double f = objective(u);
        if (f > best_f) {
            best_f = f;
            best_u = u;
        }
    }
    const double step = 0.995 / grid_n;
    double a = std::max(0.0, best_u - step);
    double b = std::min(0.995, best_u + step);

    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - gr * (b - a), d = a + gr * (b - a);
    double fc = objective(c), fd = objective(d);
    while (b - a > 1e-8 * (1.0 + a)) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = objective(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = objective(d);
        }
    }
    const double u = fc > fd ? c : d;
    double f_final = std::max(fc, fd);
    double u_final = u;
    if (best_f > f_final) {  // guard against refinement losing the grid best
        u_final = best_u;
    }
    res.lt = u_final / (1.0 - u_final);
    res.ev = evaluate(ws, res.lt, 0.0, 0.0, restricted);
    res.converged = true;
    return res;
}

// Random-treatment case: Nelder-Mead over (log lt, log lv, atanh link for rho).
OptResult optimize_3d(const Workspace& ws, bool restricted) {
    OptResult res;
    const auto to_params = [](const Eigen::Vector3d& t) {
        const double lt = std::exp(std::clamp(t(0), -30.0, 30.0));
        const double lv = std::exp(std::clamp(t(1), -30.0, 30.0));
        const double rho = 0.99 * std::tanh(t(2));
        return std::array<double, 3>{lt, lv, rho};
    };
    const auto objective = [&](const Eigen::Vector3d& t) {
        const auto par = to_params(t);
        return -evaluate(ws, par[0], par[1], par[2], restricted).value;
    };

    // Start from the shared-intercept fit.
    OptResult base = optimize_1d(ws, restricted);
    res.n_iter = base.n_iter;
    Eigen::Vector3d start;
    start(0) = std::log(std::max(base.lt, 1e-4));
    start(1) = std::log(std::max(0.5 * base.lt, 1e-4));
    start(2) = 0.0;

    const int n = 3;
    std::vector<Eigen::Vector3d> pts(n + 1, start);
    std::vector<double> fval(n + 1);
    const double steps[3] = {1.0, 1.0, 0.5};
    for (int k = 1; k <= n; ++k) pts[static_cast<std::size_t>(k)](k - 1) += steps[k - 1];
    for (int k = 0; k <= n; ++k) fval[static_cast<std::size_t>(k)] = objective(pts[static_cast<std::size_t>(k)]);

    const int max_iter = 500;
    int iter = 0;
    for (; iter < max_iter; ++iter) {
        std::vector<int> order(static_cast<std::size_t>(n + 1));
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(),
                  [&](int u, int v) { return fval[static_cast<std::size_t>(u)] < fval[static_cast<std::size_t>(v)]; });
        std::vector<Eigen::Vector3d> spts(n + 1);
        std::vector<double> sf(n + 1);
        for (int k = 0; k <= n; ++k) {
            spts[static_cast<std::size_t>(k)] = pts[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])];
            sf[static_cast<std::size_t>(k)] = fval[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])];
        }
        pts = spts;
        fval = sf;
        if (std::abs(fval[n] - fval[0]) <
            1e-8 * (std::abs(fval[0]) + 1e-8)) {
            res.converged = true;
            break;
        }

        Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
        for (int k = 0; k < n; ++k) centroid += pts[static_cast<std::size_t>(k)];
        centroid /= static_cast<double>(n);

        const Eigen::Vector3d refl = centroid + (centroid - pts[n]);
        const double f_refl = objective(refl);
        ++res.n_iter;
        if (f_refl < fval[0]) {
            const Eigen::Vector3d exp_pt = centroid + 2.0 * (centroid - pts[n]);
            const double f_exp = objective(exp_pt);
            ++res.n_iter;
            if (f_exp < f_refl) {
                pts[n] = exp_pt;
                fval[n] = f_exp;
            } else {
                pts[n] = refl;
                fval[n] = f_refl;
            }
        } else if (f_refl < fval[n - 1]) {
            pts[n] = refl;
            fval[n] = f_refl;
        } else {
            const Eigen::Vector3d contr =
                f_refl < fval[n] ? centroid + 0.5 * (refl - centroid)
                                 : centroid + 0.5 * (pts[n] - centroid);
            const double f_contr = objective(contr);
            ++res.n_iter;
            if (f_contr < std::min(f_refl, fval[n])) {
                pts[n] = contr;
                fval[n] = f_contr;
            } else {
                for (int k = 1; k <= n; ++k) {
                    pts[static_cast<std::size_t>(k)] =
                        pts[0] + 0.5 * (pts[static_cast<std::size_t>(k)] - pts[0]);
                    fval[static_cast<std::size_t>(k)] = objective(pts[static_cast<std::size_t>(k)]);
                    ++res.n_iter;
                }
            }
        }
    }
    if (!res.converged && iter >= max_iter) {
        std::ostringstream msg;
        const auto par = to_params(pts[0]);
        msg << "variance-component optimizer did not converge in " << max_iter
            << " iterations (last iterate: lambda_tau=" << par[0]
            << ", lambda_nu=" << par[1] << ", rho=" << par[2]
            << ", criterion=" << -fval[0] << ")";
        throw EstimationError(msg.str());
    }

    const auto par = to_params(pts[0]);
    res.lt = par[0];
    res.lv = par[1];
    res.rho = par[2];
    res.ev = evaluate(ws, res.lt, res.lv, res.rho, restricted);
    return res;
}

OptResult optimize(const Workspace& ws, bool restricted) {
    return ws.spec.random_treatment ? optimize_3d(ws, restricted)
                                    : optimize_1d(ws, restricted);
}

}  // namespace

// ---- public fitting interface ----

FittedModel fit_collapsed(const CollapsedData& data, const ModelSpec& spec) {
    const Workspace ws = make_workspace(data, spec);
    OptResult opt = optimize(ws, /*restricted=*/true);
    if (!opt.ev.ok)
        throw EstimationError("REML criterion not evaluable at the optimum");

    FittedModel model;
    model.spec = spec;
    model.design = data.design;
    model.beta_hat = opt.ev.theta.head(ws.J);
    model.theta_hat = opt.ev.theta.tail(ws.T);
    model.vcov_theta =
        opt.ev.sigma2 * opt.ev.info_inv.bottomRightCorner(ws.T, ws.T);
    model.varcomp.tau2 = opt.lt * opt.ev.sigma2;
    model.varcomp.sigma2 = opt.ev.sigma2;
    model.varcomp.nu2 = opt.lv * opt.ev.sigma2;
    model.varcomp.rho_re = spec.random_treatment ? opt.rho : 0.0;
    model.reml_value = opt.ev.value;
    model.converged = opt.converged;
    model.n_iter = opt.n_iter;
    if (spec.kind == ModelKind::NCS) model.basis = ws.basis;
    return model;
}

FittedModel fit(const TrialDataset& data, const ModelSpec& spec) {
    return fit_collapsed(collapse(data), spec);
}

double reml_criterion(const CollapsedData& data, const ModelSpec& spec,
                      const VarianceComponents& vc) {
    if (vc.sigma2 <= 0.0)
        throw std::domain_error("reml_criterion: sigma2 must be > 0");
    if (vc.tau2 < 0.0 || vc.nu2 < 0.0)
        throw std::domain_error("reml_criterion: variances must be >= 0");
    if (vc.rho_re < -1.0 || vc.rho_re > 1.0)
        throw std::domain_error("reml_criterion: rho_re must be in [-1, 1]");
    const Workspace ws = make_workspace(data, spec);
    const Evaluation ev = evaluate(ws, vc.tau2 / vc.sigma2, vc.nu2 / vc.sigma2,
                                   vc.rho_re, /*restricted=*/true, vc.sigma2);
    if (!ev.ok)
        throw EstimationError("singular covariance in reml_criterion");
    return ev.value;
}

double reml_criterion(const TrialDataset& data, const ModelSpec& spec,
                      const VarianceComponents& vc) {
    return reml_criterion(collapse(data), spec, vc);
}

double max_loglik(const CollapsedData& data, const ModelSpec& spec) {
    const Workspace ws = make_workspace(data, spec);
    const OptResult opt = optimize(ws, /*restricted=*/false);
    if (!opt.ev.ok)
        throw EstimationError("ML criterion not evaluable at the optimum");
    return opt.ev.value;
}

LrtResult lrt_it_vs_eti(const TrialDataset& data) {
    const CollapsedData cd = collapse(data);
    const double ll_it = max_loglik(cd, ModelSpec::it());
    const double ll_eti = max_loglik(cd, ModelSpec::eti());
    LrtResult out;
    out.statistic = std::max(0.0, 2.0 * (ll_eti - ll_it));
    out.df = cd.design.max_exposure() - 1;
    out.p = chisq_upper_tail(out.statistic, out.df);
    return out;
}

Eigen::MatrixXd exposure_mapping(const FittedModel& model, int max_s) {
    if (max_s < 1) throw std::domain_error("exposure_mapping: max_s must be >= 1");
    const int S = model.design.max_exposure();
    const bool flattens =
        model.spec.kind == ModelKind::IT || model.spec.kind == ModelKind::RETI;
    if (max_s > S && !flattens)
        throw std::domain_error(
            "exposure_mapping: exposure beyond the observed range requires a "
            "flattening model (IT or RETI)");
    const int T = static_cast<int>(model.theta_hat.size());
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(max_s, T);
    for (int s = 1; s <= max_s; ++s) {
        switch (model.spec.kind) {
            case ModelKind::IT:
                L(s - 1, 0) = 1.0;
                break;
            case ModelKind::ETI:
                L(s - 1, s - 1) = 1.0;
                break;
            case ModelKind::RETI:
                L(s - 1, std::min(s, model.spec.pool_from) - 1) = 1.0;
                break;
            case ModelKind::NCS:
                L.row(s - 1) = model.basis.evaluate(static_cast<double>(s)).transpose();
                break;
        }
    }
    return L;
}

}  // namespace swedge
