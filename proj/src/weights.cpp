#include "swedge/weights.hpp"

#include <cmath>
#include <stdexcept>

namespace swedge {

namespace {

void check_weight_args(int Q, double phi) {
    if (Q < 2)
        throw std::domain_error("weights: Q must be >= 2");
    if (phi < 0.0 || phi >= 1.0)
        throw std::domain_error("weights: phi must be in [0, 1)");
}

}  // namespace

CorrelationSpec CorrelationSpec::exchangeable(double phi) {
    if (phi < 0.0 || phi >= 1.0)
        throw std::domain_error("correlation: phi must be in [0, 1)");
    CorrelationSpec c;
    c.kind = Kind::Exchangeable;
    c.phi = phi;
    return c;
}

CorrelationSpec CorrelationSpec::nested_exchangeable(double rho_w, double rho_b) {
    if (rho_w < 0.0 || rho_w >= 1.0 || rho_b < 0.0 || rho_b >= 1.0)
        throw std::domain_error("correlation: rho_w, rho_b must be in [0, 1)");
    CorrelationSpec c;
    c.kind = Kind::NestedExchangeable;
    c.rho_w = rho_w;
    c.rho_b = rho_b;
    return c;
}

CorrelationSpec CorrelationSpec::random_treatment(double rho_0, double rho_1,
                                                  double rho_10) {
    if (rho_0 < 0.0 || rho_0 >= 1.0 || rho_1 < 0.0 || rho_1 >= 1.0 ||
        rho_10 < 0.0 || rho_10 >= 1.0)
        throw std::domain_error("correlation: rho_0, rho_1, rho_10 must be in [0, 1)");
    CorrelationSpec c;
    c.kind = Kind::RandomTreatment;
    c.rho_0 = rho_0;
    c.rho_1 = rho_1;
    c.rho_10 = rho_10;
    return c;
}

double weight(int Q, double phi, int s) {
    check_weight_args(Q, phi);
    if (s < 1 || s > Q)
        throw std::domain_error("weights: s must be in [1, Q]");
    const double q = static_cast<double>(Q);
    const double sd = static_cast<double>(s);
    const double numer =
        6.0 * (sd - q - 1.0) * ((1.0 + 2.0 * phi * q) * sd - (1.0 + phi + phi * q) * q);
    const double denom = q * (q + 1.0) * (phi * q * q + 2.0 * q - phi * q - 2.0);
    return numer / denom;
}

WeightProfile weight_profile(int Q, double phi) {
    check_weight_args(Q, phi);
    WeightProfile p;
    p.Q = Q;
    p.phi = phi;
    p.weights.resize(static_cast<std::size_t>(Q));
    for (int s = 1; s <= Q; ++s)
        p.weights[static_cast<std::size_t>(s - 1)] = weight(Q, phi, s);
    return p;
}

double it_closed_form(const Eigen::MatrixXd& means, int Q, double phi) {
    check_weight_args(Q, phi);
    if (means.rows() != Q || means.cols() != Q + 1)
        throw std::domain_error("it_closed_form: means must be Q x (Q+1)");
    const double q = static_cast<double>(Q);
    const double scale =
        12.0 * (1.0 + phi * q) / (q * (q + 1.0) * (phi * q * q + 2.0 * q - phi * q - 2.0));
    double acc = 0.0;
    for (int qi = 1; qi <= Q; ++qi) {
        for (int j = 1; j <= Q + 1; ++j) {
            const double ind = j > qi ? 1.0 : 0.0;
            const double coef = q * ind - static_cast<double>(j) + 1.0 +
                                phi * q * (2.0 * qi - q - 1.0) / (2.0 * (1.0 + phi * q));
            acc += coef * means(qi - 1, j - 1);
        }
    }
    return scale * acc;
}

double expected_it_estimate(const WeightProfile& profile,
                            const std::vector<double>& pte) {
    if (pte.size() != profile.weights.size())
        throw std::domain_error("expected_it_estimate: length mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < pte.size(); ++i) acc += profile.weights[i] * pte[i];
    return acc;
}

namespace {

// Covariance of the J cluster-period means for a cluster in sequence q,
// up to an arbitrary positive scale (which cancels in the GLS projection).
Eigen::MatrixXd mean_covariance(const StudyDesign& design, int q,
                                const CorrelationSpec& corr) {
    const int J = design.num_periods();
    const double n = static_cast<double>(design.cluster_size);
    Eigen::MatrixXd V(J, J);
    switch (corr.kind) {
        case CorrelationSpec::Kind::Exchangeable:
            V.setConstant(corr.phi);
            V.diagonal().setConstant(1.0);
            break;
        case CorrelationSpec::Kind::NestedExchangeable:
            V.setConstant(corr.rho_b);
            V.diagonal().setConstant((1.0 + (n - 1.0) * corr.rho_w) / n);
            break;
        case CorrelationSpec::Kind::RandomTreatment:
            for (int j = 1; j <= J; ++j) {
                const int xj = treatment_indicator(design, q, j);
                for (int l = 1; l <= J; ++l) {
                    const int xl = treatment_indicator(design, q, l);
                    double rho;
                    if (xj == 1 && xl == 1) rho = corr.rho_1;
                    else if (xj == 0 && xl == 0) rho = corr.rho_0;
                    else rho = corr.rho_10;
                    if (j == l)
                        V(j - 1, l - 1) = (1.0 + (n - 1.0) * rho) / n;
                    else
                        V(j - 1, l - 1) = rho;
                }
            }
            break;
    }
    return V;
}

}  // namespace

WeightProfile numeric_weights(const StudyDesign& design, const CorrelationSpec& corr) {
    design.validate();
    if (design.extra_periods != 0)
        throw std::domain_error("numeric_weights: requires a complete design (J = Q + 1)");
    const int Q = design.num_sequences;
    const int J = design.num_periods();
    const int p = J + 1;  // intercept, J-1 period effects, treatment

    // Per-sequence design matrix of the IT model on cell means.
    std::vector<Eigen::MatrixXd> X(static_cast<std::size_t>(Q));
    std::vector<Eigen::MatrixXd> Vinv(static_cast<std::size_t>(Q));
    for (int q = 1; q <= Q; ++q) {
        Eigen::MatrixXd Xq = Eigen::MatrixXd::Zero(J, p);
        for (int j = 1; j <= J; ++j) {
            Xq(j - 1, 0) = 1.0;
            if (j >= 2) Xq(j - 1, j - 1) = 1.0;
            Xq(j - 1, p - 1) = treatment_indicator(design, q, j);
        }
        const Eigen::MatrixXd V = mean_covariance(design, q, corr);
        Eigen::LLT<Eigen::MatrixXd> llt(V);
        if (llt.info() != Eigen::Success)
            throw std::domain_error("numeric_weights: covariance not positive definite");
        X[static_cast<std::size_t>(q - 1)] = Xq;
        Vinv[static_cast<std::size_t>(q - 1)] = llt.solve(Eigen::MatrixXd::Identity(J, J));
    }

    Eigen::MatrixXd info = Eigen::MatrixXd::Zero(p, p);
    for (int q = 1; q <= Q; ++q) {
        const auto& Xq = X[static_cast<std::size_t>(q - 1)];
        info += Xq.transpose() * Vinv[static_cast<std::size_t>(q - 1)] * Xq;
    }
    const Eigen::MatrixXd info_inv = info.ldlt().solve(Eigen::MatrixXd::Identity(p, p));

    WeightProfile profile;
    profile.Q = Q;
    profile.phi = corr.kind == CorrelationSpec::Kind::Exchangeable ? corr.phi : 0.0;
    profile.weights.assign(static_cast<std::size_t>(design.max_exposure()), 0.0);
    // Expected cell means under the indicator curve delta(.) = 1{. == s}:
    // mu_qj = 1{j - q == s}.  The weight is the treatment coefficient of the
    // GLS fit to those noiseless means.
    for (int s = 1; s <= design.max_exposure(); ++s) {
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(p);
        for (int q = 1; q <= Q; ++q) {
            Eigen::VectorXd mu = Eigen::VectorXd::Zero(J);
            for (int j = 1; j <= J; ++j)
                if (exposure_time(design, q, j) == s) mu(j - 1) = 1.0;
            const auto& Xq = X[static_cast<std::size_t>(q - 1)];
            rhs += Xq.transpose() * Vinv[static_cast<std::size_t>(q - 1)] * mu;
        }
        const Eigen::VectorXd beta = info_inv * rhs;
        profile.weights[static_cast<std::size_t>(s - 1)] = beta(p - 1);
    }
    return profile;
}

}  // namespace swedge
