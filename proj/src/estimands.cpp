#include "swedge/estimands.hpp"

#include <cmath>
#include <stdexcept>

#include "swedge/dist.hpp"

namespace swedge {

EstimandSpec EstimandSpec::tate(int s1, int s2) {
    EstimandSpec e;
    e.kind = Kind::TATE;
    e.s1 = s1;
    e.s2 = s2;
    return e;
}

EstimandSpec EstimandSpec::pte(int s0) {
    EstimandSpec e;
    e.kind = Kind::PTE;
    e.s0 = s0;
    return e;
}

EstimandSpec EstimandSpec::lte() {
    EstimandSpec e;
    e.kind = Kind::LTE;
    return e;
}

std::string EstimandSpec::label() const {
    switch (kind) {
        case Kind::TATE:
            return "tate:" + std::to_string(s1) + ":" + std::to_string(s2);
        case Kind::PTE:
            return "pte:" + std::to_string(s0);
        case Kind::LTE:
            return "lte";
    }
    throw std::logic_error("unreachable");
}

Eigen::RowVectorXd saturated_contrast(const EstimandSpec& spec,
                                      RiemannMethod method, int max_exposure) {
    const int S = max_exposure;
    if (S < 1) throw std::domain_error("estimand: max_exposure must be >= 1");
    Eigen::RowVectorXd m = Eigen::RowVectorXd::Zero(S);
    switch (spec.kind) {
        case EstimandSpec::Kind::PTE: {
            if (spec.s0 < 1 || spec.s0 > S)
                throw std::domain_error("estimand: PTE exposure time out of range");
            m(spec.s0 - 1) = 1.0;
            break;
        }
        case EstimandSpec::Kind::LTE:
            m(S - 1) = 1.0;
            break;
        case EstimandSpec::Kind::TATE: {
            const int s1 = spec.s1, s2 = spec.s2;
            if (s1 < 0 || s1 >= s2)
                throw std::domain_error("estimand: TATE window requires 0 <= s1 < s2");
            if (s2 > S)
                throw std::domain_error("estimand: TATE endpoint beyond max exposure");
            const double width = static_cast<double>(s2 - s1);
            if (method == RiemannMethod::Right) {
                for (int s = s1 + 1; s <= s2; ++s) m(s - 1) = 1.0 / width;
            } else {
                // Trapezoid rule on the integer grid; delta(0) = 0 contributes
                // nothing when s1 = 0.
                if (s1 >= 1) m(s1 - 1) += 0.5 / width;
                for (int s = s1 + 1; s < s2; ++s) m(s - 1) += 1.0 / width;
                m(s2 - 1) += 0.5 / width;
            }
            break;
        }
    }
    return m;
}

namespace {

int required_max_s(const EstimandSpec& spec, int design_max) {
    switch (spec.kind) {
        case EstimandSpec::Kind::TATE: return spec.s2;
        case EstimandSpec::Kind::PTE: return spec.s0;
        case EstimandSpec::Kind::LTE: return design_max;
    }
    return design_max;
}

}  // namespace

Eigen::RowVectorXd contrast(const FittedModel& fit, const EstimandSpec& spec,
                            RiemannMethod method) {
    const int S = fit.design.max_exposure();
    EstimandSpec resolved = spec;
    if (spec.kind == EstimandSpec::Kind::LTE) resolved = EstimandSpec::pte(S);
    const int need = required_max_s(resolved, S);
    // exposure_mapping rejects extrapolation for non-flattening models.
    const Eigen::MatrixXd L = exposure_mapping(fit, need);
    const Eigen::RowVectorXd m = saturated_contrast(resolved, method, need);
    return m * L;
}

EstimandEstimate estimate(const FittedModel& fit, const EstimandSpec& spec,
                          RiemannMethod method) {
    const Eigen::RowVectorXd M = contrast(fit, spec, method);
    EstimandEstimate out;
    out.spec = spec;
    out.method = method;
    out.estimate = M.dot(fit.theta_hat);
    const double var = (M * fit.vcov_theta * M.transpose())(0, 0);
    out.se = std::sqrt(std::max(var, 0.0));
    const double zq = normal_quantile(0.5 + 0.5 * fit.spec.ci_level);
    out.ci_lo = out.estimate - zq * out.se;
    out.ci_hi = out.estimate + zq * out.se;
    out.z = out.se > 0.0 ? out.estimate / out.se : 0.0;
    out.p = out.se > 0.0 ? two_sided_p(out.z) : (out.estimate == 0.0 ? 1.0 : 0.0);
    return out;
}

std::vector<CurvePoint> effect_curve_estimate(const FittedModel& fit) {
    const int S = fit.design.max_exposure();
    const Eigen::MatrixXd L = exposure_mapping(fit, S);
    const double zq = normal_quantile(0.5 + 0.5 * fit.spec.ci_level);
    std::vector<CurvePoint> out;
    out.reserve(static_cast<std::size_t>(S));
    for (int s = 1; s <= S; ++s) {
        CurvePoint pt;
        pt.s = s;
        const Eigen::RowVectorXd row = L.row(s - 1);
        pt.estimate = row.dot(fit.theta_hat);
        const double var = (row * fit.vcov_theta * row.transpose())(0, 0);
        const double se = std::sqrt(std::max(var, 0.0));
        pt.ci_lo = pt.estimate - zq * se;
        pt.ci_hi = pt.estimate + zq * se;
        out.push_back(pt);
    }
    return out;
}

double true_estimand(const EffectCurve& curve, double delta,
                     const EstimandSpec& spec, RiemannMethod method,
                     int max_exposure) {
    EstimandSpec resolved = spec;
    if (spec.kind == EstimandSpec::Kind::LTE)
        resolved = EstimandSpec::pte(max_exposure);
    const int need = required_max_s(resolved, max_exposure);
    const Eigen::RowVectorXd m = saturated_contrast(resolved, method, need);
    double acc = 0.0;
    for (int s = 1; s <= m.size(); ++s) acc += m(s - 1) * delta * curve.at(s);
    return acc;
}

}  // namespace swedge
