#pragma once

// Shared fixtures for the test suite: the base trial configuration used by
// the simulation catalog (6 sequences, 4 clusters each, 20 per cell) and a
// few convenience builders for noiseless and small-scale datasets.

#include <vector>

#include "swedge/datagen.hpp"
#include "swedge/design.hpp"
#include "swedge/effect_curve.hpp"

namespace testutil {

inline swedge::StudyDesign base_design(int extra_periods = 0) {
    return swedge::standard_design(6, 4, 20, extra_periods);
}

// mu=1, delta=0.5, sigma=2, tau=0.5, linear trend with slope -0.5.
inline swedge::GenParams base_params(const swedge::StudyDesign& design,
                                     swedge::CurveKind kind) {
    swedge::GenParams p;
    p.mu = 1.0;
    p.delta = 0.5;
    p.sigma = 2.0;
    p.tau = 0.5;
    p.period_effects = swedge::linear_time_trend(design.num_periods(), -0.5);
    p.curve = swedge::canonical_curve(kind, design.max_exposure());
    return p;
}

// Effectively deterministic outcomes: the injected curve can be read back
// from any saturated fit to high precision.
inline swedge::GenParams noiseless_params(const swedge::StudyDesign& design,
                                          swedge::CurveKind kind,
                                          double sigma = 1e-10) {
    swedge::GenParams p = base_params(design, kind);
    p.sigma = sigma;
    p.tau = 0.0;
    return p;
}

// Arbitrary monotone-ish curve values for small designs (max exposure < 6)
// where the canonical shapes are not defined.
inline swedge::EffectCurve ramp_curve(int max_exposure) {
    swedge::EffectCurve c;
    c.label = "ramp";
    for (int s = 1; s <= max_exposure; ++s)
        c.values.push_back(static_cast<double>(s) / max_exposure);
    return c;
}

}  // namespace testutil
