#pragma once

#include <string>
#include <vector>

namespace swedge {

// Shape of the exposure-time effect curve delta(s) = delta * h(s) used when
// generating data.  h is stored at integer exposure times 1..S with h(0) = 0
// implied; delta scales the whole curve.
enum class CurveKind {
    Constant,   // immediate full effect: h(s) = 1 for all s >= 1
    Delayed,    // negligible early effect, then full effect
    Exponential,// geometric approach to the full effect
    Partial     // partially delayed: intermediate ramp to the full effect
};

// Parse a one-letter label (a/b/c/d, case-insensitive) or full name.
CurveKind parse_curve_kind(const std::string& text);
std::string curve_kind_label(CurveKind kind);

struct EffectCurve {
    std::vector<double> values;  // h(1), ..., h(S)
    std::string label;

    int max_exposure() const { return static_cast<int>(values.size()); }

    // h(s) for integer s in [0, S]; h(0) = 0 by construction.
    double at(int s) const;
};

// Canonical shapes, all normalized so max h = 1 and h(0) = 0.  Curves are
// defined on exposure times 1..6 and extended flat at 1 for larger S.
EffectCurve canonical_curve(CurveKind kind, int max_exposure);

}  // namespace swedge
