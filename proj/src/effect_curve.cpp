#include "swedge/effect_curve.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>

namespace swedge {

CurveKind parse_curve_kind(const std::string& text) {
    std::string t;
    t.reserve(text.size());
    for (char c : text) t.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (t == "a" || t == "constant") return CurveKind::Constant;
    if (t == "b" || t == "delayed") return CurveKind::Delayed;
    if (t == "c" || t == "exponential") return CurveKind::Exponential;
    if (t == "d" || t == "partial") return CurveKind::Partial;
    throw std::invalid_argument("unknown effect curve '" + text + "'");
}

std::string curve_kind_label(CurveKind kind) {
    switch (kind) {
        case CurveKind::Constant: return "a";
        case CurveKind::Delayed: return "b";
        case CurveKind::Exponential: return "c";
        case CurveKind::Partial: return "d";
    }
    throw std::logic_error("unreachable");
}

double EffectCurve::at(int s) const {
    if (s < 0 || s > max_exposure())
        throw std::domain_error("effect curve: exposure time out of range");
    return s == 0 ? 0.0 : values[static_cast<std::size_t>(s - 1)];
}

EffectCurve canonical_curve(CurveKind kind, int max_exposure) {
    if (max_exposure < 1)
        throw std::domain_error("effect curve: max_exposure must be >= 1");
    if (kind != CurveKind::Constant && max_exposure < 6)
        throw std::domain_error(
            "effect curve: curves b-d need max_exposure >= 6 to flatten");
    EffectCurve curve;
    curve.label = curve_kind_label(kind);
    curve.values.resize(static_cast<std::size_t>(max_exposure));
    // Base shapes are defined on s = 1..6; larger designs hold the plateau.
    for (int s = 1; s <= max_exposure; ++s) {
        const int sc = std::min(s, 6);
        double h = 1.0;
        switch (kind) {
            case CurveKind::Constant:
                h = 1.0;
                break;
            case CurveKind::Delayed: {
                static const double base[6] = {0.05, 0.15, 1.0, 1.0, 1.0, 1.0};
                h = base[sc - 1];
                break;
            }
            case CurveKind::Exponential:
                h = (1.0 - std::pow(2.0, -sc)) / (1.0 - std::pow(2.0, -6));
                break;
            case CurveKind::Partial: {
                static const double base[6] = {0.05, 0.15, 0.45, 1.0, 1.0, 1.0};
                h = base[sc - 1];
                break;
            }
        }
        curve.values[static_cast<std::size_t>(s - 1)] = h;
    }
    return curve;
}

}  // namespace swedge
