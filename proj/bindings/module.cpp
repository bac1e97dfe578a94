#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "swedge/datagen.hpp"
#include "swedge/design.hpp"
#include "swedge/estimands.hpp"
#include "swedge/mec.hpp"
#include "swedge/models.hpp"
#include "swedge/simharness.hpp"
#include "swedge/weights.hpp"

namespace py = pybind11;
using namespace swedge;

namespace {

ModelSpec spec_from_string(const std::string& text, bool rte) {
    ModelSpec spec;
    if (text == "it") {
        spec = ModelSpec::it();
    } else if (text == "eti") {
        spec = ModelSpec::eti();
    } else if (text.rfind("reti:", 0) == 0) {
        spec = ModelSpec::reti(std::stoi(text.substr(5)));
    } else if (text.rfind("ncs:", 0) == 0) {
        spec = ModelSpec::ncs(std::stoi(text.substr(4)));
    } else {
        throw std::invalid_argument("unknown model '" + text + "'");
    }
    spec.random_treatment = rte;
    return spec;
}

EstimandSpec estimand_from_string(const std::string& text) {
    if (text == "lte") return EstimandSpec::lte();
    if (text.rfind("pte:", 0) == 0)
        return EstimandSpec::pte(std::stoi(text.substr(4)));
    if (text.rfind("tate:", 0) == 0) {
        const std::size_t a = text.find(':', 5);
        if (a == std::string::npos)
            throw std::invalid_argument("use tate:S1:S2");
        return EstimandSpec::tate(std::stoi(text.substr(5, a - 5)),
                                  std::stoi(text.substr(a + 1)));
    }
    throw std::invalid_argument("unknown estimand '" + text + "'");
}

py::dict estimate_to_dict(const EstimandEstimate& est) {
    py::dict d;
    d["estimate"] = est.estimate;
    d["se"] = est.se;
    d["ci_lo"] = est.ci_lo;
    d["ci_hi"] = est.ci_hi;
    d["z"] = est.z;
    d["p"] = est.p;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "stepped wedge trial estimation with time-varying treatment effects";

    py::class_<StudyDesign>(m, "StudyDesign")
        .def_readonly("num_sequences", &StudyDesign::num_sequences)
        .def_readonly("clusters_per_sequence", &StudyDesign::clusters_per_sequence)
        .def_readonly("cluster_size", &StudyDesign::cluster_size)
        .def_readonly("extra_periods", &StudyDesign::extra_periods)
        .def("num_periods", &StudyDesign::num_periods)
        .def("num_clusters", &StudyDesign::num_clusters)
        .def("max_exposure", &StudyDesign::max_exposure);

    m.def("standard_design", &standard_design, py::arg("num_sequences"),
          py::arg("clusters_per_sequence"), py::arg("cluster_size"),
          py::arg("extra_periods") = 0);
    m.def("derive_phi", &derive_phi, py::arg("tau2"), py::arg("sigma2"), py::arg("n"));

    m.def("weight", &weight, py::arg("Q"), py::arg("phi"), py::arg("s"));
    m.def(
        "weight_vector",
        [](int Q, double phi) { return weight_profile(Q, phi).weights; },
        py::arg("Q"), py::arg("phi"));
    m.def(
        "expected_it_estimate",
        [](int Q, double phi, const std::vector<double>& pte) {
            return expected_it_estimate(weight_profile(Q, phi), pte);
        },
        py::arg("Q"), py::arg("phi"), py::arg("pte"));

    py::class_<TrialDataset>(m, "TrialDataset")
        .def_property_readonly("design",
                               [](const TrialDataset& d) { return d.design; })
        .def("num_rows", &TrialDataset::num_rows)
        .def("outcomes", [](const TrialDataset& d) {
            std::vector<double> out;
            out.reserve(d.rows.size());
            for (const TrialRow& r : d.rows) out.push_back(r.outcome);
            return out;
        });

    m.def(
        "generate",
        [](const StudyDesign& design, const std::string& curve, double delta,
           double mu, double sigma, double tau, double nu, double rho,
           double trend_slope, std::uint64_t seed) {
            GenParams p;
            p.mu = mu;
            p.delta = delta;
            p.sigma = sigma;
            p.tau = tau;
            p.nu = nu;
            p.rho = rho;
            p.period_effects = linear_time_trend(design.num_periods(), trend_slope);
            p.curve = canonical_curve(parse_curve_kind(curve), design.max_exposure());
            return generate(design, p, seed);
        },
        py::arg("design"), py::arg("curve") = "a", py::arg("delta") = 0.5,
        py::arg("mu") = 1.0, py::arg("sigma") = 2.0, py::arg("tau") = 0.5,
        py::arg("nu") = 0.0, py::arg("rho") = 0.0, py::arg("trend_slope") = -0.5,
        py::arg("seed") = 1);
    m.def("write_csv", &write_csv, py::arg("data"), py::arg("path"));
    m.def("read_csv", &read_csv, py::arg("path"));

    py::class_<FittedModel>(m, "FittedModel")
        .def_property_readonly("theta",
                               [](const FittedModel& f) { return f.theta_hat; })
        .def_property_readonly("vcov",
                               [](const FittedModel& f) { return f.vcov_theta; })
        .def_property_readonly("tau2",
                               [](const FittedModel& f) { return f.varcomp.tau2; })
        .def_property_readonly("sigma2",
                               [](const FittedModel& f) { return f.varcomp.sigma2; })
        .def_property_readonly("nu2",
                               [](const FittedModel& f) { return f.varcomp.nu2; })
        .def_property_readonly("reml", [](const FittedModel& f) { return f.reml_value; })
        .def_property_readonly("converged",
                               [](const FittedModel& f) { return f.converged; });

    m.def(
        "fit",
        [](const TrialDataset& data, const std::string& model, bool rte) {
            return fit(data, spec_from_string(model, rte));
        },
        py::arg("data"), py::arg("model") = "eti", py::arg("rte") = false);

    m.def(
        "estimate",
        [](const FittedModel& fm, const std::string& estimand,
           const std::string& method) {
            const RiemannMethod rm = method == "trapezoid" ? RiemannMethod::Trapezoid
                                                           : RiemannMethod::Right;
            return estimate_to_dict(estimate(fm, estimand_from_string(estimand), rm));
        },
        py::arg("fit"), py::arg("estimand") = "tate:0:6", py::arg("method") = "right");

    m.def("effect_curve", [](const FittedModel& fm) {
        py::list out;
        for (const CurvePoint& pt : effect_curve_estimate(fm)) {
            py::dict d;
            d["s"] = pt.s;
            d["estimate"] = pt.estimate;
            d["ci_lo"] = pt.ci_lo;
            d["ci_hi"] = pt.ci_hi;
            out.append(d);
        }
        return out;
    });

    m.def(
        "fit_mec_lte",
        [](const TrialDataset& data, bool informative, int chains, int warmup,
           int samples, std::uint64_t seed) {
            const int S = data.design.max_exposure();
            MecOptions opts;
            opts.n_chains = chains;
            opts.n_warmup = warmup;
            opts.n_samples = samples;
            opts.seed = seed;
            const MecPrior prior =
                informative ? MecPrior::informative(S) : MecPrior::symmetric(S);
            const MecDraws draws = fit_mec(data, prior, opts);
            py::dict d = estimate_to_dict(
                mec_estimands(draws, EstimandSpec::lte(), RiemannMethod::Right, 0.95));
            d["rhat_delta"] = draws.rhat_for("delta");
            return d;
        },
        py::arg("data"), py::arg("informative") = true, py::arg("chains") = 4,
        py::arg("warmup") = 500, py::arg("samples") = 500, py::arg("seed") = 1);
}
