#include "swedge/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "swedge/datagen.hpp"
#include "swedge/design.hpp"
#include "swedge/estimands.hpp"
#include "swedge/mec.hpp"
#include "swedge/models.hpp"
#include "swedge/rng.hpp"
#include "swedge/simharness.hpp"
#include "swedge/weights.hpp"

namespace swedge {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

// Any configuration problem detectable before touching data.
struct UsageError : std::runtime_error {
    explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream ss(text);
    while (std::getline(ss, item, sep)) out.push_back(item);
    return out;
}

double parse_real(const std::string& text, const std::string& what) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(text, &pos);
        if (pos != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw UsageError("invalid " + what + " '" + text + "'");
    }
}

int parse_int(const std::string& text, const std::string& what) {
    try {
        std::size_t pos = 0;
        const int v = std::stoi(text, &pos);
        if (pos != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw UsageError("invalid " + what + " '" + text + "'");
    }
}

struct ModelChoice {
    bool is_mec = false;
    bool symmetric_prior = false;
    ModelSpec spec;
};

ModelChoice parse_model(std::string text) {
    ModelChoice mc;
    if (text == "mec") {
        mc.is_mec = true;
        return mc;
    }
    if (text == "mec-sym") {
        mc.is_mec = true;
        mc.symmetric_prior = true;
        return mc;
    }
    bool rte = false;
    const std::string suffix = "-rte";
    if (text.size() > suffix.size() &&
        text.compare(text.size() - suffix.size(), suffix.size(), suffix) == 0) {
        rte = true;
        text = text.substr(0, text.size() - suffix.size());
    }
    if (text == "it") {
        mc.spec = ModelSpec::it();
    } else if (text == "eti") {
        mc.spec = ModelSpec::eti();
    } else if (text.rfind("reti:", 0) == 0) {
        mc.spec = ModelSpec::reti(parse_int(text.substr(5), "RETI pooling time"));
    } else if (text.rfind("ncs:", 0) == 0) {
        mc.spec = ModelSpec::ncs(parse_int(text.substr(4), "NCS df"));
    } else {
        throw UsageError("unknown model '" + text + "'");
    }
    mc.spec.random_treatment = rte;
    return mc;
}

EstimandRequest parse_estimand(const std::string& text, const std::string& method) {
    EstimandRequest req;
    if (method == "right") {
        req.method = RiemannMethod::Right;
    } else if (method == "trapezoid") {
        req.method = RiemannMethod::Trapezoid;
    } else {
        throw UsageError("unknown method '" + method + "' (use right|trapezoid)");
    }
    if (text == "lte") {
        req.spec = EstimandSpec::lte();
    } else if (text.rfind("pte:", 0) == 0) {
        req.spec = EstimandSpec::pte(parse_int(text.substr(4), "PTE exposure"));
    } else if (text.rfind("tate:", 0) == 0) {
        const std::vector<std::string> parts = split(text, ':');
        if (parts.size() != 3) throw UsageError("use tate:S1:S2");
        req.spec = EstimandSpec::tate(parse_int(parts[1], "TATE start"),
                                      parse_int(parts[2], "TATE end"));
    } else {
        throw UsageError("unknown estimand '" + text + "'");
    }
    return req;
}

std::uint64_t require_seed(const std::optional<std::uint64_t>& flag) {
    if (flag) return *flag;
    if (const char* env = std::getenv("SWEDGE_SEED")) {
        try {
            return std::stoull(env);
        } catch (const std::exception&) {
            throw UsageError("SWEDGE_SEED is not a valid integer");
        }
    }
    throw UsageError("a seed is required (--seed or SWEDGE_SEED)");
}

void write_text(const std::string& path, const std::string& content) {
    if (path.empty() || path == "-") {
        std::cout << content;
        return;
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << content;
    if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

std::string format_weights_csv(const WeightProfile& profile) {
    std::ostringstream out;
    out << "s,weight\n";
    char buf[64];
    for (std::size_t s = 0; s < profile.weights.size(); ++s) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", s + 1, profile.weights[s] + 0.0);
        out << buf;
    }
    return out.str();
}

// ---- subcommand implementations ----

struct WeightsArgs {
    int sequences = 0;
    double phi = 0.0;
    std::string corr;
    int cluster_size = 2;
    std::string out_path;
};

int run_weights(const WeightsArgs& a) {
    WeightProfile profile;
    // All inputs are flag-derived, so domain violations are usage errors.
    try {
        if (a.corr.empty()) {
            profile = weight_profile(a.sequences, a.phi);
        } else {
            CorrelationSpec corr;
            if (a.corr.rfind("nested:", 0) == 0) {
                const std::vector<std::string> parts = split(a.corr.substr(7), ',');
                if (parts.size() != 2) throw UsageError("use --corr nested:rw,rb");
                corr = CorrelationSpec::nested_exchangeable(
                    parse_real(parts[0], "rho_w"), parse_real(parts[1], "rho_b"));
            } else if (a.corr.rfind("rte:", 0) == 0) {
                const std::vector<std::string> parts = split(a.corr.substr(4), ',');
                if (parts.size() != 3) throw UsageError("use --corr rte:r0,r1,r10");
                corr = CorrelationSpec::random_treatment(
                    parse_real(parts[0], "rho_0"), parse_real(parts[1], "rho_1"),
                    parse_real(parts[2], "rho_10"));
            } else {
                throw UsageError("unknown correlation spec '" + a.corr + "'");
            }
            profile = numeric_weights(
                standard_design(a.sequences, 1, a.cluster_size, 0), corr);
        }
    } catch (const std::domain_error& e) {
        throw UsageError(e.what());
    }
    write_text(a.out_path, format_weights_csv(profile));
    return kExitOk;
}

struct AnalyzeArgs {
    std::string data_path;
    std::string model = "eti";
    bool rte = false;
    std::string estimand = "tate:0:6";
    std::string method = "right";
    double ci_level = 0.95;
    std::string prior;
    int chains = 4;
    int warmup = 2500;
    int samples = 2500;
    std::optional<std::uint64_t> seed;
    int jobs = 1;
    std::string out_path;
    bool curve_mode = false;  // emit the whole effect curve instead
};

MecPrior resolve_prior(const std::string& text, int S) {
    if (text.empty()) return MecPrior::informative(S);
    if (text == "symmetric") return MecPrior::symmetric(S);
    MecPrior prior;
    for (const std::string& part : split(text, ','))
        prior.c.push_back(parse_real(part, "prior weight"));
    prior.validate(S);
    return prior;
}

std::string format_curve_csv(const std::vector<CurvePoint>& pts) {
    std::ostringstream out;
    out << "s,estimate,ci_lo,ci_hi\n";
    char buf[128];
    for (const CurvePoint& pt : pts) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g\n", pt.s,
                      pt.estimate, pt.ci_lo, pt.ci_hi);
        out << buf;
    }
    return out.str();
}

int run_analyze(const AnalyzeArgs& a) {
    const ModelChoice mc = parse_model(a.model + (a.rte ? "-rte" : ""));
    if (a.ci_level <= 0.0 || a.ci_level >= 1.0)
        throw UsageError("--ci-level must be in (0, 1)");
    std::optional<std::uint64_t> seed_flag = a.seed;
    std::uint64_t mec_seed = 0;
    if (mc.is_mec) mec_seed = require_seed(seed_flag);

    const TrialDataset data = read_csv(a.data_path);
    const int S = data.design.max_exposure();

    nlohmann::json j;
    if (mc.is_mec) {
        MecPrior prior = mc.symmetric_prior ? MecPrior::symmetric(S)
                                            : resolve_prior(a.prior, S);
        MecOptions opts;
        opts.n_chains = a.chains;
        opts.n_warmup = a.warmup;
        opts.n_samples = a.samples;
        opts.seed = mec_seed;
        opts.jobs = a.jobs;
        const MecDraws draws = fit_mec(data, prior, opts);
        if (a.curve_mode) {
            write_text(a.out_path, format_curve_csv(mec_effect_curve(draws, a.ci_level)));
            return kExitOk;
        }
        const EstimandRequest req = parse_estimand(a.estimand, a.method);
        const EstimandEstimate est =
            mec_estimands(draws, req.spec, req.method, a.ci_level);
        j["estimate"] = est.estimate;
        j["se"] = est.se;
        j["ci_lo"] = est.ci_lo;
        j["ci_hi"] = est.ci_hi;
        j["z"] = est.z;
        j["p"] = est.p;
        nlohmann::json rhat = nlohmann::json::object();
        for (const auto& kv : draws.rhat) rhat[kv.first] = kv.second;
        j["rhat"] = rhat;
        nlohmann::json acc = nlohmann::json::object();
        for (const auto& kv : draws.acceptance) acc[kv.first] = kv.second;
        j["acceptance"] = acc;
    } else {
        ModelSpec spec = mc.spec;
        spec.ci_level = a.ci_level;
        const FittedModel fm = fit(data, spec);
        if (a.curve_mode) {
            write_text(a.out_path, format_curve_csv(effect_curve_estimate(fm)));
            return kExitOk;
        }
        const EstimandRequest req = parse_estimand(a.estimand, a.method);
        const EstimandEstimate est = estimate(fm, req.spec, req.method);
        j["estimate"] = est.estimate;
        j["se"] = est.se;
        j["ci_lo"] = est.ci_lo;
        j["ci_hi"] = est.ci_hi;
        j["z"] = est.z;
        j["p"] = est.p;
    }
    write_text(a.out_path, j.dump(2) + "\n");
    return kExitOk;
}

struct SimulateArgs {
    std::string scenario = "base";
    std::string curves = "a,b,c,d";
    std::string models;
    int replicates = 500;
    std::optional<std::uint64_t> seed;
    int jobs = 1;
    std::string out_path;
    std::string emit_data;
};

int run_simulate(const SimulateArgs& a) {
    const std::uint64_t seed = require_seed(a.seed);
    std::vector<CurveKind> curves;
    for (const std::string& c : split(a.curves, ','))
        curves.push_back(parse_curve_kind(c));
    if (curves.empty()) throw UsageError("no curves requested");
    if (a.replicates < 1) throw UsageError("--replicates must be >= 1");

    std::vector<SimScenario> scenarios;
    try {
        scenarios = catalog_scenarios(a.scenario, curves, a.replicates, seed);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }

    if (!a.models.empty()) {
        std::vector<AnalysisSpec> analyses;
        for (const std::string& m : split(a.models, ',')) {
            const ModelChoice mc = parse_model(m);
            if (mc.is_mec) {
                const MecPrior prior = mc.symmetric_prior ? MecPrior::symmetric(6)
                                                          : MecPrior::informative(6);
                analyses.push_back(AnalysisSpec::mec(prior, MecOptions{},
                                                     mc.symmetric_prior ? "mec-sym"
                                                                        : "mec"));
            } else {
                analyses.push_back(AnalysisSpec::lmm(mc.spec));
            }
        }
        for (SimScenario& sc : scenarios) {
            sc.analyses = analyses;
            for (AnalysisSpec& an : sc.analyses)
                if (an.is_mec) {
                    an.prior = an.prior.c.empty()
                                   ? MecPrior::informative(sc.design.max_exposure())
                                   : an.prior;
                    if (static_cast<int>(an.prior.c.size()) !=
                        sc.design.max_exposure())
                        an.prior = an.label == "mec-sym"
                                       ? MecPrior::symmetric(sc.design.max_exposure())
                                       : MecPrior::informative(sc.design.max_exposure());
                }
        }
    }

    if (!a.emit_data.empty()) {
        const SimScenario& sc = scenarios.front();
        const TrialDataset data =
            generate(sc.design, sc.params, derive_seed(sc.seed, 0xDA7AULL, 0));
        write_csv(data, a.emit_data);
    }

    std::vector<SimResult> results;
    for (const SimScenario& sc : scenarios)
        results.push_back(run_scenario(sc, a.jobs));
    write_results_csv(results, a.out_path);
    return kExitOk;
}

}  // namespace

int parse_and_dispatch(const std::vector<std::string>& args) {
    CLI::App app{"stepped wedge trial analysis with time-varying treatment effects",
                 "swedge"};
    app.require_subcommand(1);

    WeightsArgs wa;
    CLI::App* weights_cmd =
        app.add_subcommand("weights", "closed-form or numeric estimator weights");
    weights_cmd->add_option("--sequences", wa.sequences, "number of sequences Q")
        ->required();
    weights_cmd->add_option("--phi", wa.phi, "cell-mean correlation phi");
    weights_cmd->add_option("--corr", wa.corr,
                            "nested:rw,rb or rte:r0,r1,r10 correlation");
    weights_cmd->add_option("--cluster-size", wa.cluster_size,
                            "individuals per cluster-period for --corr");
    weights_cmd->add_option("--out", wa.out_path, "output CSV path (default stdout)");

    AnalyzeArgs aa;
    CLI::App* analyze_cmd = app.add_subcommand("analyze", "fit a model and estimate");
    analyze_cmd->add_option("--data", aa.data_path, "trial CSV")->required();
    analyze_cmd->add_option("--model", aa.model, "it|eti|reti:S|ncs:D|mec");
    analyze_cmd->add_flag("--rte", aa.rte, "add a correlated random treatment effect");
    analyze_cmd->add_option("--estimand", aa.estimand, "tate:S1:S2|pte:S0|lte");
    analyze_cmd->add_option("--method", aa.method, "right|trapezoid");
    analyze_cmd->add_option("--ci-level", aa.ci_level, "confidence level");
    analyze_cmd->add_option("--prior", aa.prior, "MEC Dirichlet weights c1,...,cS");
    analyze_cmd->add_option("--chains", aa.chains, "MEC chains");
    analyze_cmd->add_option("--warmup", aa.warmup, "MEC warmup iterations");
    analyze_cmd->add_option("--samples", aa.samples, "MEC kept iterations");
    std::uint64_t seed_value = 0;
    bool seed_given = false;
    analyze_cmd->add_option_function<std::uint64_t>(
        "--seed", [&](const std::uint64_t& v) { seed_value = v; seed_given = true; },
        "random seed");
    analyze_cmd->add_option("--jobs", aa.jobs, "worker threads");
    analyze_cmd->add_option("--out", aa.out_path, "output path (default stdout)");

    AnalyzeArgs ca;
    ca.curve_mode = true;
    CLI::App* curve_cmd = app.add_subcommand("curve", "estimate the whole effect curve");
    curve_cmd->add_option("--data", ca.data_path, "trial CSV")->required();
    curve_cmd->add_option("--model", ca.model, "it|eti|reti:S|ncs:D|mec");
    curve_cmd->add_flag("--rte", ca.rte, "add a correlated random treatment effect");
    curve_cmd->add_option("--ci-level", ca.ci_level, "confidence level");
    curve_cmd->add_option("--prior", ca.prior, "MEC Dirichlet weights");
    curve_cmd->add_option("--chains", ca.chains, "MEC chains");
    curve_cmd->add_option("--warmup", ca.warmup, "MEC warmup iterations");
    curve_cmd->add_option("--samples", ca.samples, "MEC kept iterations");
    std::uint64_t curve_seed_value = 0;
    bool curve_seed_given = false;
    curve_cmd->add_option_function<std::uint64_t>(
        "--seed",
        [&](const std::uint64_t& v) { curve_seed_value = v; curve_seed_given = true; },
        "random seed");
    curve_cmd->add_option("--jobs", ca.jobs, "worker threads");
    curve_cmd->add_option("--out", ca.out_path, "output path (default stdout)");

    SimulateArgs sa;
    CLI::App* sim_cmd = app.add_subcommand("simulate", "run a simulation study");
    sim_cmd->add_option("--scenario", sa.scenario, "base|reti|extra|rte|dirichlet");
    sim_cmd->add_option("--curves", sa.curves, "comma list of a,b,c,d");
    sim_cmd->add_option("--models", sa.models, "override analysis models");
    sim_cmd->add_option("--replicates", sa.replicates, "replicates per scenario");
    std::uint64_t sim_seed_value = 0;
    bool sim_seed_given = false;
    sim_cmd->add_option_function<std::uint64_t>(
        "--seed",
        [&](const std::uint64_t& v) { sim_seed_value = v; sim_seed_given = true; },
        "random seed");
    sim_cmd->add_option("--jobs", sa.jobs, "worker threads");
    sim_cmd->add_option("--out", sa.out_path, "results CSV path")->required();
    sim_cmd->add_option("--emit-data", sa.emit_data,
                        "also write the first replicate's dataset CSV");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (weights_cmd->parsed()) return run_weights(wa);
        if (analyze_cmd->parsed()) {
            if (seed_given) aa.seed = seed_value;
            return run_analyze(aa);
        }
        if (curve_cmd->parsed()) {
            if (curve_seed_given) ca.seed = curve_seed_value;
            return run_analyze(ca);
        }
        if (sim_cmd->parsed()) {
            if (sim_seed_given) sa.seed = sim_seed_value;
            return run_simulate(sa);
        }
        std::cerr << "no subcommand given\n";
        return kExitUsage;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
}

int parse_and_dispatch(int argc, const char* const* argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return parse_and_dispatch(args);
}

}  // namespace swedge
