#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "swedge/datagen.hpp"
#include "swedge/estimands.hpp"
#include "swedge/mec.hpp"
#include "swedge/models.hpp"

namespace swedge {

// One analysis applied to every replicate: either a mixed-model fit or a
// Bayesian monotone-curve fit.
struct AnalysisSpec {
    std::string label;
    bool is_mec = false;
    ModelSpec model;
    MecPrior prior;
    MecOptions mcmc;

    static AnalysisSpec lmm(const ModelSpec& spec);
    static AnalysisSpec mec(const MecPrior& prior, const MecOptions& mcmc,
                            const std::string& label = "mec");
};

struct EstimandRequest {
    EstimandSpec spec;
    RiemannMethod method = RiemannMethod::Right;

    std::string label() const;
};

struct SimScenario {
    std::string name;
    StudyDesign design;
    GenParams params;  // params.curve defines the generating effect curve
    std::vector<AnalysisSpec> analyses;
    std::vector<EstimandRequest> estimands;
    int replicates = 500;
    std::uint64_t seed = 0;
};

struct MetricSummary {
    int n = 0;
    double truth = 0.0;
    double mean_estimate = 0.0;
    double bias = 0.0, bias_mcse = 0.0;
    double coverage = 0.0, coverage_mcse = 0.0;
    double mse = 0.0, mse_mcse = 0.0;
    double power = 0.0, power_mcse = 0.0;
};

MetricSummary metrics(const std::vector<EstimandEstimate>& estimates, double truth);

struct SimCell {
    std::string model;
    std::string estimand;
    MetricSummary summary;
};

struct ModelAggregate {
    std::string model;
    double avg_pointwise_mse = 0.0;  // mean over replicates of (1/S) sum_s err^2
    int n_fail = 0;
};

struct SimResult {
    std::string scenario;
    std::string curve;
    int replicates = 0;
    std::vector<SimCell> cells;
    std::vector<ModelAggregate> models;

    const MetricSummary& cell(const std::string& model,
                              const std::string& estimand) const;
    const ModelAggregate& aggregate(const std::string& model) const;
};

// Runs all replicates; deterministic for a given seed at any parallelism.
SimResult run_scenario(const SimScenario& scenario, int parallelism);

// Ready-to-run versions of the five simulation studies: "base", "reti",
// "extra", "rte", "dirichlet".
std::vector<std::string> catalog_names();
std::vector<SimScenario> catalog_scenarios(const std::string& study,
                                           const std::vector<CurveKind>& curves,
                                           int replicates, std::uint64_t seed);

void write_results_csv(const std::vector<SimResult>& results,
                       const std::string& path);

}  // namespace swedge
