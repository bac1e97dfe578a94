#include "swedge/datagen.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "swedge/rng.hpp"

namespace swedge {

void GenParams::validate(const StudyDesign& design) const {
    design.validate();
    if (static_cast<int>(period_effects.size()) != design.num_periods())
        throw std::domain_error("gen params: period_effects must have one entry per period");
    if (!period_effects.empty() && period_effects.front() != 0.0)
        throw std::domain_error("gen params: first period effect must be 0");
    if (curve.max_exposure() < design.max_exposure())
        throw std::domain_error("gen params: effect curve shorter than max exposure");
    if (tau < 0.0) throw std::domain_error("gen params: tau must be >= 0");
    if (sigma <= 0.0) throw std::domain_error("gen params: sigma must be > 0");
    if (nu < 0.0) throw std::domain_error("gen params: nu must be >= 0");
    if (rho < -1.0 || rho > 1.0)
        throw std::domain_error("gen params: rho must be in [-1, 1]");
    if (nu == 0.0 && rho != 0.0)
        throw std::domain_error("gen params: rho requires nu > 0");
}

std::vector<double> linear_time_trend(int num_periods, double slope) {
    if (num_periods < 1)
        throw std::domain_error("time trend: num_periods must be >= 1");
    std::vector<double> beta(static_cast<std::size_t>(num_periods), 0.0);
    for (int j = 2; j <= num_periods; ++j)
        beta[static_cast<std::size_t>(j - 1)] =
            slope * static_cast<double>(j - 1) / static_cast<double>(num_periods - 1);
    return beta;
}

TrialDataset generate(const StudyDesign& design, const GenParams& params,
                      std::uint64_t seed) {
    params.validate(design);
    const int I = design.num_clusters();
    const int J = design.num_periods();
    const int K = design.cluster_size;

    TrialDataset data;
    data.design = design;
    data.rows.reserve(static_cast<std::size_t>(I) * J * K);

    for (int i = 1; i <= I; ++i) {
        const int q = design.sequence_of_cluster(i);
        RandomStream cluster_rng(derive_seed(seed, 1, static_cast<std::uint64_t>(i)));
        const double c_i = params.tau * cluster_rng.normal();
        // eta_i | C_i via the bivariate normal decomposition; when tau = 0 the
        // two effects are independent.
        double eta_i = 0.0;
        if (params.nu > 0.0) {
            const double z = cluster_rng.normal();
            if (params.tau > 0.0) {
                eta_i = params.rho * params.nu / params.tau * c_i +
                        params.nu * std::sqrt(1.0 - params.rho * params.rho) * z;
            } else {
                eta_i = params.nu * z;
            }
        }
        for (int j = 1; j <= J; ++j) {
            const int x = treatment_indicator(design, q, j);
            const int s = exposure_time(design, q, j);
            const double mean = params.mu +
                                params.period_effects[static_cast<std::size_t>(j - 1)] +
                                params.delta * params.curve.at(s) + c_i +
                                eta_i * static_cast<double>(x);
            RandomStream cell_rng(derive_seed(seed, 2, static_cast<std::uint64_t>(i),
                                              static_cast<std::uint64_t>(j)));
            for (int k = 1; k <= K; ++k) {
                TrialRow row;
                row.cluster = i;
                row.sequence = q;
                row.period = j;
                row.treated = x;
                row.exposure = s;
                row.outcome = mean + params.sigma * cell_rng.normal();
                data.rows.push_back(row);
            }
        }
    }
    return data;
}

void write_csv(const TrialDataset& data, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << "cluster,sequence,period,treated,exposure,outcome\n";
    char buf[64];
    for (const TrialRow& row : data.rows) {
        std::snprintf(buf, sizeof(buf), "%.17g", row.outcome);
        out << row.cluster << ',' << row.sequence << ',' << row.period << ','
            << row.treated << ',' << row.exposure << ',' << buf << '\n';
    }
    if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

}  // namespace

TrialDataset read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty file '" + path + "'");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "cluster,sequence,period,treated,exposure,outcome")
        throw std::runtime_error("unexpected header in '" + path + "'");

    std::vector<TrialRow> rows;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::vector<std::string> f = split_csv_line(line);
        if (f.size() != 6)
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": expected 6 fields");
        TrialRow row;
        try {
            row.cluster = std::stoi(f[0]);
            row.sequence = std::stoi(f[1]);
            row.period = std::stoi(f[2]);
            row.treated = std::stoi(f[3]);
            row.exposure = std::stoi(f[4]);
            row.outcome = std::stod(f[5]);
        } catch (const std::exception&) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": malformed field");
        }
        rows.push_back(row);
    }
    if (rows.empty()) throw std::runtime_error("no data rows in '" + path + "'");

    // Reconstruct the design from the index structure and check coherence.
    int I = 0, J = 0, Q = 0;
    for (const TrialRow& row : rows) {
        I = std::max(I, row.cluster);
        J = std::max(J, row.period);
        Q = std::max(Q, row.sequence);
    }
    if (I % Q != 0)
        throw std::runtime_error(path + ": cluster count not a multiple of sequence count");
    const std::size_t n = rows.size();
    if (n % (static_cast<std::size_t>(I) * J) != 0)
        throw std::runtime_error(path + ": rows not divisible into equal cluster-periods");
    const int K = static_cast<int>(n / (static_cast<std::size_t>(I) * J));

    TrialDataset data;
    data.design = standard_design(Q, I / Q, K, J - (Q + 1));
    data.rows = std::move(rows);
    for (const TrialRow& row : data.rows) {
        const int q = data.design.sequence_of_cluster(row.cluster);
        if (row.sequence != q)
            throw std::runtime_error(path + ": cluster/sequence mapping is not contiguous");
        if (row.treated != treatment_indicator(data.design, q, row.period) ||
            row.exposure != exposure_time(data.design, q, row.period))
            throw std::runtime_error(path + ": treatment/exposure inconsistent with design");
    }
    return data;
}

CollapsedData collapse(const TrialDataset& data) {
    const StudyDesign& design = data.design;
    const int I = design.num_clusters();
    const int J = design.num_periods();

    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(I, J);
    Eigen::MatrixXd sumsq = Eigen::MatrixXd::Zero(I, J);
    Eigen::MatrixXi count = Eigen::MatrixXi::Zero(I, J);
    for (const TrialRow& row : data.rows) {
        const int i = row.cluster - 1;
        const int j = row.period - 1;
        sum(i, j) += row.outcome;
        sumsq(i, j) += row.outcome * row.outcome;
        count(i, j) += 1;
    }
    const int K = count(0, 0);
    if (K < 1) throw std::runtime_error("collapse: empty cluster-period cell");
    if ((count.array() != K).any())
        throw std::runtime_error("collapse: unequal cluster-period cell sizes");

    CollapsedData out;
    out.design = design;
    out.cell_count = K;
    out.means = sum / static_cast<double>(K);
    out.exposures.resize(I, J);
    for (int i = 1; i <= I; ++i) {
        const int q = design.sequence_of_cluster(i);
        for (int j = 1; j <= J; ++j)
            out.exposures(i - 1, j - 1) = exposure_time(design, q, j);
    }
    out.ssw = (sumsq - sum.cwiseProduct(out.means)).sum();
    return out;
}

Eigen::MatrixXd sequence_period_means(const TrialDataset& data) {
    const CollapsedData cd = collapse(data);
    const StudyDesign& design = data.design;
    const int Q = design.num_sequences;
    const int J = design.num_periods();
    const int cps = design.clusters_per_sequence;

    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(Q, J);
    for (int i = 1; i <= design.num_clusters(); ++i)
        out.row(design.sequence_of_cluster(i) - 1) += cd.means.row(i - 1);
    return out / static_cast<double>(cps);
}

}  // namespace swedge
