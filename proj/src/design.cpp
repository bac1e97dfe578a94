#include "swedge/design.hpp"

#include <stdexcept>

namespace swedge {

void StudyDesign::validate() const {
    if (num_sequences < 2)
        throw std::domain_error("design: num_sequences must be >= 2");
    if (clusters_per_sequence < 1)
        throw std::domain_error("design: clusters_per_sequence must be >= 1");
    if (cluster_size < 1)
        throw std::domain_error("design: cluster_size must be >= 1");
    if (extra_periods < 0)
        throw std::domain_error("design: extra_periods must be >= 0");
}

int StudyDesign::sequence_of_cluster(int cluster) const {
    if (cluster < 1 || cluster > num_clusters())
        throw std::domain_error("design: cluster index out of range");
    return (cluster - 1) / clusters_per_sequence + 1;
}

StudyDesign standard_design(int num_sequences, int clusters_per_sequence,
                            int cluster_size, int extra_periods) {
    StudyDesign d;
    d.num_sequences = num_sequences;
    d.clusters_per_sequence = clusters_per_sequence;
    d.cluster_size = cluster_size;
    d.extra_periods = extra_periods;
    d.validate();
    return d;
}

namespace {

void check_cell(const StudyDesign& design, int q, int j) {
    if (q < 1 || q > design.num_sequences)
        throw std::domain_error("sequence index out of range");
    if (j < 1 || j > design.num_periods())
        throw std::domain_error("period index out of range");
}

}  // namespace

int exposure_time(const StudyDesign& design, int q, int j) {
    check_cell(design, q, j);
    return j > q ? j - q : 0;
}

int treatment_indicator(const StudyDesign& design, int q, int j) {
    check_cell(design, q, j);
    return j >= q + 1 ? 1 : 0;
}

double derive_phi(double tau2, double sigma2, int n) {
    if (tau2 < 0.0) throw std::domain_error("derive_phi: tau2 must be >= 0");
    if (sigma2 <= 0.0) throw std::domain_error("derive_phi: sigma2 must be > 0");
    if (n < 1) throw std::domain_error("derive_phi: n must be >= 1");
    return tau2 / (tau2 + sigma2 / static_cast<double>(n));
}

}  // namespace swedge
