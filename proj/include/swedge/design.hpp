#pragma once

#include <string>

namespace swedge {

// Geometry of a standard (optionally extended) stepped wedge design.
//
// Sequences and periods are 1-indexed.  Sequence q crosses over to
// treatment at period q+1, so every sequence has at least one control
// period and the design staircase is complete.  extra_periods appends
// measurement periods after the last crossover, during which all clusters
// are treated.
struct StudyDesign {
    int num_sequences = 0;         // Q
    int clusters_per_sequence = 1;
    int cluster_size = 1;          // K, individuals per cluster-period
    int extra_periods = 0;

    int num_periods() const { return num_sequences + 1 + extra_periods; }   // J
    int num_clusters() const { return num_sequences * clusters_per_sequence; }
    int max_exposure() const { return num_periods() - 1; }

    // cluster in 1..I; clusters are assigned to sequences in blocks
    int sequence_of_cluster(int cluster) const;

    void validate() const;
};

StudyDesign standard_design(int num_sequences, int clusters_per_sequence,
                            int cluster_size, int extra_periods = 0);

// Exposure time of sequence q at period j: max(0, j - q).  0 = untreated.
int exposure_time(const StudyDesign& design, int q, int j);

// 1 iff sequence q is in the treatment state at period j (j >= q+1).
int treatment_indicator(const StudyDesign& design, int q, int j);

// Cluster-mean correlation phi = tau^2 / (tau^2 + sigma^2/n).
double derive_phi(double tau2, double sigma2, int n);

}  // namespace swedge
