#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "nml/dataset.hpp"
#include "nml/matrix.hpp"
#include "nml/network.hpp"

namespace nml {

// Feature-space separability summary at one margin. phi = D_inter/D_intra,
// flagged infinite when every class collapses to a point.
struct AnalysisReport {
    Matrix centers; // C x D, means of L2-normalized features (not re-normalized)
    double d_inter = 0.0;
    double d_intra = 0.0;
    double phi = 0.0;
    bool phi_finite = true;
    Split split = Split::base;
    double margin = 0.0;
};

// Per-class means of L2-normalized feature rows.
Matrix class_centers(const Matrix& features, std::span<const int> labels, index_t n_classes);

// D_inter: mean squared center distance over ordered pairs (C(C-1) terms).
// D_intra: per-class mean squared distance of normalized samples to their
// center, averaged over classes.
AnalysisReport variance_report(const Matrix& features, std::span<const int> labels,
                               index_t n_classes, double margin, Split split);

// Soft base-class assignment of novel samples: row j holds the class-j mean
// of softmax(beta * s(f(x), W)) over base classes, so each row sums to 1.
// p_same_per_class[j] = sum_k P_jk^2; p_same is their mean. hard_counts is
// the argmax histogram alongside the soft profile.
struct ConfusionProfile {
    Matrix p; // C_novel x C_base
    std::vector<double> p_same_per_class;
    double p_same = 0.0;
    double beta = 0.0;
    Matrix hard_counts; // C_novel x C_base argmax tallies
};

ConfusionProfile confusion_profile(const Network& net, const LabeledDataset& novel, double beta);

// Measured separability statistics at two margins m1 < m2.
struct PropositionInstance {
    double m1 = 0.0;
    double m2 = 0.0;
    double base_inter_m1 = 0.0;
    double base_intra_m1 = 0.0;
    double base_inter_m2 = 0.0;
    double base_intra_m2 = 0.0;
    double novel_inter_m1 = 0.0;
    double novel_inter_m2 = 0.0;
};

// Outcome of the threshold test together with the direct evaluation of the
// novel-class separability ordering under the same-base-class substitution
//   D_intra_novel(m) = p_same * D_intra_base(m) + (1 - p_same) * D_inter_base(m).
struct PropositionVerdict {
    bool applicable = false;     // r > 0, t > 0, positive variances
    double r = 0.0;              // (1/phi_b(m1) - 1/phi_b(m2)) / (m2 - m1)
    double t = 0.0;              // (psi(m1) - psi(m2)) / (m2 - m1)
    double psi_m1 = 0.0;
    double psi_m2 = 0.0;
    double threshold = 0.0;      // t / (t*(1 - 1/phi_b(m1)) + r*psi(m1))
    bool threshold_finite = true;
    bool predicted = false;      // p_same below threshold
    double phi_novel_m1 = 0.0;   // via the substitution
    double phi_novel_m2 = 0.0;
    bool holds = false;          // phi_novel(m2) < phi_novel(m1)
};

PropositionVerdict check_proposition(const PropositionInstance& inst, double p_same);

// Counts of atan2 angles binned uniformly over [0, 2*pi); features must be
// 2-D. The zero vector lands in the bin of angle 0.
Matrix angular_histogram(const Matrix& features, std::span<const int> labels, index_t n_classes,
                         index_t n_bins);

// CSV `class,f0..fD-1` of backbone features for every record.
void export_embeddings(const Network& net, const LabeledDataset& ds,
                       const std::filesystem::path& path);

// Report writers (schemas shared with the sweep pipeline).
void write_variance_csv(std::span<const AnalysisReport> reports, const std::filesystem::path& path);
void write_confusion_csv(const ConfusionProfile& profile, const std::filesystem::path& path);
void write_hard_confusion_csv(const ConfusionProfile& profile, const std::filesystem::path& path);
void write_p_same_csv(const ConfusionProfile& profile, const std::filesystem::path& path);
void write_histogram_csv(const Matrix& counts, index_t n_bins, const std::filesystem::path& path);

} // namespace nml
