#include "nml/analysis.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

#include "nml/kernels.hpp"
#include "nml/numeric.hpp"
#include "nml/textio.hpp"

namespace nml {

Matrix class_centers(const Matrix& features, std::span<const int> labels, index_t n_classes) {
    NML_REQUIRE(labels.size() == features.rows(), "class_centers: label/row count mismatch");
    NML_REQUIRE(n_classes >= 1, "class_centers: need at least one class");
    const Matrix zn = l2_normalize_rows(features);
    Matrix centers(n_classes, features.cols());
    std::vector<index_t> counts(n_classes, 0);
    const auto& k = kernels::active();
    for (index_t i = 0; i < zn.rows(); ++i) {
        const int y = labels[i];
        NML_REQUIRE(y >= 0 && static_cast<index_t>(y) < n_classes, "class_centers: label ", y,
                    " out of range [0,", n_classes, ")");
        k.axpy(1.0, zn.row(i), centers.row(static_cast<index_t>(y)), zn.cols());
        ++counts[static_cast<index_t>(y)];
    }
    for (index_t c = 0; c < n_classes; ++c) {
        NML_REQUIRE(counts[c] >= 1, "class_centers: class ", c, " has no samples");
        k.scale(1.0 / static_cast<double>(counts[c]), centers.row(c), centers.cols());
    }
    return centers;
}

namespace {

double sq_distance(const double* a, const double* b, index_t n) {
    double acc = 0.0;
    for (index_t i = 0; i < n; ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

} // namespace

AnalysisReport variance_report(const Matrix& features, std::span<const int> labels,
                               index_t n_classes, double margin, Split split) {
    NML_REQUIRE(n_classes >= 2, "variance_report: need >= 2 classes, got ", n_classes);
    AnalysisReport rep;
    rep.margin = margin;
    rep.split = split;
    rep.centers = class_centers(features, labels, n_classes);

    const index_t d = features.cols();
    double inter = 0.0;
    for (index_t j = 0; j < n_classes; ++j)
        for (index_t k = 0; k < n_classes; ++k)
            if (j != k) inter += sq_distance(rep.centers.row(j), rep.centers.row(k), d);
    rep.d_inter = inter / (static_cast<double>(n_classes) * static_cast<double>(n_classes - 1));

    const Matrix zn = l2_normalize_rows(features);
    std::vector<double> per_class(n_classes, 0.0);
    std::vector<index_t> counts(n_classes, 0);
    for (index_t i = 0; i < zn.rows(); ++i) {
        const index_t y = static_cast<index_t>(labels[i]);
        per_class[y] += sq_distance(zn.row(i), rep.centers.row(y), d);
        ++counts[y];
    }
    double intra = 0.0;
    for (index_t c = 0; c < n_classes; ++c)
        intra += per_class[c] / static_cast<double>(counts[c]);
    rep.d_intra = intra / static_cast<double>(n_classes);

    if (rep.d_intra > 0.0) {
        rep.phi = rep.d_inter / rep.d_intra;
        rep.phi_finite = true;
    } else {
        rep.phi = std::numeric_limits<double>::infinity();
        rep.phi_finite = false;
    }
    return rep;
}

ConfusionProfile confusion_profile(const Network& net, const LabeledDataset& novel, double beta) {
    NML_REQUIRE(beta > 0.0, "confusion_profile: beta must be > 0");
    NML_REQUIRE(novel.size() >= 1, "confusion_profile: empty novel dataset");
    novel.validate();

    const index_t c_novel = novel.n_classes();
    const index_t c_base = net.n_classes();
    ConfusionProfile prof;
    prof.beta = beta;
    prof.p = Matrix(c_novel, c_base);
    prof.hard_counts = Matrix(c_novel, c_base);

    const Matrix scores = net.scores(novel.features);
    std::vector<index_t> counts(c_novel, 0);
    std::vector<double> logits(c_base);
    for (index_t i = 0; i < scores.rows(); ++i) {
        for (index_t k = 0; k < c_base; ++k) logits[k] = beta * scores(i, k);
        const auto logp = log_softmax(logits);
        const index_t j = static_cast<index_t>(novel.labels[i]);
        for (index_t k = 0; k < c_base; ++k) prof.p(j, k) += std::exp(logp[k]);
        prof.hard_counts(j, argmax_row(scores, i)) += 1.0;
        ++counts[j];
    }
    for (index_t j = 0; j < c_novel; ++j) {
        NML_REQUIRE(counts[j] >= 1, "confusion_profile: novel class '", novel.class_names[j],
                    "' has no samples");
        kernels::active().scale(1.0 / static_cast<double>(counts[j]), prof.p.row(j), c_base);
        double pj = 0.0;
        for (index_t k = 0; k < c_base; ++k) pj += prof.p(j, k) * prof.p(j, k);
        prof.p_same_per_class.push_back(pj);
        prof.p_same += pj;
    }
    prof.p_same /= static_cast<double>(c_novel);
    return prof;
}

PropositionVerdict check_proposition(const PropositionInstance& inst, double p_same) {
    NML_REQUIRE(inst.m1 < inst.m2, "check_proposition: need m1 < m2");
    NML_REQUIRE(p_same > 0.0 && p_same <= 1.0, "check_proposition: p_same must lie in (0,1]");

    PropositionVerdict v;
    const double dm = inst.m2 - inst.m1;
    const bool positive = inst.base_inter_m1 > 0.0 && inst.base_inter_m2 > 0.0 &&
                          inst.base_intra_m1 > 0.0 && inst.base_intra_m2 > 0.0 &&
                          inst.novel_inter_m1 > 0.0 && inst.novel_inter_m2 > 0.0;
    if (positive) {
        const double phi_inv_m1 = inst.base_intra_m1 / inst.base_inter_m1;
        const double phi_inv_m2 = inst.base_intra_m2 / inst.base_inter_m2;
        v.r = (phi_inv_m1 - phi_inv_m2) / dm;
        v.psi_m1 = inst.novel_inter_m1 / inst.base_inter_m1;
        v.psi_m2 = inst.novel_inter_m2 / inst.base_inter_m2;
        v.t = (v.psi_m1 - v.psi_m2) / dm;
        v.applicable = v.r > 0.0 && v.t > 0.0;
        if (v.applicable) {
            const double denom = v.t * (1.0 - phi_inv_m1) + v.r * v.psi_m1;
            if (denom > 0.0) {
                v.threshold = v.t / denom;
                v.threshold_finite = true;
            } else {
                // nonpositive denominator: the ordering holds for every p_same
                v.threshold = std::numeric_limits<double>::infinity();
                v.threshold_finite = false;
            }
            v.predicted = p_same < v.threshold;
        }
    }

    // Direct evaluation through the same-base-class substitution.
    const double intra_n_m1 =
        p_same * inst.base_intra_m1 + (1.0 - p_same) * inst.base_inter_m1;
    const double intra_n_m2 =
        p_same * inst.base_intra_m2 + (1.0 - p_same) * inst.base_inter_m2;
    NML_REQUIRE_NUMERIC(intra_n_m1 > 0.0 && intra_n_m2 > 0.0,
                        "check_proposition: substituted intra-class variance not positive");
    v.phi_novel_m1 = inst.novel_inter_m1 / intra_n_m1;
    v.phi_novel_m2 = inst.novel_inter_m2 / intra_n_m2;
    v.holds = v.phi_novel_m2 < v.phi_novel_m1;
    return v;
}

Matrix angular_histogram(const Matrix& features, std::span<const int> labels, index_t n_classes,
                         index_t n_bins) {
    NML_REQUIRE(features.cols() == 2, "angular_histogram: features must be 2-D, got dim ",
                features.cols());
    NML_REQUIRE(n_bins >= 4, "angular_histogram: need >= 4 bins");
    NML_REQUIRE(labels.size() == features.rows(), "angular_histogram: label/row count mismatch");

    constexpr double two_pi = 2.0 * std::numbers::pi;
    Matrix counts(n_classes, n_bins);
    for (index_t i = 0; i < features.rows(); ++i) {
        const int y = labels[i];
        NML_REQUIRE(y >= 0 && static_cast<index_t>(y) < n_classes, "angular_histogram: label ", y,
                    " out of range");
        double angle = std::atan2(features(i, 1), features(i, 0)); // atan2(0,0) = 0 by convention
        if (angle < 0.0) angle += two_pi;
        index_t bin = static_cast<index_t>(angle / two_pi * static_cast<double>(n_bins));
        if (bin >= n_bins) bin = n_bins - 1;
        counts(static_cast<index_t>(y), bin) += 1.0;
    }
    return counts;
}

void export_embeddings(const Network& net, const LabeledDataset& ds,
                       const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error(detail::msg("cannot open ", path.string()));
    out << "class";
    for (index_t j = 0; j < net.config().feature_dim; ++j) out << ",f" << j;
    out << '\n';
    if (ds.size() > 0) {
        const Matrix z = net.features(ds.features);
        for (index_t i = 0; i < z.rows(); ++i) {
            out << ds.labels[i];
            for (index_t j = 0; j < z.cols(); ++j) out << ',' << fmt_double(z(i, j));
            out << '\n';
        }
    }
    if (!out) throw io_error(detail::msg("failed writing ", path.string()));
}

void write_variance_csv(std::span<const AnalysisReport> reports,
                        const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error(detail::msg("cannot open ", path.string()));
    out << "margin,split,D_inter,D_intra,phi\n";
    for (const auto& rep : reports) {
        out << fmt_double(rep.margin) << ',' << to_string(rep.split) << ','
            << fmt_double(rep.d_inter) << ',' << fmt_double(rep.d_intra) << ','
            << (rep.phi_finite ? fmt_double(rep.phi) : std::string("inf")) << '\n';
    }
    if (!out) throw io_error(detail::msg("failed writing ", path.string()));
}

void write_confusion_csv(const ConfusionProfile& profile, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error(detail::msg("cannot open ", path.string()));
    out << "novel_class,base_class,P_jk\n";
    for (index_t j = 0; j < profile.p.rows(); ++j)
        for (index_t k = 0; k < profile.p.cols(); ++k)
            out << j << ',' << k << ',' << fmt_double(profile.p(j, k)) << '\n';
    if (!out) throw io_error(detail::msg("failed writing ", path.string()));
}

void write_hard_confusion_csv(const ConfusionProfile& profile, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error(detail::msg("cannot open ", path.string()));
    out << "novel_class,base_class,count\n";
    for (index_t j = 0; j < profile.hard_counts.rows(); ++j)
        for (index_t k = 0; k < profile.hard_counts.cols(); ++k)
            out << j << ',' << k << ','
                << static_cast<long long>(profile.hard_counts(j, k)) << '\n';
    if (!out) throw io_error(detail::msg("failed writing ", path.string()));
}

void write_p_same_csv(const ConfusionProfile& profile, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error(detail::msg("cannot open ", path.string()));
    out << "novel_class,p_same\n";
    for (index_t j = 0; j < profile.p_same_per_class.size(); ++j)
        out << j << ',' << fmt_double(profile.p_same_per_class[j]) << '\n';
    out << "mean," << fmt_double(profile.p_same) << '\n';
    if (!out) throw io_error(detail::msg("failed writing ", path.string()));
}

void write_histogram_csv(const Matrix& counts, index_t n_bins, const std::filesystem::path& path) {
    NML_REQUIRE(counts.cols() == n_bins, "write_histogram_csv: bin count mismatch");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error(detail::msg("cannot open ", path.string()));
    out << "class,bin_start_rad,count\n";
    constexpr double two_pi = 2.0 * std::numbers::pi;
    for (index_t c = 0; c < counts.rows(); ++c)
        for (index_t b = 0; b < n_bins; ++b)
            out << c << ','
                << fmt_double(two_pi * static_cast<double>(b) / static_cast<double>(n_bins)) << ','
                << static_cast<long long>(counts(c, b)) << '\n';
    if (!out) throw io_error(detail::msg("failed writing ", path.string()));
}

} // namespace nml
