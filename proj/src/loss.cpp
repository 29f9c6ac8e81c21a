#include "nml/loss.hpp"

#include <cmath>
#include <vector>

#include "nml/kernels.hpp"
#include "nml/numeric.hpp"

namespace nml {

LossResult margin_loss(const Matrix& scores, std::span<const int> labels, const LossSpec& spec) {
    spec.validate();
    const index_t n = scores.rows();
    const index_t c = scores.cols();
    NML_REQUIRE(n >= 1 && c >= 1, "margin_loss: scores must be nonempty, got ", n, "x", c);
    NML_REQUIRE(labels.size() == n, "margin_loss: ", labels.size(), " labels for ", n, " rows");
    NML_REQUIRE_NUMERIC(scores.all_finite(), "margin_loss: non-finite score");

    const double eps = spec.label_smoothing;
    const double off_target = eps / static_cast<double>(c);
    const double on_target = 1.0 - eps + off_target;

    LossResult res;
    res.grad_scores = Matrix(n, c);
    std::vector<double> logits(c);
    double total = 0.0;
    for (index_t i = 0; i < n; ++i) {
        const int y = labels[i];
        NML_REQUIRE(y >= 0 && static_cast<index_t>(y) < c,
                    "margin_loss: label ", y, " out of range [0,", c, ") at row ", i);
        for (index_t j = 0; j < c; ++j) logits[j] = spec.beta * scores(i, j);
        logits[static_cast<index_t>(y)] = spec.beta * (scores(i, static_cast<index_t>(y)) - spec.margin);

        const double lse = logsumexp(logits);
        // loss_i = lse - sum_j q_j * l_j; with eps=0 this is lse - l_y
        double weighted = 0.0;
        for (index_t j = 0; j < c; ++j)
            weighted += (static_cast<index_t>(y) == j ? on_target : off_target) * logits[j];
        total += lse - weighted;

        for (index_t j = 0; j < c; ++j) {
            const double p = std::exp(logits[j] - lse);
            const double q = static_cast<index_t>(y) == j ? on_target : off_target;
            res.grad_scores(i, j) = spec.beta * (p - q) / static_cast<double>(n);
        }
    }
    res.mean_loss = total / static_cast<double>(n);
    NML_REQUIRE_NUMERIC(std::isfinite(res.mean_loss), "margin_loss: non-finite loss");
    return res;
}

MarginOrdering loss_monotonicity_witness(const Matrix& scores, std::span<const int> labels,
                                         const LossSpec& spec, double m1, double m2) {
    NML_REQUIRE(m1 < m2, "loss_monotonicity_witness: expected m1 < m2, got ", m1, " >= ", m2);
    LossSpec lo = spec;
    lo.margin = m1;
    LossSpec hi = spec;
    hi.margin = m2;
    MarginOrdering out;
    out.loss_lo = margin_loss(scores, labels, lo).mean_loss;
    out.loss_hi = margin_loss(scores, labels, hi).mean_loss;
    out.ordered = out.loss_lo <= out.loss_hi + 1e-12;
    return out;
}

} // namespace nml
