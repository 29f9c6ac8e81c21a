#pragma once

#include <span>

#include "nml/matrix.hpp"
#include "nml/similarity.hpp"

namespace nml {

// Margin softmax family. For sample i with true class y the per-sample loss is
//
//   -log( e^{beta*(s_y - m)} / (e^{beta*(s_y - m)} + sum_{j!=y} e^{beta*s_j}) )
//
// with the margin m free to take either sign. At m = 0 this is the plain
// (temperature-scaled) softmax cross-entropy. Label smoothing replaces the
// one-hot target with (1-eps)*one_hot + eps/C over the margin-adjusted logits.
struct LossSpec {
    double margin = 0.0;
    double beta = 10.0;
    Similarity similarity = Similarity::cosine;
    double label_smoothing = 0.0;

    void validate() const {
        NML_REQUIRE(beta > 0.0, "LossSpec: beta must be > 0, got ", beta);
        NML_REQUIRE(label_smoothing >= 0.0 && label_smoothing < 1.0,
                    "LossSpec: label_smoothing must lie in [0,1), got ", label_smoothing);
    }
};

struct LossResult {
    double mean_loss = 0.0;
    Matrix grad_scores; // d(mean_loss)/d(scores), same shape as scores
};

// scores: N x C raw similarities; labels: N class ids in [0, C).
// Computed through one shifted log-sum-exp per row; raw exponentials of the
// unshifted logits are never materialized.
LossResult margin_loss(const Matrix& scores, std::span<const int> labels, const LossSpec& spec);

struct MarginOrdering {
    double loss_lo = 0.0; // loss at the smaller margin
    double loss_hi = 0.0; // loss at the larger margin
    bool ordered = false; // loss_lo <= loss_hi + 1e-12
};

// Evidence that the loss is nondecreasing in the margin (with unsmoothed
// targets d(mean_loss)/dm = beta * mean(1 - p_y) >= 0). Requires m1 < m2.
MarginOrdering loss_monotonicity_witness(const Matrix& scores, std::span<const int> labels,
                                         const LossSpec& spec, double m1, double m2);

} // namespace nml
