#pragma once

#include <vector>

#include "nml/matrix.hpp"
#include "nml/network.hpp"

namespace nml {

// Adam with decoupled weight decay and a cosine learning-rate schedule
// measured in optimizer steps.
struct OptimConfig {
    double lr0 = 3e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;
    index_t total_steps = 1;

    void validate() const {
        NML_REQUIRE(lr0 > 0.0, "OptimConfig: lr0 must be > 0");
        NML_REQUIRE(beta1 >= 0.0 && beta1 < 1.0, "OptimConfig: beta1 must lie in [0,1)");
        NML_REQUIRE(beta2 >= 0.0 && beta2 < 1.0, "OptimConfig: beta2 must lie in [0,1)");
        NML_REQUIRE(eps > 0.0, "OptimConfig: eps must be > 0");
        NML_REQUIRE(weight_decay >= 0.0, "OptimConfig: weight_decay must be >= 0");
        NML_REQUIRE(total_steps >= 1, "OptimConfig: total_steps must be >= 1");
    }
};

// lr0 * 0.5 * (1 + cos(pi * t / T)); t must lie in [0, T]
double lr_at(index_t t, const OptimConfig& cfg);

class Adam {
public:
    Adam(std::vector<ParamRef> params, OptimConfig cfg);

    // Bias-corrected update at lr_at(step_count()), decoupled decay
    // -lr*wd*p, then zeroes the gradient buffers and advances the counter.
    void step();

    index_t step_count() const { return t_; }
    const OptimConfig& config() const { return cfg_; }

private:
    std::vector<ParamRef> params_;
    std::vector<Matrix> m_;
    std::vector<Matrix> v_;
    OptimConfig cfg_;
    index_t t_ = 0;
};

} // namespace nml
