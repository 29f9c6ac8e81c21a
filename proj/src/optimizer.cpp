#include "nml/optimizer.hpp"

#include <cmath>
#include <numbers>

#include "nml/kernels.hpp"

namespace nml {

double lr_at(index_t t, const OptimConfig& cfg) {
    cfg.validate();
    NML_REQUIRE(t <= cfg.total_steps, "lr_at: step ", t, " past schedule end ", cfg.total_steps);
    const double frac = static_cast<double>(t) / static_cast<double>(cfg.total_steps);
    return cfg.lr0 * 0.5 * (1.0 + std::cos(std::numbers::pi * frac));
}

Adam::Adam(std::vector<ParamRef> params, OptimConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
    cfg_.validate();
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const auto& p : params_) {
        NML_REQUIRE(p.value && p.grad, "Adam: null parameter '", p.name, "'");
        NML_REQUIRE(p.value->same_shape(*p.grad), "Adam: grad shape mismatch for '", p.name, "'");
        m_.emplace_back(p.value->rows(), p.value->cols());
        v_.emplace_back(p.value->rows(), p.value->cols());
    }
}

void Adam::step() {
    NML_REQUIRE(t_ < cfg_.total_steps, "Adam::step: schedule exhausted after ",
                cfg_.total_steps, " steps");
    const double lr = lr_at(t_, cfg_);
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));

    const auto& k = kernels::active();
    for (index_t i = 0; i < params_.size(); ++i) {
        Matrix& p = *params_[i].value;
        Matrix& g = *params_[i].grad;
        NML_REQUIRE_NUMERIC(g.all_finite(), "Adam::step: non-finite gradient for '",
                            params_[i].name, "' at step ", t_);
        k.adam_update(p.data(), g.data(), m_[i].data(), v_[i].data(), p.size(), lr, cfg_.beta1,
                      cfg_.beta2, cfg_.eps, bc1, bc2, cfg_.weight_decay);
        ensure_finite(p, "Adam::step parameter");
        g.set_zero();
    }
}

} // namespace nml
