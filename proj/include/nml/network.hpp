#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "nml/matrix.hpp"
#include "nml/rng.hpp"
#include "nml/similarity.hpp"

namespace nml {

enum class Activation { relu, tanh };

inline std::string_view to_string(Activation a) {
    return a == Activation::relu ? "relu" : "tanh";
}

inline Activation parse_activation(std::string_view s) {
    if (s == "relu") return Activation::relu;
    if (s == "tanh") return Activation::tanh;
    throw config_error(detail::msg("unknown activation '", s, "' (expected relu|tanh)"));
}

// Dense feature extractor: input -> hidden...(activation) -> feature (linear).
struct BackboneConfig {
    index_t input_dim = 0;
    std::vector<index_t> hidden_dims;
    index_t feature_dim = 0;
    Activation activation = Activation::relu;

    void validate() const;
};

struct ParamRef {
    std::string name;
    Matrix* value;
    Matrix* grad;
};

// Linear classifier over features, no bias. The cosine head L2-normalizes
// both the feature row and each weight column before the dot product.
// Stateless: backward recomputes the normalization from its inputs.
class ClassifierHead {
public:
    ClassifierHead() = default;
    // Glorot-uniform columns
    ClassifierHead(index_t feature_dim, index_t n_classes, Similarity sim, Rng& rng);

    Matrix forward(const Matrix& z) const;
    // Accumulates d/dW into grad_w; optionally accumulates d/dz into grad_z.
    void backward(const Matrix& z, const Matrix& upstream, Matrix& grad_w, Matrix* grad_z) const;

    Matrix& weight() { return w_; }
    const Matrix& weight() const { return w_; }
    Similarity similarity() const { return sim_; }
    index_t n_classes() const { return w_.cols(); }

private:
    Matrix w_; // D x C
    Similarity sim_ = Similarity::cosine;
};

// Backbone plus classifier with mirrored gradient buffers. forward() caches
// activations for backward(); the cache must be dropped when parameters
// change (clear_cache()).
class Network {
public:
    // He-uniform weights for relu, Glorot-uniform for tanh; zero biases.
    Network(BackboneConfig cfg, index_t n_classes, Similarity sim, Rng& rng);

    struct ForwardResult {
        Matrix features; // N x D
        Matrix scores;   // N x C raw similarities
    };

    ForwardResult forward(const Matrix& batch);
    void backward(const Matrix& upstream_scores);

    // Cache-free inference paths.
    Matrix features(const Matrix& batch) const;
    Matrix scores(const Matrix& batch) const;

    std::vector<ParamRef> parameters(); // stable order: layer i weight/bias..., classifier
    void zero_grads();
    void clear_cache();
    bool has_cache() const { return cache_valid_; }

    const BackboneConfig& config() const { return cfg_; }
    index_t n_classes() const { return head_.n_classes(); }
    Similarity similarity() const { return head_.similarity(); }
    ClassifierHead& head() { return head_; }
    const ClassifierHead& head() const { return head_; }
    index_t n_layers() const { return layers_.size(); }

private:
    friend Network checkpoint_shell(BackboneConfig, index_t, Similarity);
    Network() = default;

    struct Layer {
        Matrix w, b;   // in x out, 1 x out
        Matrix gw, gb; // gradient buffers
    };

    Matrix activate(const Matrix& pre) const;

    BackboneConfig cfg_;
    std::vector<Layer> layers_;
    ClassifierHead head_;
    Matrix head_grad_;

    // forward cache
    bool cache_valid_ = false;
    Matrix cache_input_;
    std::vector<Matrix> cache_pre_; // pre-activation per layer
    std::vector<Matrix> cache_act_; // post-activation per layer (last = features)
};

using MetaMap = std::map<std::string, std::string>;

// Versioned flat-text checkpoint: backbone/classifier shape header, free-form
// metadata, then named tensors printed losslessly. Stable across runs.
void save_checkpoint(const Network& net, const MetaMap& meta, const std::filesystem::path& path);

struct Checkpoint {
    Network net;
    MetaMap meta;
};

Checkpoint load_checkpoint(const std::filesystem::path& path);

} // namespace nml
