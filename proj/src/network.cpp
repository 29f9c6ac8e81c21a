#include "nml/network.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "nml/kernels.hpp"
#include "nml/numeric.hpp"
#include "nml/textio.hpp"

namespace nml {

void BackboneConfig::validate() const {
    NML_REQUIRE(input_dim >= 1, "BackboneConfig: input_dim must be >= 1");
    NML_REQUIRE(feature_dim >= 1, "BackboneConfig: feature_dim must be >= 1");
    for (const index_t h : hidden_dims)
        NML_REQUIRE(h >= 1, "BackboneConfig: hidden width must be >= 1");
}

namespace {

Matrix uniform_init(index_t rows, index_t cols, double limit, Rng& rng) {
    Matrix m(rows, cols);
    for (index_t i = 0; i < rows; ++i)
        for (index_t j = 0; j < cols; ++j) m(i, j) = rng.uniform(-limit, limit);
    return m;
}

double glorot_limit(index_t fan_in, index_t fan_out) {
    return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

double he_limit(index_t fan_in) {
    return std::sqrt(6.0 / static_cast<double>(fan_in));
}

} // namespace

ClassifierHead::ClassifierHead(index_t feature_dim, index_t n_classes, Similarity sim, Rng& rng)
    : w_(uniform_init(feature_dim, n_classes, glorot_limit(feature_dim, n_classes), rng)),
      sim_(sim) {}

Matrix ClassifierHead::forward(const Matrix& z) const {
    NML_REQUIRE(z.cols() == w_.rows(), "ClassifierHead: feature dim ", z.cols(),
                " != classifier rows ", w_.rows());
    if (sim_ == Similarity::inner_product) return matmul(z, w_);
    const Matrix zn = l2_normalize_rows(z);
    const Matrix wn_t = l2_normalize_rows(transpose(w_)); // C x D, unit rows
    return matmul(zn, transpose(wn_t));
}

void ClassifierHead::backward(const Matrix& z, const Matrix& upstream, Matrix& grad_w,
                              Matrix* grad_z) const {
    NML_REQUIRE(upstream.rows() == z.rows() && upstream.cols() == w_.cols(),
                "ClassifierHead::backward: upstream must be ", z.rows(), "x", w_.cols(),
                ", got ", upstream.rows(), "x", upstream.cols());
    NML_REQUIRE(grad_w.same_shape(w_), "ClassifierHead::backward: grad_w shape mismatch");

    if (sim_ == Similarity::inner_product) {
        axpy_into(grad_w, 1.0, matmul(transpose(z), upstream));
        if (grad_z) axpy_into(*grad_z, 1.0, matmul(upstream, transpose(w_)));
        return;
    }

    const auto& k = kernels::active();
    const index_t d = w_.rows();
    const Matrix zn = l2_normalize_rows(z);
    const Matrix wt = transpose(w_); // C x D rows are classifier columns
    const Matrix wn_t = l2_normalize_rows(wt);

    // d/dW column j: pull upstream through the column normalization.
    // dWn = zn^T * upstream, handled row-wise on the transposed layout.
    const Matrix dwn_t = matmul(transpose(upstream), zn); // C x D
    Matrix gwt(wn_t.rows(), d);
    for (index_t j = 0; j < wn_t.rows(); ++j) {
        const double norm = l2_norm(wt.row_span(j));
        const double* gu = dwn_t.row(j);
        double* dst = gwt.row(j);
        if (norm >= kNormEps) {
            const double* u = wn_t.row(j);
            const double inner = k.dot(gu, u, d);
            for (index_t i = 0; i < d; ++i) dst[i] = (gu[i] - inner * u[i]) / norm;
        } else {
            for (index_t i = 0; i < d; ++i) dst[i] = gu[i] / kNormEps;
        }
    }
    axpy_into(grad_w, 1.0, transpose(gwt));

    if (grad_z) {
        const Matrix dzn = matmul(upstream, wn_t); // N x D
        for (index_t r = 0; r < z.rows(); ++r) {
            const double norm = l2_norm(z.row_span(r));
            const double* gu = dzn.row(r);
            double* dst = grad_z->row(r);
            if (norm >= kNormEps) {
                const double* u = zn.row(r);
                const double inner = k.dot(gu, u, d);
                for (index_t i = 0; i < d; ++i) dst[i] += (gu[i] - inner * u[i]) / norm;
            } else {
                for (index_t i = 0; i < d; ++i) dst[i] += gu[i] / kNormEps;
            }
        }
        ensure_finite(*grad_z, "ClassifierHead::backward grad_z");
    }
}

Network::Network(BackboneConfig cfg, index_t n_classes, Similarity sim, Rng& rng)
    : cfg_(std::move(cfg)) {
    cfg_.validate();
    NML_REQUIRE(n_classes >= 1, "Network: n_classes must be >= 1");

    std::vector<index_t> dims;
    dims.push_back(cfg_.input_dim);
    dims.insert(dims.end(), cfg_.hidden_dims.begin(), cfg_.hidden_dims.end());
    dims.push_back(cfg_.feature_dim);

    for (index_t l = 0; l + 1 < dims.size(); ++l) {
        const index_t in = dims[l];
        const index_t out = dims[l + 1];
        const double limit =
            cfg_.activation == Activation::relu ? he_limit(in) : glorot_limit(in, out);
        Layer layer;
        layer.w = uniform_init(in, out, limit, rng);
        layer.b = Matrix(1, out);
        layer.gw = Matrix(in, out);
        layer.gb = Matrix(1, out);
        layers_.push_back(std::move(layer));
    }
    head_ = ClassifierHead(cfg_.feature_dim, n_classes, sim, rng);
    head_grad_ = Matrix(cfg_.feature_dim, n_classes);
}

Matrix Network::activate(const Matrix& pre) const {
    Matrix out(pre.rows(), pre.cols());
    if (cfg_.activation == Activation::relu) {
        kernels::active().relu(pre.data(), out.data(), pre.size());
    } else {
        for (index_t i = 0; i < pre.size(); ++i) out.data()[i] = std::tanh(pre.data()[i]);
    }
    return out;
}

Network::ForwardResult Network::forward(const Matrix& batch) {
    NML_REQUIRE(batch.cols() == cfg_.input_dim, "Network::forward: batch width ", batch.cols(),
                " != input_dim ", cfg_.input_dim);
    cache_input_ = batch;
    cache_pre_.clear();
    cache_act_.clear();
    const Matrix* h = &cache_input_;
    for (index_t l = 0; l < layers_.size(); ++l) {
        Matrix pre = add_row_broadcast(matmul(*h, layers_[l].w), layers_[l].b);
        const bool last = l + 1 == layers_.size();
        cache_act_.push_back(last ? pre : activate(pre));
        cache_pre_.push_back(std::move(pre));
        h = &cache_act_.back();
    }
    cache_valid_ = true;
    ForwardResult res;
    res.features = cache_act_.back();
    res.scores = head_.forward(res.features);
    return res;
}

void Network::backward(const Matrix& upstream_scores) {
    NML_REQUIRE(cache_valid_, "Network::backward: no forward cache (call forward first)");
    const Matrix& features = cache_act_.back();
    Matrix dh(features.rows(), features.cols());
    head_.backward(features, upstream_scores, head_grad_, &dh);

    const auto& k = kernels::active();
    for (index_t l = layers_.size(); l-- > 0;) {
        Matrix da;
        if (l + 1 == layers_.size()) {
            da = std::move(dh); // linear feature layer
        } else {
            da = Matrix(dh.rows(), dh.cols());
            if (cfg_.activation == Activation::relu)
                k.relu_grad(cache_pre_[l].data(), dh.data(), da.data(), dh.size());
            else
                k.tanh_grad(cache_act_[l].data(), dh.data(), da.data(), dh.size());
        }
        const Matrix& input = l == 0 ? cache_input_ : cache_act_[l - 1];
        axpy_into(layers_[l].gw, 1.0, matmul(transpose(input), da));
        axpy_into(layers_[l].gb, 1.0, col_sums(da));
        if (l > 0) dh = matmul(da, transpose(layers_[l].w));
    }
}

Matrix Network::features(const Matrix& batch) const {
    NML_REQUIRE(batch.cols() == cfg_.input_dim, "Network::features: batch width ", batch.cols(),
                " != input_dim ", cfg_.input_dim);
    Matrix h = batch;
    for (index_t l = 0; l < layers_.size(); ++l) {
        Matrix pre = add_row_broadcast(matmul(h, layers_[l].w), layers_[l].b);
        h = (l + 1 == layers_.size()) ? std::move(pre) : activate(pre);
    }
    return h;
}

Matrix Network::scores(const Matrix& batch) const {
    return head_.forward(features(batch));
}

std::vector<ParamRef> Network::parameters() {
    std::vector<ParamRef> out;
    for (index_t l = 0; l < layers_.size(); ++l) {
        out.push_back({detail::msg("layer", l, ".weight"), &layers_[l].w, &layers_[l].gw});
        out.push_back({detail::msg("layer", l, ".bias"), &layers_[l].b, &layers_[l].gb});
    }
    out.push_back({"classifier.weight", &head_.weight(), &head_grad_});
    return out;
}

void Network::zero_grads() {
    for (auto& layer : layers_) {
        layer.gw.set_zero();
        layer.gb.set_zero();
    }
    head_grad_.set_zero();
}

void Network::clear_cache() {
    cache_valid_ = false;
    cache_input_ = Matrix();
    cache_pre_.clear();
    cache_act_.clear();
}

Network checkpoint_shell(BackboneConfig cfg, index_t n_classes, Similarity sim) {
    Network net;
    net.cfg_ = std::move(cfg);
    net.cfg_.validate();
    NML_REQUIRE(n_classes >= 1, "checkpoint: n_classes must be >= 1");

    std::vector<index_t> dims;
    dims.push_back(net.cfg_.input_dim);
    dims.insert(dims.end(), net.cfg_.hidden_dims.begin(), net.cfg_.hidden_dims.end());
    dims.push_back(net.cfg_.feature_dim);
    for (index_t l = 0; l + 1 < dims.size(); ++l) {
        Network::Layer layer;
        layer.w = Matrix(dims[l], dims[l + 1]);
        layer.b = Matrix(1, dims[l + 1]);
        layer.gw = Matrix(dims[l], dims[l + 1]);
        layer.gb = Matrix(1, dims[l + 1]);
        net.layers_.push_back(std::move(layer));
    }
    Rng scratch(0);
    net.head_ = ClassifierHead(net.cfg_.feature_dim, n_classes, sim, scratch);
    net.head_.weight().set_zero();
    net.head_grad_ = Matrix(net.cfg_.feature_dim, n_classes);
    return net;
}

namespace {

constexpr std::string_view kCheckpointMagic = "nml-checkpoint 1";

} // namespace

void save_checkpoint(const Network& net, const MetaMap& meta, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error(detail::msg("cannot open checkpoint for writing: ", path.string()));

    out << kCheckpointMagic << '\n';
    for (const auto& [key, value] : meta) {
        NML_REQUIRE(key.find_first_of(" \n") == std::string::npos, "checkpoint meta key '", key,
                    "' must not contain spaces");
        NML_REQUIRE(value.find('\n') == std::string::npos, "checkpoint meta value for '", key,
                    "' must be single-line");
        out << "meta " << key << ' ' << value << '\n';
    }
    const auto& cfg = net.config();
    out << "backbone " << cfg.input_dim << ' ' << cfg.feature_dim << ' '
        << to_string(cfg.activation) << ' ' << cfg.hidden_dims.size();
    for (const index_t h : cfg.hidden_dims) out << ' ' << h;
    out << '\n';
    out << "classifier " << net.n_classes() << ' ' << to_string(net.similarity()) << '\n';

    auto params = const_cast<Network&>(net).parameters();
    for (const auto& p : params) {
        out << "tensor " << p.name << ' ' << p.value->rows() << ' ' << p.value->cols() << '\n';
        for (index_t i = 0; i < p.value->rows(); ++i) {
            for (index_t j = 0; j < p.value->cols(); ++j) {
                if (j) out << ' ';
                out << fmt_double((*p.value)(i, j));
            }
            out << '\n';
        }
    }
    out << "end\n";
    if (!out) throw io_error(detail::msg("failed writing checkpoint: ", path.string()));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error(detail::msg("cannot open checkpoint: ", path.string()));

    std::string line;
    auto next_line = [&](const char* what) {
        if (!std::getline(in, line))
            throw format_error(detail::msg("checkpoint truncated: expected ", what, " in ",
                                           path.string()));
        return std::string_view(line);
    };

    if (next_line("magic") != kCheckpointMagic)
        throw format_error(detail::msg("bad checkpoint magic in ", path.string()));

    MetaMap meta;
    std::string_view cur = next_line("backbone header");
    while (cur.starts_with("meta ")) {
        const auto rest = cur.substr(5);
        const auto sp = rest.find(' ');
        if (sp == std::string_view::npos)
            throw format_error(detail::msg("bad meta line in ", path.string()));
        meta.emplace(std::string(rest.substr(0, sp)), std::string(rest.substr(sp + 1)));
        cur = next_line("backbone header");
    }

    auto toks = split(cur, ' ');
    if (toks.size() < 4 || toks[0] != "backbone")
        throw format_error(detail::msg("bad backbone header in ", path.string()));
    BackboneConfig cfg;
    cfg.input_dim = static_cast<index_t>(parse_ull(toks[1], "input_dim"));
    cfg.feature_dim = static_cast<index_t>(parse_ull(toks[2], "feature_dim"));
    cfg.activation = parse_activation(toks[3]);
    const index_t n_hidden = static_cast<index_t>(parse_ull(toks[4], "hidden count"));
    if (toks.size() != 5 + n_hidden)
        throw format_error(detail::msg("bad backbone header in ", path.string()));
    for (index_t i = 0; i < n_hidden; ++i)
        cfg.hidden_dims.push_back(static_cast<index_t>(parse_ull(toks[5 + i], "hidden width")));

    toks = split(next_line("classifier header"), ' ');
    if (toks.size() != 3 || toks[0] != "classifier")
        throw format_error(detail::msg("bad classifier header in ", path.string()));
    const index_t n_classes = static_cast<index_t>(parse_ull(toks[1], "n_classes"));
    const Similarity sim = parse_similarity(toks[2]);

    Checkpoint ckpt{checkpoint_shell(std::move(cfg), n_classes, sim), std::move(meta)};

    auto params = ckpt.net.parameters();
    for (auto& p : params) {
        toks = split(next_line("tensor header"), ' ');
        if (toks.size() != 4 || toks[0] != "tensor" || toks[1] != p.name)
            throw format_error(detail::msg("expected tensor ", p.name, " in ", path.string()));
        const index_t rows = static_cast<index_t>(parse_ull(toks[2], "tensor rows"));
        const index_t cols = static_cast<index_t>(parse_ull(toks[3], "tensor cols"));
        if (rows != p.value->rows() || cols != p.value->cols())
            throw format_error(detail::msg("tensor ", p.name, " has shape ", rows, "x", cols,
                                           ", expected ", p.value->rows(), "x", p.value->cols()));
        for (index_t i = 0; i < rows; ++i) {
            const auto row_toks = split(next_line("tensor row"), ' ');
            if (row_toks.size() != cols)
                throw format_error(detail::msg("tensor ", p.name, " row ", i, ": expected ",
                                               cols, " values, got ", row_toks.size()));
            for (index_t j = 0; j < cols; ++j)
                (*p.value)(i, j) = parse_double(row_toks[j], "tensor value");
        }
        ensure_finite(*p.value, "checkpoint tensor");
    }
    if (next_line("end marker") != "end")
        throw format_error(detail::msg("missing end marker in ", path.string()));
    return ckpt;
}

} // namespace nml
