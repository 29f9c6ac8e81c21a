#include "nml/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>

#include "nml/numeric.hpp"
#include "nml/textio.hpp"

namespace nml {

std::vector<std::vector<index_t>> LabeledDataset::indices_by_class() const {
    std::vector<std::vector<index_t>> out(n_classes());
    for (index_t i = 0; i < labels.size(); ++i) out[static_cast<index_t>(labels[i])].push_back(i);
    return out;
}

void LabeledDataset::validate() const {
    NML_REQUIRE(labels.size() == features.rows(), "dataset: ", labels.size(), " labels for ",
                features.rows(), " records");
    std::vector<index_t> counts(n_classes(), 0);
    for (const int y : labels) {
        NML_REQUIRE(y >= 0 && static_cast<index_t>(y) < n_classes(), "dataset: label ", y,
                    " out of range [0,", n_classes(), ")");
        ++counts[static_cast<index_t>(y)];
    }
    for (index_t c = 0; c < counts.size(); ++c)
        NML_REQUIRE(counts[c] >= 1, "dataset: class '", class_names[c], "' has no records");
    NML_REQUIRE(features.all_finite(), "dataset: non-finite feature");
}

LabeledDataset gen_synthetic(const SyntheticSpec& spec) {
    NML_REQUIRE(spec.n_classes >= 2, "gen_synthetic: need >= 2 classes");
    NML_REQUIRE(spec.per_class >= 1, "gen_synthetic: per_class must be >= 1");
    NML_REQUIRE(spec.dim >= 1, "gen_synthetic: dim must be >= 1");
    NML_REQUIRE(spec.cluster_std >= 0.0, "gen_synthetic: cluster_std must be >= 0");
    NML_REQUIRE(spec.confusability >= 0.0 && spec.confusability <= 1.0,
                "gen_synthetic: confusability must lie in [0,1], got ", spec.confusability);
    NML_REQUIRE(spec.novel_classes < spec.n_classes,
                "gen_synthetic: novel_classes must leave at least one base class");

    Rng root(spec.seed);
    Rng mean_rng = root.child("means");
    const index_t n_base = spec.n_classes - spec.novel_classes;

    Matrix means(spec.n_classes, spec.dim);
    for (index_t c = 0; c < spec.n_classes; ++c) {
        for (index_t j = 0; j < spec.dim; ++j) means(c, j) = mean_rng.normal();
        l2_normalize_inplace(means.row(c), spec.dim);
        if (c >= n_base && spec.confusability > 0.0) {
            const index_t b = static_cast<index_t>(mean_rng.below(n_base));
            for (index_t j = 0; j < spec.dim; ++j)
                means(c, j) = (1.0 - spec.confusability) * means(c, j) +
                              spec.confusability * means(b, j);
            l2_normalize_inplace(means.row(c), spec.dim);
        }
    }

    Rng point_rng = root.child("points");
    LabeledDataset ds;
    ds.features = Matrix(spec.n_classes * spec.per_class, spec.dim);
    ds.labels.reserve(ds.features.rows());
    for (index_t c = 0; c < spec.n_classes; ++c) {
        ds.class_names.push_back(std::to_string(c));
        for (index_t s = 0; s < spec.per_class; ++s) {
            double* row = ds.features.row(c * spec.per_class + s);
            for (index_t j = 0; j < spec.dim; ++j)
                row[j] = means(c, j) + spec.cluster_std * point_rng.normal();
            l2_normalize_inplace(row, spec.dim);
            ds.labels.push_back(static_cast<int>(c));
        }
    }
    ds.validate();
    return ds;
}

Episode sample_episode(const LabeledDataset& ds, index_t way, index_t shot, index_t query,
                       Rng& rng) {
    NML_REQUIRE(way >= 1 && shot >= 1 && query >= 1, "sample_episode: way/shot/query must be >= 1");
    NML_REQUIRE(ds.n_classes() >= way, "sample_episode: dataset has ", ds.n_classes(),
                " classes, need ", way);

    const auto by_class = ds.indices_by_class();
    const auto chosen = rng.sample_without_replacement(ds.n_classes(), way);

    Episode ep;
    ep.way = way;
    ep.shot = shot;
    ep.query_per_class = query;
    ep.support_x = Matrix(way * shot, ds.dim());
    ep.query_x = Matrix(way * query, ds.dim());
    for (index_t t = 0; t < way; ++t) {
        const index_t c = chosen[t];
        const auto& pool = by_class[c];
        NML_REQUIRE(pool.size() >= shot + query, "sample_episode: class '", ds.class_names[c],
                    "' has ", pool.size(), " records, need ", shot + query);
        const auto picks = rng.sample_without_replacement(pool.size(), shot + query);
        for (index_t s = 0; s < shot; ++s) {
            const double* src = ds.features.row(pool[picks[s]]);
            std::copy(src, src + ds.dim(), ep.support_x.row(t * shot + s));
            ep.support_y.push_back(static_cast<int>(t));
        }
        for (index_t q = 0; q < query; ++q) {
            const double* src = ds.features.row(pool[picks[shot + q]]);
            std::copy(src, src + ds.dim(), ep.query_x.row(t * query + q));
            ep.query_y.push_back(static_cast<int>(t));
        }
        ep.source_class_ids.push_back(static_cast<int>(c));
    }
    return ep;
}

LabeledDataset select_classes(const LabeledDataset& ds, std::span<const int> class_ids,
                              Split tag) {
    std::vector<int> remap(ds.n_classes(), -1);
    LabeledDataset out;
    out.split_tag = tag;
    for (index_t t = 0; t < class_ids.size(); ++t) {
        const int c = class_ids[t];
        NML_REQUIRE(c >= 0 && static_cast<index_t>(c) < ds.n_classes(),
                    "select_classes: class id ", c, " out of range");
        NML_REQUIRE(remap[static_cast<index_t>(c)] == -1, "select_classes: duplicate class id ", c);
        remap[static_cast<index_t>(c)] = static_cast<int>(t);
        out.class_names.push_back(ds.class_names[static_cast<index_t>(c)]);
    }
    std::vector<index_t> rows;
    for (index_t i = 0; i < ds.size(); ++i)
        if (remap[static_cast<index_t>(ds.labels[i])] != -1) rows.push_back(i);

    out.features = Matrix(rows.size(), ds.dim());
    out.labels.reserve(rows.size());
    for (index_t r = 0; r < rows.size(); ++r) {
        const double* src = ds.features.row(rows[r]);
        std::copy(src, src + ds.dim(), out.features.row(r));
        out.labels.push_back(remap[static_cast<index_t>(ds.labels[rows[r]])]);
    }
    if (!out.class_names.empty()) out.validate();
    return out;
}

std::pair<LabeledDataset, LabeledDataset> holdout_records(const LabeledDataset& ds, double frac,
                                                          Rng& rng) {
    NML_REQUIRE(frac >= 0.0 && frac < 1.0, "holdout_records: frac must lie in [0,1), got ", frac);
    const auto by_class = ds.indices_by_class();
    std::vector<bool> held(ds.size(), false);
    index_t n_held = 0;
    for (index_t c = 0; c < by_class.size(); ++c) {
        const auto& pool = by_class[c];
        index_t k = frac > 0.0
                        ? std::max<index_t>(1, static_cast<index_t>(std::llround(
                                                   frac * static_cast<double>(pool.size()))))
                        : 0;
        if (k >= pool.size()) k = pool.size() - 1; // keep the class trainable
        Rng class_rng = rng.child(c);
        for (const index_t p : class_rng.sample_without_replacement(pool.size(), k)) {
            held[pool[p]] = true;
            ++n_held;
        }
    }

    LabeledDataset train, hold;
    train.class_names = hold.class_names = ds.class_names;
    train.split_tag = ds.split_tag;
    hold.split_tag = Split::val;
    train.features = Matrix(ds.size() - n_held, ds.dim());
    hold.features = Matrix(n_held, ds.dim());
    index_t ti = 0, hi = 0;
    for (index_t i = 0; i < ds.size(); ++i) {
        const double* src = ds.features.row(i);
        if (held[i]) {
            std::copy(src, src + ds.dim(), hold.features.row(hi++));
            hold.labels.push_back(ds.labels[i]);
        } else {
            std::copy(src, src + ds.dim(), train.features.row(ti++));
            train.labels.push_back(ds.labels[i]);
        }
    }
    train.validate();
    if (n_held > 0) hold.validate();
    return {std::move(train), std::move(hold)};
}

void SplitSpec::validate(index_t n_classes) const {
    NML_REQUIRE(!base_classes.empty(), "SplitSpec: base split must be nonempty");
    std::set<int> seen;
    auto check = [&](const std::vector<int>& ids, const char* which) {
        for (const int c : ids) {
            NML_REQUIRE(c >= 0 && static_cast<index_t>(c) < n_classes, "SplitSpec: ", which,
                        " class id ", c, " out of range [0,", n_classes, ")");
            NML_REQUIRE(seen.insert(c).second, "SplitSpec: class id ", c,
                        " assigned to more than one split");
        }
    };
    check(base_classes, "base");
    check(val_classes, "val");
    check(novel_classes, "novel");
    NML_REQUIRE(holdout_frac >= 0.0 && holdout_frac < 1.0,
                "SplitSpec: holdout_frac must lie in [0,1)");
}

SplitData apply_split(const LabeledDataset& ds, const SplitSpec& spec) {
    spec.validate(ds.n_classes());
    SplitData out;
    const LabeledDataset base_all = select_classes(ds, spec.base_classes, Split::base);
    Rng holdout_rng = Rng(spec.seed).child("holdout");
    auto [train, hold] = holdout_records(base_all, spec.holdout_frac, holdout_rng);
    out.base_train = std::move(train);
    out.base_holdout = std::move(hold);
    out.val = select_classes(ds, spec.val_classes, Split::val);
    out.novel = select_classes(ds, spec.novel_classes, Split::novel);
    return out;
}

namespace {

std::vector<unsigned char> read_binary(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error(detail::msg("cannot open ", path.string()));
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t be32(const std::vector<unsigned char>& buf, std::size_t offset,
                   const std::filesystem::path& path) {
    if (offset + 4 > buf.size())
        throw format_error(detail::msg(path.string(), ": truncated at offset ", offset));
    return (std::uint32_t(buf[offset]) << 24) | (std::uint32_t(buf[offset + 1]) << 16) |
           (std::uint32_t(buf[offset + 2]) << 8) | std::uint32_t(buf[offset + 3]);
}

void put_be32(std::ofstream& out, std::uint32_t v) {
    const unsigned char bytes[4] = {static_cast<unsigned char>(v >> 24),
                                    static_cast<unsigned char>(v >> 16),
                                    static_cast<unsigned char>(v >> 8),
                                    static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<const char*>(bytes), 4);
}

constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

// Dense local ids from raw label values, names = decimal value strings.
void assign_labels(LabeledDataset& ds, const std::vector<long long>& raw) {
    std::map<long long, int> ids;
    for (const long long v : raw) ids.emplace(v, 0);
    int next = 0;
    for (auto& [value, id] : ids) {
        id = next++;
        ds.class_names.push_back(std::to_string(value));
    }
    ds.labels.reserve(raw.size());
    for (const long long v : raw) ds.labels.push_back(ids[v]);
}

// Original label values when every class name is an integer, else local ids.
std::vector<long long> label_values(const LabeledDataset& ds) {
    std::vector<long long> values(ds.n_classes());
    bool all_int = true;
    for (index_t c = 0; c < ds.n_classes(); ++c) {
        try {
            values[c] = parse_ll(ds.class_names[c], "class name");
        } catch (const format_error&) {
            all_int = false;
            break;
        }
    }
    if (!all_int)
        for (index_t c = 0; c < ds.n_classes(); ++c) values[c] = static_cast<long long>(c);
    return values;
}

} // namespace

LabeledDataset load_idx(const std::filesystem::path& images_path,
                        const std::filesystem::path& labels_path) {
    const auto img = read_binary(images_path);
    const std::uint32_t img_magic = be32(img, 0, images_path);
    if (img_magic != kIdxImagesMagic)
        throw format_error(detail::msg(images_path.string(), ": bad magic ", img_magic,
                                       " at offset 0 (expected ", kIdxImagesMagic, ")"));
    const std::uint32_t n = be32(img, 4, images_path);
    const std::uint32_t rows = be32(img, 8, images_path);
    const std::uint32_t cols = be32(img, 12, images_path);
    const std::size_t expected = 16 + std::size_t(n) * rows * cols;
    if (img.size() != expected)
        throw format_error(detail::msg(images_path.string(), ": image payload has ",
                                       img.size() - std::min<std::size_t>(img.size(), 16),
                                       " bytes at offset 16, header promises ",
                                       std::size_t(n) * rows * cols));

    const auto lab = read_binary(labels_path);
    const std::uint32_t lab_magic = be32(lab, 0, labels_path);
    if (lab_magic != kIdxLabelsMagic)
        throw format_error(detail::msg(labels_path.string(), ": bad magic ", lab_magic,
                                       " at offset 0 (expected ", kIdxLabelsMagic, ")"));
    const std::uint32_t n_labels = be32(lab, 4, labels_path);
    if (lab.size() != 8 + std::size_t(n_labels))
        throw format_error(detail::msg(labels_path.string(), ": label payload has ",
                                       lab.size() - std::min<std::size_t>(lab.size(), 8),
                                       " bytes at offset 8, header promises ", n_labels));
    if (n != n_labels)
        throw format_error(detail::msg("record count mismatch: ", images_path.string(), " has ",
                                       n, " images, ", labels_path.string(), " has ", n_labels,
                                       " labels"));
    NML_REQUIRE(n >= 1, "load_idx: empty dataset");

    LabeledDataset ds;
    const index_t dim = index_t(rows) * cols;
    ds.features = Matrix(n, dim);
    for (index_t i = 0; i < n; ++i) {
        double* dst = ds.features.row(i);
        const unsigned char* src = img.data() + 16 + i * dim;
        for (index_t j = 0; j < dim; ++j) dst[j] = static_cast<double>(src[j]) / 255.0;
    }
    std::vector<long long> raw(n);
    for (index_t i = 0; i < n; ++i) raw[i] = lab[8 + i];
    assign_labels(ds, raw);
    ds.validate();
    return ds;
}

void save_idx(const LabeledDataset& ds, const std::filesystem::path& images_path,
              const std::filesystem::path& labels_path, index_t rows, index_t cols) {
    NML_REQUIRE(rows * cols == ds.dim(), "save_idx: ", rows, "x", cols,
                " does not match feature dim ", ds.dim());
    const auto values = label_values(ds);
    for (const long long v : values)
        NML_REQUIRE(v >= 0 && v <= 255, "save_idx: label value ", v, " does not fit in a byte");

    std::ofstream img(images_path, std::ios::binary);
    if (!img) throw io_error(detail::msg("cannot open ", images_path.string()));
    put_be32(img, kIdxImagesMagic);
    put_be32(img, static_cast<std::uint32_t>(ds.size()));
    put_be32(img, static_cast<std::uint32_t>(rows));
    put_be32(img, static_cast<std::uint32_t>(cols));
    std::vector<unsigned char> row_bytes(ds.dim());
    for (index_t i = 0; i < ds.size(); ++i) {
        const double* src = ds.features.row(i);
        for (index_t j = 0; j < ds.dim(); ++j) {
            NML_REQUIRE(src[j] >= 0.0 && src[j] <= 1.0, "save_idx: pixel ", src[j],
                        " outside [0,1] at record ", i);
            row_bytes[j] = static_cast<unsigned char>(std::llround(src[j] * 255.0));
        }
        img.write(reinterpret_cast<const char*>(row_bytes.data()),
                  static_cast<std::streamsize>(row_bytes.size()));
    }
    if (!img) throw io_error(detail::msg("failed writing ", images_path.string()));

    std::ofstream lab(labels_path, std::ios::binary);
    if (!lab) throw io_error(detail::msg("cannot open ", labels_path.string()));
    put_be32(lab, kIdxLabelsMagic);
    put_be32(lab, static_cast<std::uint32_t>(ds.size()));
    for (const int y : ds.labels) {
        const unsigned char byte = static_cast<unsigned char>(values[static_cast<index_t>(y)]);
        lab.write(reinterpret_cast<const char*>(&byte), 1);
    }
    if (!lab) throw io_error(detail::msg("failed writing ", labels_path.string()));
}

LabeledDataset load_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error(detail::msg("cannot open ", path.string()));
    std::string line;
    if (!std::getline(in, line))
        throw format_error(detail::msg(path.string(), ": empty file, expected header"));
    auto header = split(trim(line), ',');
    if (header.size() < 2 || header[0] != "label")
        throw format_error(detail::msg(path.string(), ": bad header, expected 'label,f0,...'"));
    const index_t dim = header.size() - 1;
    for (index_t j = 0; j < dim; ++j)
        if (header[j + 1] != detail::msg("f", j))
            throw format_error(detail::msg(path.string(), ": bad header column ", j + 1));

    std::vector<double> values;
    std::vector<long long> raw;
    index_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        const auto t = trim(line);
        if (t.empty()) continue;
        const auto toks = split(t, ',');
        if (toks.size() != dim + 1)
            throw format_error(detail::msg(path.string(), ":", line_no, ": expected ", dim + 1,
                                           " fields, got ", toks.size()));
        raw.push_back(parse_ll(toks[0], "label"));
        for (index_t j = 0; j < dim; ++j)
            values.push_back(parse_double(toks[j + 1], "feature"));
    }
    NML_REQUIRE(!raw.empty(), "load_csv: no records in ", path.string());

    LabeledDataset ds;
    ds.features = Matrix(raw.size(), dim);
    std::copy(values.begin(), values.end(), ds.features.data());
    assign_labels(ds, raw);
    ds.validate();
    return ds;
}

void save_csv(const LabeledDataset& ds, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error(detail::msg("cannot open ", path.string()));
    out << "label";
    for (index_t j = 0; j < ds.dim(); ++j) out << ",f" << j;
    out << '\n';
    const auto values = label_values(ds);
    for (index_t i = 0; i < ds.size(); ++i) {
        out << values[static_cast<index_t>(ds.labels[i])];
        for (index_t j = 0; j < ds.dim(); ++j) out << ',' << fmt_double(ds.features(i, j));
        out << '\n';
    }
    if (!out) throw io_error(detail::msg("failed writing ", path.string()));
}

DataManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error(detail::msg("cannot open manifest ", path.string()));
    const auto dir = path.parent_path();

    DataManifest m;
    bool kind_seen = false;
    std::string line;
    index_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string_view::npos)
            throw format_error(detail::msg(path.string(), ":", line_no, ": expected key=value"));
        const auto key = trim(t.substr(0, eq));
        const auto value = trim(t.substr(eq + 1));
        if (key == "kind") {
            if (value == "csv") m.kind = DataManifest::Kind::csv;
            else if (value == "idx") m.kind = DataManifest::Kind::idx;
            else
                throw format_error(detail::msg(path.string(), ":", line_no,
                                               ": kind must be csv or idx"));
            kind_seen = true;
        } else if (key == "data") {
            m.csv_path = dir / std::string(value);
        } else if (key == "images") {
            m.images_path = dir / std::string(value);
        } else if (key == "labels") {
            m.labels_path = dir / std::string(value);
        } else if (key == "base_classes") {
            m.base_classes = parse_int_list(value, "base_classes");
        } else if (key == "val_classes") {
            if (!value.empty()) m.val_classes = parse_int_list(value, "val_classes");
        } else if (key == "novel_classes") {
            m.novel_classes = parse_int_list(value, "novel_classes");
        } else if (key == "holdout_frac") {
            m.holdout_frac = parse_double(value, "holdout_frac");
        } else if (key == "split_seed") {
            m.split_seed = parse_ull(value, "split_seed");
        } else {
            throw format_error(detail::msg(path.string(), ":", line_no, ": unknown key '", key,
                                           "'"));
        }
    }
    if (!kind_seen) throw format_error(detail::msg(path.string(), ": missing 'kind'"));
    if (m.kind == DataManifest::Kind::csv && m.csv_path.empty())
        throw format_error(detail::msg(path.string(), ": kind=csv requires 'data'"));
    if (m.kind == DataManifest::Kind::idx && (m.images_path.empty() || m.labels_path.empty()))
        throw format_error(detail::msg(path.string(), ": kind=idx requires 'images' and 'labels'"));
    return m;
}

void save_manifest(const DataManifest& manifest, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error(detail::msg("cannot open ", path.string()));
    auto join = [](const std::vector<long long>& v) {
        std::string s;
        for (index_t i = 0; i < v.size(); ++i) {
            if (i) s += ',';
            s += std::to_string(v[i]);
        }
        return s;
    };
    if (manifest.kind == DataManifest::Kind::csv) {
        out << "kind=csv\n";
        out << "data=" << manifest.csv_path.filename().string() << '\n';
    } else {
        out << "kind=idx\n";
        out << "images=" << manifest.images_path.filename().string() << '\n';
        out << "labels=" << manifest.labels_path.filename().string() << '\n';
    }
    out << "base_classes=" << join(manifest.base_classes) << '\n';
    out << "val_classes=" << join(manifest.val_classes) << '\n';
    out << "novel_classes=" << join(manifest.novel_classes) << '\n';
    out << "holdout_frac=" << fmt_double(manifest.holdout_frac) << '\n';
    out << "split_seed=" << manifest.split_seed << '\n';
    if (!out) throw io_error(detail::msg("failed writing ", path.string()));
}

LabeledDataset load_source(const DataManifest& manifest) {
    return manifest.kind == DataManifest::Kind::csv
               ? load_csv(manifest.csv_path)
               : load_idx(manifest.images_path, manifest.labels_path);
}

SplitData load_split_data(const DataManifest& manifest) {
    const LabeledDataset ds = load_source(manifest);
    auto to_ids = [&](const std::vector<long long>& values, const char* which) {
        std::vector<int> ids;
        for (const long long v : values) {
            const std::string name = std::to_string(v);
            const auto it =
                std::find(ds.class_names.begin(), ds.class_names.end(), name);
            if (it == ds.class_names.end())
                throw format_error(detail::msg("manifest ", which, ": class '", name,
                                               "' not present in dataset"));
            ids.push_back(static_cast<int>(it - ds.class_names.begin()));
        }
        return ids;
    };
    SplitSpec spec;
    spec.base_classes = to_ids(manifest.base_classes, "base_classes");
    spec.val_classes = to_ids(manifest.val_classes, "val_classes");
    spec.novel_classes = to_ids(manifest.novel_classes, "novel_classes");
    spec.holdout_frac = manifest.holdout_frac;
    spec.seed = manifest.split_seed;
    return apply_split(ds, spec);
}

} // namespace nml
