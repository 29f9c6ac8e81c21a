#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nml/matrix.hpp"
#include "nml/rng.hpp"

namespace nml {

enum class Split { base, val, novel };

inline std::string_view to_string(Split s) {
    switch (s) {
    case Split::base: return "base";
    case Split::val: return "val";
    case Split::novel: return "novel";
    }
    return "?";
}

inline Split parse_split(std::string_view s) {
    if (s == "base") return Split::base;
    if (s == "val") return Split::val;
    if (s == "novel") return Split::novel;
    throw config_error(detail::msg("unknown split '", s, "' (expected base|val|novel)"));
}

// Feature records with dense local class ids 0..C-1; class_names keeps the
// source labels so disjointness across splits stays checkable.
struct LabeledDataset {
    Matrix features; // N x D
    std::vector<int> labels;
    std::vector<std::string> class_names;
    Split split_tag = Split::base;

    index_t size() const { return features.rows(); }
    index_t dim() const { return features.cols(); }
    index_t n_classes() const { return class_names.size(); }
    std::vector<std::vector<index_t>> indices_by_class() const;
    void validate() const;
};

// Unit-sphere Gaussian clusters. The trailing novel_classes class means are
// pulled toward a random earlier ("base") mean by the confusability factor:
// 0 keeps them independent, 1 puts them exactly on a base mode.
struct SyntheticSpec {
    index_t n_classes = 10;
    index_t per_class = 20;
    index_t dim = 8;
    double cluster_std = 0.1;
    double confusability = 0.0;
    index_t novel_classes = 0;
    std::uint64_t seed = 0;
};

LabeledDataset gen_synthetic(const SyntheticSpec& spec);

// N-way K-shot task with episode-local labels 0..way-1.
struct Episode {
    index_t way = 0;
    index_t shot = 0;
    index_t query_per_class = 0;
    Matrix support_x;
    std::vector<int> support_y;
    Matrix query_x;
    std::vector<int> query_y;
    std::vector<int> source_class_ids; // dataset class id per episode label
};

// Uniform class choice and per-class record draws, all without replacement.
Episode sample_episode(const LabeledDataset& ds, index_t way, index_t shot, index_t query,
                       Rng& rng);

// New dataset containing only class_ids, relabeled in the given order.
LabeledDataset select_classes(const LabeledDataset& ds, std::span<const int> class_ids, Split tag);

// Stratified record-level holdout: about `frac` of every class moves to the
// second dataset (at least 1 per class when frac > 0, never the whole class).
std::pair<LabeledDataset, LabeledDataset> holdout_records(const LabeledDataset& ds, double frac,
                                                          Rng& rng);

struct SplitSpec {
    std::vector<int> base_classes;
    std::vector<int> val_classes;
    std::vector<int> novel_classes;
    double holdout_frac = 0.1;
    std::uint64_t seed = 0;

    void validate(index_t n_classes) const; // in-range, class-disjoint, base nonempty
};

struct SplitData {
    LabeledDataset base_train;
    LabeledDataset base_holdout; // held-out records of base classes
    LabeledDataset val;          // class-level validation split (may be empty)
    LabeledDataset novel;
};

SplitData apply_split(const LabeledDataset& ds, const SplitSpec& spec);

// IDX image/label pair (big-endian magic 0x00000803 / 0x00000801); pixels are
// scaled to [0,1]. Errors name the byte offset.
LabeledDataset load_idx(const std::filesystem::path& images_path,
                        const std::filesystem::path& labels_path);
void save_idx(const LabeledDataset& ds, const std::filesystem::path& images_path,
              const std::filesystem::path& labels_path, index_t rows, index_t cols);

// CSV schema: header `label,f0,f1,...`, decimal floats.
LabeledDataset load_csv(const std::filesystem::path& path);
void save_csv(const LabeledDataset& ds, const std::filesystem::path& path);

// One source (idx pair or csv) plus the class-level split assignment and the
// record-level holdout policy; key=value lines, paths relative to the file.
struct DataManifest {
    enum class Kind { csv, idx };
    Kind kind = Kind::csv;
    std::filesystem::path csv_path;
    std::filesystem::path images_path;
    std::filesystem::path labels_path;
    std::vector<long long> base_classes; // label values as stored in the source
    std::vector<long long> val_classes;
    std::vector<long long> novel_classes;
    double holdout_frac = 0.1;
    std::uint64_t split_seed = 0;
};

DataManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const DataManifest& manifest, const std::filesystem::path& path);

LabeledDataset load_source(const DataManifest& manifest);
SplitData load_split_data(const DataManifest& manifest);

} // namespace nml
