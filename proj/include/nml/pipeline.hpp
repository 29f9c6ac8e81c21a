#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nml/analysis.hpp"
#include "nml/dataset.hpp"
#include "nml/loss.hpp"
#include "nml/network.hpp"
#include "nml/optimizer.hpp"

namespace nml {

// Stage 1: joint backbone + classifier training on base classes under the
// margin loss.
struct PretrainConfig {
    LossSpec loss;
    OptimConfig optim; // total_steps is derived from epochs * batches
    BackboneConfig backbone;
    index_t epochs = 20;
    index_t batch_size = 128;
    std::uint64_t seed = 0;

    void validate() const {
        NML_REQUIRE(epochs >= 1, "PretrainConfig: epochs must be >= 1");
        NML_REQUIRE(batch_size >= 1, "PretrainConfig: batch_size must be >= 1");
        loss.validate();
    }
};

struct EpochLog {
    index_t epoch = 0;
    double loss = 0.0;
    double val_acc = 0.0; // NaN when no validation set was given
};

struct PretrainResult {
    Network net;
    std::vector<EpochLog> log;
};

// Deterministic under cfg.seed; throws numeric_error naming the epoch if the
// loss diverges. backbone.input_dim may be 0 to adopt the dataset dim.
PretrainResult pretrain(const LabeledDataset& train, const LabeledDataset* val,
                        const PretrainConfig& cfg);

// Argmax classification accuracy of the network's own classifier.
double accuracy(const Network& net, const LabeledDataset& ds);

// Stage 2: per episode, freeze the backbone and fit a fresh classifier on the
// support set with full-batch Adam under the same similarity as pretraining.
struct FinetuneConfig {
    LossSpec loss;    // margin defaults to 0 here; similarity is taken from the network
    OptimConfig optim;
    index_t steps = 100;
    std::uint64_t seed = 0;

    FinetuneConfig() {
        loss.margin = 0.0;
        optim.lr0 = 1e-2;
        optim.weight_decay = 0.0;
    }
};

struct EvalResult {
    std::vector<double> episode_accuracies;
    double mean = 0.0;
    double ci95 = 0.0; // 1.96 * sample_std / sqrt(n); 0 when n < 2
    index_t n_episodes = 0;
    // aggregated query accuracy per dataset class (NaN where never sampled)
    std::vector<double> per_class_accuracy;
    std::vector<index_t> per_class_queries;
};

double ci95_halfwidth(std::span<const double> xs);

EvalResult finetune_eval(const Network& net, const LabeledDataset& ds, index_t way, index_t shot,
                         index_t query, index_t n_episodes, const FinetuneConfig& cfg);

// Open-set guard: class names of the two datasets must not intersect.
void require_open_set(const LabeledDataset& base, const LabeledDataset& novel);

struct SweepConfig {
    std::vector<double> margins; // sorted ascending internally
    std::vector<std::uint64_t> seeds = {0};
    PretrainConfig pretrain_cfg; // loss.margin and seed overridden per run
    FinetuneConfig finetune_cfg; // seed overridden per run
    std::vector<index_t> shots = {1, 5};
    index_t way = 5;
    index_t query = 16;
    index_t episodes = 600;
    index_t threads = 0; // 0 = hardware concurrency
};

struct SweepRow {
    double margin = 0.0;
    Split split = Split::novel; // novel or base (held-out records)
    index_t shot = 0;
    double mean_acc = 0.0;
    double ci95 = 0.0;
    index_t n_episodes = 0;
    std::uint64_t seed = 0;
};

// One pretrain run plus everything measured on it.
struct SweepRun {
    double margin = 0.0;
    std::uint64_t seed = 0;
    Network net;
    std::vector<EpochLog> log;
    AnalysisReport base_report;
    AnalysisReport novel_report;
    ConfusionProfile confusion;
    std::vector<double> novel_class_accuracy; // per novel class, first shot setting
};

struct SweepFailure {
    double margin = 0.0;
    std::uint64_t seed = 0;
    std::string message;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    std::vector<SweepRun> runs;
    std::vector<SweepFailure> failures;
};

// Margin x seed grid; runs execute concurrently on isolated state and any
// failure is recorded while the sweep continues.
SweepResult sweep_margin(const SplitData& data, const SweepConfig& cfg);

void write_training_log_csv(std::span<const EpochLog> log, const std::filesystem::path& path);
void write_sweep_csv(const SweepResult& result, const std::filesystem::path& path);
void write_eval_csv(std::span<const SweepRow> rows, const std::filesystem::path& path);
void write_per_class_accuracy_csv(const EvalResult& result, const LabeledDataset& ds,
                                  const std::filesystem::path& path);
// (p_same, accuracy) pairs per novel class and run
void write_pjs_accuracy_csv(const SweepResult& result, const std::filesystem::path& path);
// Measured proposition instances over consecutive margin pairs per seed.
void write_proposition_csv(const SweepResult& result, const std::filesystem::path& path);

} // namespace nml
