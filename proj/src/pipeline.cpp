#include "nml/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <set>
#include <thread>

#include "nml/numeric.hpp"
#include "nml/textio.hpp"

namespace nml {

double accuracy(const Network& net, const LabeledDataset& ds) {
    NML_REQUIRE(ds.size() >= 1, "accuracy: empty dataset");
    const Matrix scores = net.scores(ds.features);
    index_t correct = 0;
    for (index_t i = 0; i < scores.rows(); ++i)
        if (argmax_row(scores, i) == static_cast<index_t>(ds.labels[i])) ++correct;
    return static_cast<double>(correct) / static_cast<double>(scores.rows());
}

PretrainResult pretrain(const LabeledDataset& train, const LabeledDataset* val,
                        const PretrainConfig& cfg) {
    cfg.validate();
    train.validate();
    NML_REQUIRE(train.n_classes() >= 2, "pretrain: need >= 2 base classes");

    BackboneConfig backbone = cfg.backbone;
    if (backbone.input_dim == 0) backbone.input_dim = train.dim();
    NML_REQUIRE(backbone.input_dim == train.dim(), "pretrain: backbone input_dim ",
                backbone.input_dim, " != data dim ", train.dim());

    Rng root(cfg.seed);
    Rng init_rng = root.child("init");
    PretrainResult result{
        Network(backbone, train.n_classes(), cfg.loss.similarity, init_rng), {}};
    Network& net = result.net;

    const index_t n = train.size();
    const index_t batches = (n + cfg.batch_size - 1) / cfg.batch_size;
    OptimConfig ocfg = cfg.optim;
    ocfg.total_steps = cfg.epochs * batches;
    Adam adam(net.parameters(), ocfg);

    std::vector<index_t> order(n);
    for (index_t i = 0; i < n; ++i) order[i] = i;
    std::vector<int> batch_labels;

    for (index_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng shuffle_rng = root.child("shuffle").child(epoch);
        shuffle_rng.shuffle(order);

        double epoch_loss = 0.0;
        for (index_t b = 0; b < batches; ++b) {
            const index_t begin = b * cfg.batch_size;
            const index_t end = std::min(n, begin + cfg.batch_size);
            Matrix bx(end - begin, train.dim());
            batch_labels.clear();
            for (index_t i = begin; i < end; ++i) {
                const double* src = train.features.row(order[i]);
                std::copy(src, src + train.dim(), bx.row(i - begin));
                batch_labels.push_back(train.labels[order[i]]);
            }
            try {
                const auto fwd = net.forward(bx);
                const auto loss = margin_loss(fwd.scores, batch_labels, cfg.loss);
                net.backward(loss.grad_scores);
                adam.step();
                net.clear_cache();
                epoch_loss += loss.mean_loss * static_cast<double>(end - begin);
            } catch (const numeric_error& e) {
                throw numeric_error(detail::msg("pretrain diverged at epoch ", epoch, ": ",
                                                e.what()));
            }
        }
        EpochLog entry;
        entry.epoch = epoch;
        entry.loss = epoch_loss / static_cast<double>(n);
        entry.val_acc = (val != nullptr && val->size() > 0)
                            ? accuracy(net, *val)
                            : std::numeric_limits<double>::quiet_NaN();
        result.log.push_back(entry);
    }
    return result;
}

double ci95_halfwidth(std::span<const double> xs) {
    if (xs.size() < 2) return 0.0;
    const double n = static_cast<double>(xs.size());
    double mean = 0.0;
    for (const double x : xs) mean += x;
    mean /= n;
    double ss = 0.0;
    for (const double x : xs) ss += (x - mean) * (x - mean);
    const double sd = std::sqrt(ss / (n - 1.0));
    return 1.96 * sd / std::sqrt(n);
}

EvalResult finetune_eval(const Network& net, const LabeledDataset& ds, index_t way, index_t shot,
                         index_t query, index_t n_episodes, const FinetuneConfig& cfg) {
    NML_REQUIRE(n_episodes >= 1, "finetune_eval: n_episodes must be >= 1");
    cfg.loss.validate();
    ds.validate();

    LossSpec spec = cfg.loss;
    spec.similarity = net.similarity(); // stage 2 scores features the same way as stage 1

    OptimConfig ocfg = cfg.optim;
    ocfg.total_steps = cfg.steps;

    EvalResult result;
    result.per_class_accuracy.assign(ds.n_classes(), 0.0);
    result.per_class_queries.assign(ds.n_classes(), 0);
    std::vector<index_t> per_class_correct(ds.n_classes(), 0);

    const Rng eval_rng = Rng(cfg.seed).child("finetune-eval");
    for (index_t e = 0; e < n_episodes; ++e) {
        Rng episode_rng = eval_rng.child(e);
        Rng sample_rng = episode_rng.child("sample");
        const Episode ep = sample_episode(ds, way, shot, query, sample_rng);

        const Matrix zs = net.features(ep.support_x);
        const Matrix zq = net.features(ep.query_x);

        Rng init_rng = episode_rng.child("init");
        ClassifierHead head(zs.cols(), way, net.similarity(), init_rng);
        Matrix grad_w(zs.cols(), way);
        Adam adam({{"episode_classifier", &head.weight(), &grad_w}}, ocfg);
        for (index_t s = 0; s < cfg.steps; ++s) {
            const Matrix scores = head.forward(zs);
            const auto loss = margin_loss(scores, ep.support_y, spec);
            head.backward(zs, loss.grad_scores, grad_w, nullptr);
            adam.step();
        }

        const Matrix scores = head.forward(zq);
        index_t correct = 0;
        for (index_t i = 0; i < scores.rows(); ++i) {
            const index_t pred = argmax_row(scores, i);
            const index_t truth = static_cast<index_t>(ep.query_y[i]);
            const index_t source = static_cast<index_t>(ep.source_class_ids[truth]);
            ++result.per_class_queries[source];
            if (pred == truth) {
                ++correct;
                ++per_class_correct[source];
            }
        }
        result.episode_accuracies.push_back(static_cast<double>(correct) /
                                            static_cast<double>(scores.rows()));
    }

    result.n_episodes = n_episodes;
    double total = 0.0;
    for (const double a : result.episode_accuracies) total += a;
    result.mean = total / static_cast<double>(n_episodes);
    result.ci95 = ci95_halfwidth(result.episode_accuracies);
    for (index_t c = 0; c < ds.n_classes(); ++c)
        result.per_class_accuracy[c] =
            result.per_class_queries[c] > 0
                ? static_cast<double>(per_class_correct[c]) /
                      static_cast<double>(result.per_class_queries[c])
                : std::numeric_limits<double>::quiet_NaN();
    return result;
}

void require_open_set(const LabeledDataset& base, const LabeledDataset& novel) {
    std::set<std::string> base_names(base.class_names.begin(), base.class_names.end());
    for (const auto& name : novel.class_names)
        NML_REQUIRE(!base_names.contains(name), "open-set violation: class '", name,
                    "' appears in both base and novel splits");
}

namespace {

SweepRun execute_run(const SplitData& data, const SweepConfig& cfg, double margin,
                     std::uint64_t seed, std::vector<SweepRow>& rows) {
    PretrainConfig pcfg = cfg.pretrain_cfg;
    pcfg.loss.margin = margin;
    pcfg.seed = seed;
    const LabeledDataset* val = data.base_holdout.size() > 0 ? &data.base_holdout : nullptr;
    auto [net, log] = pretrain(data.base_train, val, pcfg);

    FinetuneConfig ftcfg = cfg.finetune_cfg;
    ftcfg.seed = seed;
    ftcfg.loss.beta = pcfg.loss.beta; // stage 2 keeps the pretraining temperature

    SweepRun run;
    run.margin = margin;
    run.seed = seed;
    run.log = std::move(log);

    bool first_shot = true;
    for (const index_t shot : cfg.shots) {
        const EvalResult novel_res =
            finetune_eval(net, data.novel, cfg.way, shot, cfg.query, cfg.episodes, ftcfg);
        rows.push_back({margin, Split::novel, shot, novel_res.mean, novel_res.ci95,
                        novel_res.n_episodes, seed});
        if (first_shot) {
            run.novel_class_accuracy = novel_res.per_class_accuracy;
            first_shot = false;
        }
        if (data.base_holdout.size() > 0 && data.base_holdout.n_classes() >= cfg.way) {
            const EvalResult base_res = finetune_eval(net, data.base_holdout, cfg.way, shot,
                                                      cfg.query, cfg.episodes, ftcfg);
            rows.push_back({margin, Split::base, shot, base_res.mean, base_res.ci95,
                            base_res.n_episodes, seed});
        }
    }

    const Matrix base_feats = net.features(data.base_train.features);
    run.base_report = variance_report(base_feats, data.base_train.labels,
                                      data.base_train.n_classes(), margin, Split::base);
    const Matrix novel_feats = net.features(data.novel.features);
    run.novel_report = variance_report(novel_feats, data.novel.labels, data.novel.n_classes(),
                                       margin, Split::novel);
    run.confusion = confusion_profile(net, data.novel, pcfg.loss.beta);
    run.net = std::move(net);
    return run;
}

} // namespace

SweepResult sweep_margin(const SplitData& data, const SweepConfig& cfg) {
    NML_REQUIRE(!cfg.margins.empty(), "sweep_margin: empty margin grid");
    NML_REQUIRE(!cfg.seeds.empty(), "sweep_margin: empty seed list");
    NML_REQUIRE(data.novel.n_classes() >= cfg.way, "sweep_margin: novel split has ",
                data.novel.n_classes(), " classes, need way=", cfg.way);
    require_open_set(data.base_train, data.novel);

    std::vector<double> margins = cfg.margins;
    std::sort(margins.begin(), margins.end());

    struct Job {
        double margin;
        std::uint64_t seed;
    };
    std::vector<Job> jobs;
    for (const double m : margins)
        for (const std::uint64_t s : cfg.seeds) jobs.push_back({m, s});

    struct Slot {
        std::vector<SweepRow> rows;
        std::optional<SweepRun> run;
        std::string error;
    };
    std::vector<Slot> slots(jobs.size());

    index_t n_threads = cfg.threads == 0 ? std::thread::hardware_concurrency() : cfg.threads;
    n_threads = std::max<index_t>(1, std::min<index_t>(n_threads, jobs.size()));

    std::atomic<index_t> next{0};
    auto worker = [&] {
        for (;;) {
            const index_t i = next.fetch_add(1);
            if (i >= jobs.size()) return;
            try {
                slots[i].run =
                    execute_run(data, cfg, jobs[i].margin, jobs[i].seed, slots[i].rows);
            } catch (const std::exception& e) {
                slots[i].error = e.what();
            }
        }
    };
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (index_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    SweepResult result;
    for (index_t i = 0; i < jobs.size(); ++i) {
        if (slots[i].run) {
            result.rows.insert(result.rows.end(), slots[i].rows.begin(), slots[i].rows.end());
            result.runs.push_back(std::move(*slots[i].run));
        } else {
            result.failures.push_back({jobs[i].margin, jobs[i].seed, slots[i].error});
        }
    }
    return result;
}

void write_training_log_csv(std::span<const EpochLog> log, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error(detail::msg("cannot open ", path.string()));
    out << "epoch,loss,base_val_acc\n";
    for (const auto& e : log)
        out << e.epoch << ',' << fmt_double(e.loss) << ',' << fmt_double(e.val_acc) << '\n';
    if (!out) throw io_error(detail::msg("failed writing ", path.string()));
}

void write_eval_csv(std::span<const SweepRow> rows, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error(detail::msg("cannot open ", path.string()));
    out << "margin,split,shot,mean_acc,ci95,n_episodes,seed\n";
    for (const auto& r : rows)
        out << fmt_double(r.margin) << ',' << to_string(r.split) << ',' << r.shot << ','
            << fmt_double(r.mean_acc) << ',' << fmt_double(r.ci95) << ',' << r.n_episodes << ','
            << r.seed << '\n';
    if (!out) throw io_error(detail::msg("failed writing ", path.string()));
}

void write_sweep_csv(const SweepResult& result, const std::filesystem::path& path) {
    write_eval_csv(result.rows, path);
}

void write_per_class_accuracy_csv(const EvalResult& result, const LabeledDataset& ds,
                                  const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error(detail::msg("cannot open ", path.string()));
    out << "class,accuracy,n_queries\n";
    for (index_t c = 0; c < result.per_class_accuracy.size(); ++c)
        out << ds.class_names[c] << ',' << fmt_double(result.per_class_accuracy[c]) << ','
            << result.per_class_queries[c] << '\n';
    if (!out) throw io_error(detail::msg("failed writing ", path.string()));
}

void write_pjs_accuracy_csv(const SweepResult& result, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error(detail::msg("cannot open ", path.string()));
    out << "margin,seed,novel_class,p_same,accuracy\n";
    for (const auto& run : result.runs)
        for (index_t j = 0; j < run.confusion.p_same_per_class.size(); ++j)
            out << fmt_double(run.margin) << ',' << run.seed << ',' << j << ','
                << fmt_double(run.confusion.p_same_per_class[j]) << ','
                << fmt_double(j < run.novel_class_accuracy.size() ? run.novel_class_accuracy[j]
                                                                  : std::numeric_limits<double>::quiet_NaN())
                << '\n';
    if (!out) throw io_error(detail::msg("failed writing ", path.string()));
}

void write_proposition_csv(const SweepResult& result, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error(detail::msg("cannot open ", path.string()));
    out << "seed,m1,m2,r,t,psi_m1,psi_m2,threshold,p_same,applicable,predicted,holds,"
           "measured_phi_novel_m1,measured_phi_novel_m2\n";
    std::set<std::uint64_t> seeds;
    for (const auto& run : result.runs) seeds.insert(run.seed);
    for (const std::uint64_t seed : seeds) {
        std::vector<const SweepRun*> runs;
        for (const auto& run : result.runs)
            if (run.seed == seed) runs.push_back(&run);
        std::sort(runs.begin(), runs.end(),
                  [](const SweepRun* a, const SweepRun* b) { return a->margin < b->margin; });
        for (index_t i = 0; i + 1 < runs.size(); ++i) {
            const SweepRun& a = *runs[i];
            const SweepRun& b = *runs[i + 1];
            PropositionInstance inst;
            inst.m1 = a.margin;
            inst.m2 = b.margin;
            inst.base_inter_m1 = a.base_report.d_inter;
            inst.base_intra_m1 = a.base_report.d_intra;
            inst.base_inter_m2 = b.base_report.d_inter;
            inst.base_intra_m2 = b.base_report.d_intra;
            inst.novel_inter_m1 = a.novel_report.d_inter;
            inst.novel_inter_m2 = b.novel_report.d_inter;
            const PropositionVerdict v = check_proposition(inst, a.confusion.p_same);
            out << seed << ',' << fmt_double(inst.m1) << ',' << fmt_double(inst.m2) << ','
                << fmt_double(v.r) << ',' << fmt_double(v.t) << ',' << fmt_double(v.psi_m1)
                << ',' << fmt_double(v.psi_m2) << ','
                << (v.threshold_finite ? fmt_double(v.threshold) : std::string("inf")) << ','
                << fmt_double(a.confusion.p_same) << ',' << (v.applicable ? 1 : 0) << ','
                << (v.predicted ? 1 : 0) << ',' << (v.holds ? 1 : 0) << ','
                << fmt_double(a.novel_report.phi) << ',' << fmt_double(b.novel_report.phi)
                << '\n';
        }
    }
    if (!out) throw io_error(detail::msg("failed writing ", path.string()));
}

} // namespace nml
