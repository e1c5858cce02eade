#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "featkd/dataset.hpp"
#include "featkd/losses.hpp"
#include "featkd/lsh.hpp"
#include "featkd/matrix.hpp"
#include "featkd/model.hpp"
#include "featkd/rng.hpp"
#include "featkd/special.hpp"

namespace featkd {

/// Fixed substream keys, so independent consumers (data synthesis, model
/// init, batch shuffling, hash init) never perturb each other's draws.
namespace stream_tag {
inline constexpr std::uint64_t kData = 1;
inline constexpr std::uint64_t kTeacherInit = 2;
inline constexpr std::uint64_t kStudentInit = 3;
inline constexpr std::uint64_t kShuffle = 4;
inline constexpr std::uint64_t kHash = 5;
inline constexpr std::uint64_t kProbe = 6;
}  // namespace stream_tag

/// Which mimicking terms are active. CE trains on labels only.
enum class LossMode { CE, L2, LSH, LSHL2 };

inline bool uses_mse(LossMode m) { return m == LossMode::L2 || m == LossMode::LSHL2; }
inline bool uses_lsh(LossMode m) { return m == LossMode::LSH || m == LossMode::LSHL2; }

inline const char* loss_mode_name(LossMode m) {
    switch (m) {
        case LossMode::CE: return "ce";
        case LossMode::L2: return "l2";
        case LossMode::LSH: return "lsh";
        case LossMode::LSHL2: return "lshl2";
    }
    return "?";
}

inline LossMode parse_loss_mode(const std::string& s) {
    if (s == "ce") return LossMode::CE;
    if (s == "l2") return LossMode::L2;
    if (s == "lsh") return LossMode::LSH;
    if (s == "lshl2") return LossMode::LSHL2;
    throw std::invalid_argument("unknown loss mode: " + s);
}

struct DistillConfig {
    double beta = 6.0;
    std::size_t n_hash = 2048;
    double std_hash = 1.0;  // values <= 0 mean "use the teacher classifier weight std"
    BiasInit bias_init = BiasInit::Median;
    double lr = 0.05;
    std::size_t epochs = 60;
    std::size_t batch_size = 32;
    bool filter_teacher_correct = true;
    std::size_t avg_last_k = 10;
    LossMode loss_mode = LossMode::LSHL2;
    bool use_embedding = true;
    std::uint64_t seed = 1;
};

inline void validate_config(const DistillConfig& cfg) {
    if (cfg.beta < 0.0) {
        throw std::invalid_argument("config: beta must be >= 0");
    }
    if (cfg.epochs < 1 || cfg.batch_size < 1) {
        throw std::invalid_argument("config: epochs and batch_size must be >= 1");
    }
    if (cfg.avg_last_k < 1 || cfg.avg_last_k > cfg.epochs) {
        throw std::invalid_argument("config: avg_last_k must be in [1, epochs]");
    }
    if (cfg.lr < 0.0) {
        throw std::invalid_argument("config: lr must be >= 0");
    }
}

/// Feature diagnostics between a teacher and a student on one dataset: mean
/// feature norms, mean angle in degrees, student top-1 accuracy. Samples
/// where either feature has zero magnitude are excluded from the angle mean
/// and counted in `skipped`.
struct AngleStats {
    double mean_teacher_norm = 0.0;
    double mean_student_norm = 0.0;
    double mean_angle_deg = 0.0;
    double accuracy = 0.0;
    std::string split;
    std::size_t skipped = 0;
};

inline std::size_t argmax_index(const Vector& v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (v[i] > v[best]) {
            best = i;
        }
    }
    return best;
}

inline AngleStats feature_stats(const Mlp& teacher, const Mlp& student, const Dataset& data) {
    AngleStats stats;
    stats.split = data.split;
    if (data.size() == 0) {
        return stats;
    }
    double norm_t = 0.0;
    double norm_s = 0.0;
    double angle_sum = 0.0;
    std::size_t angle_count = 0;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const ForwardTrace tt = forward(teacher, data.inputs[i]);
        const ForwardTrace ts = forward(student, data.inputs[i]);
        const double nt = norm2(tt.feature);
        const double ns = norm2(ts.feature);
        norm_t += nt;
        norm_s += ns;
        if (tt.feature.size() == ts.feature.size() && nt > 0.0 && ns > 0.0) {
            angle_sum += angle_between(tt.feature, ts.feature) * 180.0 / std::numbers::pi;
            ++angle_count;
        } else {
            ++stats.skipped;
        }
        if (argmax_index(ts.logits) == data.labels[i]) {
            ++correct;
        }
    }
    const double n = static_cast<double>(data.size());
    stats.mean_teacher_norm = norm_t / n;
    stats.mean_student_norm = norm_s / n;
    stats.mean_angle_deg = angle_count > 0 ? angle_sum / static_cast<double>(angle_count) : 0.0;
    stats.accuracy = static_cast<double>(correct) / n;
    return stats;
}

struct EpochLogEntry {
    std::string stage;
    std::size_t epoch = 0;
    LossReport loss;
    std::optional<AngleStats> train_stats;
    std::optional<AngleStats> test_stats;
};

using TrainLog = std::vector<EpochLogEntry>;

namespace detail {

struct TeacherCache {
    std::vector<Vector> features;
    std::vector<bool> correct;
};

inline TeacherCache cache_teacher(const Mlp& teacher, const Dataset& data) {
    TeacherCache cache;
    cache.features.reserve(data.size());
    cache.correct.reserve(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        ForwardTrace t = forward(teacher, data.inputs[i]);
        cache.correct.push_back(argmax_index(t.logits) == data.labels[i]);
        cache.features.push_back(std::move(t.feature));
    }
    return cache;
}

struct TrainOptions {
    bool use_ce = true;
    bool train_hidden = true;
    bool train_embedding = true;
    bool train_classifier = true;
    bool average_snapshots = true;
    bool compute_stats = true;
    const char* stage = "train";
};

inline void sgd_layer(LinearLayer& param, const LinearLayer& grad, double lr) {
    Vector& w = param.weights.data();
    const Vector& gw = grad.weights.data();
    for (std::size_t k = 0; k < w.size(); ++k) {
        w[k] -= lr * gw[k];
    }
    for (std::size_t k = 0; k < param.bias.size(); ++k) {
        param.bias[k] -= lr * grad.bias[k];
    }
}

/// The single training loop behind vanilla training, distillation, and the
/// stage-1 alignment pass. Batch order, gradient reduction order, and
/// snapshot averaging are all fixed, so a (seed, config) pair determines the
/// result bit for bit. Mimicking terms are averaged over the samples that
/// pass the teacher-correct filter; the cross entropy is averaged over the
/// whole batch.
inline Mlp run_training(Mlp student, const Mlp* teacher, const HashModule* hash,
                        const Dataset& train, const Dataset* test, const DistillConfig& cfg,
                        LossMode mode, const TrainOptions& opts, TrainLog* log) {
    validate_config(cfg);
    if (train.size() == 0) {
        throw std::invalid_argument("run_training: empty training set");
    }
    const bool mimic = teacher != nullptr && mode != LossMode::CE;
    if (mimic && student.feature_dim() != teacher->feature_dim()) {
        throw std::invalid_argument(
            "run_training: student/teacher feature dimensions differ; add an embedding layer");
    }
    if (mimic && uses_lsh(mode) && hash == nullptr) {
        throw std::invalid_argument("run_training: LSH mode needs a hash module");
    }
    // Stage-1 style runs drop the cross entropy; the mimicking sum is then the
    // whole objective and beta does not apply.
    const double mimic_weight = opts.use_ce ? cfg.beta : 1.0;

    TeacherCache cache;
    if (teacher != nullptr) {
        cache = cache_teacher(*teacher, train);
    }

    RngStream shuffle_rng = RngStream(cfg.seed).substream(stream_tag::kShuffle);
    std::vector<std::size_t> order(train.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }

    std::deque<Vector> snapshots;

    struct SampleWork {
        ForwardTrace trace;
        Vector ce_grad;
        double ce = 0.0;
        Vector mimic_grad;
        double mse = 0.0;
        double lsh = 0.0;
        bool contributes = false;
    };
    std::vector<SampleWork> batch_work;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        // Fisher-Yates from the dedicated shuffle stream.
        for (std::size_t i = order.size() - 1; i > 0; --i) {
            const std::size_t j = shuffle_rng.next_below(i + 1);
            std::swap(order[i], order[j]);
        }

        double epoch_ce = 0.0;
        double epoch_mse = 0.0;
        double epoch_lsh = 0.0;
        std::size_t epoch_contrib = 0;

        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
            const std::size_t batch_n = stop - start;
            batch_work.assign(batch_n, SampleWork{});

            std::size_t n_contrib = 0;
            for (std::size_t k = 0; k < batch_n; ++k) {
                const std::size_t idx = order[start + k];
                SampleWork& work = batch_work[k];
                work.trace = forward(student, train.inputs[idx]);
                if (opts.use_ce) {
                    SoftmaxCe ce = softmax_cross_entropy(work.trace.logits, train.labels[idx]);
                    work.ce = ce.loss;
                    work.ce_grad = std::move(ce.grad);
                    epoch_ce += ce.loss;
                }
                if (mimic && (!cfg.filter_teacher_correct || cache.correct[idx])) {
                    const Vector& f_t = cache.features[idx];
                    const Vector& f_s = work.trace.feature;
                    work.mimic_grad.assign(f_s.size(), 0.0);
                    if (uses_mse(mode)) {
                        work.mse = mse_feature_loss(f_t, f_s);
                        axpy(work.mimic_grad, mse_feature_grad(f_t, f_s), 1.0);
                    }
                    if (uses_lsh(mode)) {
                        work.lsh = lsh_loss(*hash, f_t, f_s);
                        axpy(work.mimic_grad, lsh_loss_grad(*hash, f_t, f_s), 1.0);
                    }
                    work.contributes = true;
                    ++n_contrib;
                    epoch_mse += work.mse;
                    epoch_lsh += work.lsh;
                }
            }
            epoch_contrib += n_contrib;

            MlpGrads grads = zero_grads(student);
            const Vector zero_dlogits(student.n_classes(), 0.0);
            for (std::size_t k = 0; k < batch_n; ++k) {
                SampleWork& work = batch_work[k];
                Vector dlogits = zero_dlogits;
                if (opts.use_ce) {
                    dlogits = std::move(work.ce_grad);
                    const double w = 1.0 / static_cast<double>(batch_n);
                    for (double& g : dlogits) {
                        g *= w;
                    }
                }
                Vector dfeature;
                if (work.contributes && mimic_weight != 0.0) {
                    dfeature = std::move(work.mimic_grad);
                    const double w = mimic_weight / static_cast<double>(n_contrib);
                    for (double& g : dfeature) {
                        g *= w;
                    }
                }
                backward_accumulate(student, work.trace, dlogits, dfeature, grads);
            }

            if (opts.train_hidden) {
                for (std::size_t li = 0; li < student.hidden.size(); ++li) {
                    sgd_layer(student.hidden[li], grads.hidden[li], cfg.lr);
                }
            }
            if (opts.train_embedding && student.embedding) {
                sgd_layer(*student.embedding, *grads.embedding, cfg.lr);
            }
            if (opts.train_classifier) {
                sgd_layer(student.classifier, grads.classifier, cfg.lr);
            }
        }

        if (opts.average_snapshots) {
            snapshots.push_back(collect_parameters(student));
            if (snapshots.size() > cfg.avg_last_k) {
                snapshots.pop_front();
            }
        }

        if (log != nullptr) {
            EpochLogEntry entry;
            entry.stage = opts.stage;
            entry.epoch = epoch;
            const double n = static_cast<double>(train.size());
            const double ce = opts.use_ce ? epoch_ce / n : 0.0;
            const double mse =
                epoch_contrib > 0 ? epoch_mse / static_cast<double>(epoch_contrib) : 0.0;
            const double lsh =
                epoch_contrib > 0 ? epoch_lsh / static_cast<double>(epoch_contrib) : 0.0;
            entry.loss = combined_loss(ce, mse, lsh, mimic_weight);
            if (teacher != nullptr && opts.compute_stats) {
                entry.train_stats = feature_stats(*teacher, student, train);
                if (test != nullptr) {
                    entry.test_stats = feature_stats(*teacher, student, *test);
                }
            }
            log->push_back(std::move(entry));
        }
    }

    if (opts.average_snapshots && !snapshots.empty()) {
        Vector mean(snapshots.front().size(), 0.0);
        for (const Vector& snap : snapshots) {
            axpy(mean, snap, 1.0);
        }
        const double inv = 1.0 / static_cast<double>(snapshots.size());
        for (double& v : mean) {
            v *= inv;
        }
        assign_parameters(student, mean);
    }
    return student;
}

}  // namespace detail

/// Builds the frozen hash module for a distillation run: Gaussian weights
/// from the hash substream of cfg.seed, bias from the teacher's features on
/// the training set per cfg.bias_init. A non-positive cfg.std_hash selects
/// the teacher classifier weight std.
inline HashModule make_hash_module_for(const Mlp& teacher, const Dataset& train,
                                       const DistillConfig& cfg) {
    const double std_hash =
        cfg.std_hash > 0.0 ? cfg.std_hash : classifier_weight_std(teacher);
    if (!(std_hash > 0.0)) {
        throw std::invalid_argument("make_hash_module_for: non-positive hash std");
    }
    RngStream rng = RngStream(cfg.seed).substream(stream_tag::kHash);
    HashModule module = init_hash_module(teacher.feature_dim(), cfg.n_hash, std_hash, rng);
    if (cfg.bias_init != BiasInit::Zero) {
        const detail::TeacherCache cache = detail::cache_teacher(teacher, train);
        module = init_bias(module, cache.features, cfg.bias_init);
    }
    return module;
}

/// Label-only SGD training. Requires cfg.loss_mode == CE; shares every detail
/// of the batch schedule with distill(), so a beta = 0 distillation run over
/// the same seed reproduces it bit for bit.
inline Mlp train_vanilla(const Mlp& model, const Dataset& train, const DistillConfig& cfg,
                         TrainLog* log = nullptr) {
    if (cfg.loss_mode != LossMode::CE) {
        throw std::invalid_argument("train_vanilla: loss_mode must be CE");
    }
    detail::TrainOptions opts;
    opts.stage = "vanilla";
    return detail::run_training(model, nullptr, nullptr, train, nullptr, cfg, LossMode::CE, opts,
                                log);
}

struct DistillResult {
    Mlp student;
    AngleStats train_stats;
    AngleStats test_stats;
};

/// Full distillation pass per the combined objective: cross entropy plus
/// beta-weighted mimicking terms, teacher-correct filtering, and last-K
/// weight averaging. The teacher is frozen throughout.
inline DistillResult distill(const Mlp& teacher, const Mlp& student, const Dataset& train,
                             const Dataset& test, const DistillConfig& cfg,
                             TrainLog* log = nullptr) {
    validate_config(cfg);
    if (cfg.loss_mode != LossMode::CE && student.feature_dim() != teacher.feature_dim()) {
        throw std::invalid_argument(
            "distill: feature dimensions differ; configure the student with an embedding layer");
    }
    HashModule hash;
    const HashModule* hash_ptr = nullptr;
    if (uses_lsh(cfg.loss_mode)) {
        hash = make_hash_module_for(teacher, train, cfg);
        hash_ptr = &hash;
    }
    detail::TrainOptions opts;
    DistillResult result;
    result.student = detail::run_training(student, &teacher, hash_ptr, train, &test, cfg,
                                          cfg.loss_mode, opts, log);
    result.train_stats = feature_stats(teacher, result.student, train);
    result.test_stats = feature_stats(teacher, result.student, test);
    return result;
}

/// Stage-1 alignment: freezes the backbone and classifier and trains only the
/// embedding with the chosen mimicking loss (no cross entropy, no weight
/// averaging). The backbone is untouched down to the bit level.
inline Mlp align_embedding(const Mlp& teacher, const Mlp& student, const Dataset& train,
                           const DistillConfig& cfg, LossMode mode, TrainLog* log = nullptr) {
    if (!student.embedding) {
        throw std::invalid_argument("align_embedding: student has no embedding layer");
    }
    if (mode == LossMode::CE) {
        throw std::invalid_argument("align_embedding: stage 1 needs a mimicking loss mode");
    }
    if (student.feature_dim() != teacher.feature_dim()) {
        throw std::invalid_argument("align_embedding: feature dimensions differ");
    }
    HashModule hash;
    const HashModule* hash_ptr = nullptr;
    if (uses_lsh(mode)) {
        hash = make_hash_module_for(teacher, train, cfg);
        hash_ptr = &hash;
    }
    detail::TrainOptions opts;
    opts.use_ce = false;
    opts.train_hidden = false;
    opts.train_classifier = false;
    opts.average_snapshots = false;
    opts.stage = "stage1";
    return detail::run_training(student, &teacher, hash_ptr, train, nullptr, cfg, mode, opts, log);
}

/// Two-stage finetuning: stage 1 aligns the embedding (backbone frozen),
/// stage 2 trains all parameters with the combined objective. Each stage runs
/// cfg.epochs epochs.
inline Mlp two_stage_finetune(const Mlp& teacher, const Mlp& student, const Dataset& train,
                              const Dataset& test, const DistillConfig& cfg, LossMode stage1_mode,
                              LossMode stage2_mode, TrainLog* log = nullptr) {
    Mlp aligned = align_embedding(teacher, student, train, cfg, stage1_mode, log);
    DistillConfig stage2_cfg = cfg;
    stage2_cfg.loss_mode = stage2_mode;
    HashModule hash;
    const HashModule* hash_ptr = nullptr;
    if (uses_lsh(stage2_mode)) {
        hash = make_hash_module_for(teacher, train, stage2_cfg);
        hash_ptr = &hash;
    }
    detail::TrainOptions opts;
    opts.stage = "stage2";
    return detail::run_training(aligned, &teacher, hash_ptr, train, &test, stage2_cfg, stage2_mode,
                                opts, log);
}

}  // namespace featkd
