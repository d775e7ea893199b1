#pragma once

#include <string>
#include <vector>

#include "facefit/rnn.hpp"

namespace facefit {

struct PredictionRecord {
    std::string video_id;
    int true_label = 0;
    int predicted = 0;
    VecX probabilities;
};

/// Deception (label 1) is the positive class. Empty denominators
/// (no positive predictions / no positive truths) yield 0.
struct Metrics {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    int tp = 0, fp = 0, tn = 0, fn = 0;
};

Metrics compute_metrics(const std::vector<PredictionRecord>& predictions);

struct LopoConfig {
    TrainConfig train;
    int n_iterations = 1;     // repeated runs averaged into the aggregate
    int validation_count = 5; // videos sampled out of each fold's remainder
    std::uint64_t seed = 0;
};

struct FoldResult {
    std::string subject;
    int iteration = 0;
    Metrics metrics;
    std::vector<PredictionRecord> predictions;
};

struct LopoResult {
    std::vector<FoldResult> folds; // one per (iteration, subject)
    Metrics aggregate;             // mean over folds and iterations
};

/// Leave-one-person-out cross-validation: per fold, one subject's videos
/// are held out for testing, `validation_count` videos are sampled out of
/// the remainder, and the majority class of the remaining training pool is
/// randomly downsampled to balance classes before training.
LopoResult lopo_evaluate(const std::vector<SequenceSample>& samples, const LopoConfig& config);

} // namespace facefit
