#include "facefit/lopo.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "facefit/errors.hpp"
#include "facefit/rng.hpp"

namespace facefit {

Metrics compute_metrics(const std::vector<PredictionRecord>& predictions) {
    Metrics m;
    for (const auto& p : predictions) {
        if (p.true_label == 1 && p.predicted == 1) ++m.tp;
        else if (p.true_label == 0 && p.predicted == 1) ++m.fp;
        else if (p.true_label == 0 && p.predicted == 0) ++m.tn;
        else ++m.fn;
    }
    const int total = m.tp + m.fp + m.tn + m.fn;
    m.accuracy = total > 0 ? static_cast<double>(m.tp + m.tn) / total : 0.0;
    m.precision = (m.tp + m.fp) > 0 ? static_cast<double>(m.tp) / (m.tp + m.fp) : 0.0;
    m.recall = (m.tp + m.fn) > 0 ? static_cast<double>(m.tp) / (m.tp + m.fn) : 0.0;
    return m;
}

LopoResult lopo_evaluate(const std::vector<SequenceSample>& samples, const LopoConfig& config) {
    std::set<std::string> subject_set;
    for (const auto& s : samples) subject_set.insert(s.subject_id);
    if (subject_set.size() < 2)
        throw data_error("LOPO evaluation needs at least two distinct subjects");
    const std::vector<std::string> subjects(subject_set.begin(), subject_set.end());

    LopoResult result;
    for (int iteration = 0; iteration < config.n_iterations; ++iteration) {
        for (std::size_t fold = 0; fold < subjects.size(); ++fold) {
            const std::string& held_out = subjects[fold];
            Rng rng(config.seed + 1000003u * static_cast<std::uint64_t>(iteration) + fold);

            std::vector<std::size_t> test_idx, rest_idx;
            for (std::size_t i = 0; i < samples.size(); ++i)
                (samples[i].subject_id == held_out ? test_idx : rest_idx).push_back(i);

            // carve validation videos out of the remainder
            std::vector<std::size_t> shuffled = rest_idx;
            rng.shuffle(shuffled);
            const std::size_t val_count = std::min<std::size_t>(
                static_cast<std::size_t>(std::max(config.validation_count, 0)),
                shuffled.size() > 2 ? shuffled.size() - 2 : 0);
            std::vector<std::size_t> train_idx(shuffled.begin() + static_cast<std::ptrdiff_t>(val_count),
                                               shuffled.end());

            // training must keep both classes; pull videos back from the
            // validation split if the carve-out emptied one
            auto class_count = [&](int label) {
                return std::count_if(train_idx.begin(), train_idx.end(),
                                     [&](std::size_t i) { return samples[i].label == label; });
            };
            for (int label : {0, 1}) {
                std::size_t v = 0;
                while (class_count(label) == 0 && v < val_count) {
                    if (samples[shuffled[v]].label == label) train_idx.push_back(shuffled[v]);
                    ++v;
                }
            }
            if (class_count(0) == 0 || class_count(1) == 0)
                throw data_error("LOPO fold for subject " + held_out +
                                 " has a single-class training pool");

            // randomly downsample the majority class to balance training
            std::vector<std::size_t> pos, neg;
            for (std::size_t i : train_idx)
                (samples[i].label == 1 ? pos : neg).push_back(i);
            rng.shuffle(pos);
            rng.shuffle(neg);
            const std::size_t keep = std::min(pos.size(), neg.size());
            pos.resize(keep);
            neg.resize(keep);

            std::vector<SequenceSample> train_set;
            train_set.reserve(2 * keep);
            for (std::size_t i : pos) train_set.push_back(samples[i]);
            for (std::size_t i : neg) train_set.push_back(samples[i]);

            TrainConfig train_config = config.train;
            train_config.seed = config.seed + 7919u * static_cast<std::uint64_t>(iteration) + fold;
            const TrainResult trained = train(train_set, train_config);

            FoldResult fr;
            fr.subject = held_out;
            fr.iteration = iteration;
            for (std::size_t i : test_idx) {
                const Prediction p = predict(trained.model, samples[i].features);
                fr.predictions.push_back(
                    {samples[i].video_id, samples[i].label, p.label, p.probabilities});
            }
            fr.metrics = compute_metrics(fr.predictions);
            result.folds.push_back(std::move(fr));
        }
    }

    for (const auto& fr : result.folds) {
        result.aggregate.accuracy += fr.metrics.accuracy;
        result.aggregate.precision += fr.metrics.precision;
        result.aggregate.recall += fr.metrics.recall;
        result.aggregate.tp += fr.metrics.tp;
        result.aggregate.fp += fr.metrics.fp;
        result.aggregate.tn += fr.metrics.tn;
        result.aggregate.fn += fr.metrics.fn;
    }
    const double n_folds = static_cast<double>(result.folds.size());
    result.aggregate.accuracy /= n_folds;
    result.aggregate.precision /= n_folds;
    result.aggregate.recall /= n_folds;
    return result;
}

} // namespace facefit
