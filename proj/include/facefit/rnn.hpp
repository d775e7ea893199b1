#pragma once

#include <string>
#include <vector>

#include "facefit/types.hpp"

namespace facefit {

/// Single-layer tanh RNN with two sigmoid output neurons (truth,
/// deception). Weight shapes: input 128x257, recurrent 128x128, output
/// 2x128. The hidden size is 128 in production; tests may build smaller
/// instances.
struct RnnModel {
    int input_dim = dims::code;
    int hidden_dim = 128;
    int output_dim = 2;
    MatX input_weights;     // hidden x input
    MatX recurrent_weights; // hidden x hidden
    VecX hidden_bias;       // hidden
    MatX output_weights;    // output x hidden
    VecX output_bias;       // output
    std::uint64_t seed = 0;
    std::uint32_t epochs_trained = 0;

    /// Weights uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)], biases zero.
    static RnnModel init(int input_dim, int hidden_dim, int output_dim, std::uint64_t seed);
    void validate() const;
};

/// Ordered per-frame feature vectors of one video plus its label
/// (1 = deception, 0 = truth). Features are F x input_dim, row = frame.
struct SequenceSample {
    MatX features;
    int label = 0;
    std::string video_id;
    std::string subject_id;
};

struct TrainConfig {
    int epochs = 10;
    int batch_size = 16;
    double learning_rate = 1e-3;
    std::uint64_t seed = 0;
    bool feature_standardization = true;
    double grad_clip_norm = 5.0; // global-norm clip per mini-batch
};

struct RnnForwardResult {
    VecX probabilities;  // 2, both strictly in (0,1)
    MatX hidden_states;  // hidden x F trajectory
};

/// h_0 = 0; h_t = tanh(W_in x_t + W_rec h_{t-1} + b_h);
/// y = sigmoid(W_out h_F + b_out).
RnnForwardResult rnn_forward(const RnnModel& model, const MatX& features);

/// Squared-error against the one-hot target: sum_j (target_j - y_j)^2.
double classifier_loss(const VecX& pred, int label);

struct RnnGradients {
    MatX input_weights;
    MatX recurrent_weights;
    VecX hidden_bias;
    MatX output_weights;
    VecX output_bias;

    static RnnGradients zero(const RnnModel& model);
    void add(const RnnGradients& other);
    double global_norm() const;
    void scale(double s);
};

/// Backpropagation through time of the classifier loss for one sequence.
RnnGradients bptt(const RnnModel& model, const MatX& features, int label, double* loss_out);

struct TrainResult {
    RnnModel model;
    std::vector<double> epoch_losses; // mean per-sample loss per epoch
};

/// Shuffled mini-batches, gradients summed per batch, global-norm clipped,
/// Adam updates. When standardization is enabled the per-dimension
/// training-set statistics are folded into the input weights and hidden
/// bias on return, so the checkpoint stays a pure weight record.
/// Rejects a single-class dataset.
TrainResult train(const std::vector<SequenceSample>& samples, const TrainConfig& config);

struct Prediction {
    int label = 0;
    VecX probabilities; // 2
};

/// Argmax over the two outputs; an exact tie resolves to class 0 (truth).
Prediction predict(const RnnModel& model, const MatX& features);

/// FRNN1 little-endian checkpoint: magic, u32 dims, float32 weights in
/// field order, u64 seed, u32 epoch.
void save_rnn(const RnnModel& model, const std::string& path);
RnnModel load_rnn(const std::string& path);

} // namespace facefit
