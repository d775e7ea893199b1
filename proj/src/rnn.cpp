#include "facefit/rnn.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "facefit/errors.hpp"
#include "facefit/rng.hpp"

static_assert(std::endian::native == std::endian::little,
              "FRNN1 i/o assumes a little-endian host");

namespace facefit {

namespace {

constexpr char kMagic[8] = {'F', 'R', 'N', 'N', '1', '\0', '\0', '\0'};

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

MatX uniform_matrix(Rng& rng, int rows, int cols, double bound) {
    MatX m(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) m(r, c) = rng.uniform(-bound, bound);
    return m;
}

void write_u32(std::ostream& os, std::uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); }
void write_u64(std::ostream& os, std::uint64_t v) { os.write(reinterpret_cast<const char*>(&v), 8); }

std::uint32_t read_u32(std::istream& is) {
    std::uint32_t v = 0;
    is.read(reinterpret_cast<char*>(&v), 4);
    return v;
}
std::uint64_t read_u64(std::istream& is) {
    std::uint64_t v = 0;
    is.read(reinterpret_cast<char*>(&v), 8);
    return v;
}

void write_f32_matrix(std::ostream& os, const MatX& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            const float f = static_cast<float>(m(r, c));
            os.write(reinterpret_cast<const char*>(&f), 4);
        }
}

MatX read_f32_matrix(std::istream& is, Eigen::Index rows, Eigen::Index cols) {
    MatX m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) {
            float f = 0.0f;
            is.read(reinterpret_cast<char*>(&f), 4);
            m(r, c) = f;
        }
    return m;
}

} // namespace

RnnModel RnnModel::init(int input_dim, int hidden_dim, int output_dim, std::uint64_t seed) {
    Rng rng(seed);
    RnnModel model;
    model.input_dim = input_dim;
    model.hidden_dim = hidden_dim;
    model.output_dim = output_dim;
    model.seed = seed;
    model.input_weights = uniform_matrix(rng, hidden_dim, input_dim, 1.0 / std::sqrt(input_dim));
    model.recurrent_weights =
        uniform_matrix(rng, hidden_dim, hidden_dim, 1.0 / std::sqrt(hidden_dim));
    model.hidden_bias = VecX::Zero(hidden_dim);
    model.output_weights = uniform_matrix(rng, output_dim, hidden_dim, 1.0 / std::sqrt(hidden_dim));
    model.output_bias = VecX::Zero(output_dim);
    return model;
}

void RnnModel::validate() const {
    if (input_weights.rows() != hidden_dim || input_weights.cols() != input_dim ||
        recurrent_weights.rows() != hidden_dim || recurrent_weights.cols() != hidden_dim ||
        hidden_bias.size() != hidden_dim || output_weights.rows() != output_dim ||
        output_weights.cols() != hidden_dim || output_bias.size() != output_dim)
        throw data_error("rnn model weight shapes are inconsistent");
    if (!input_weights.allFinite() || !recurrent_weights.allFinite() ||
        !hidden_bias.allFinite() || !output_weights.allFinite() || !output_bias.allFinite())
        throw numerical_error("rnn model has non-finite parameters");
}

RnnForwardResult rnn_forward(const RnnModel& model, const MatX& features) {
    if (features.cols() != model.input_dim)
        throw data_error("sequence feature width " + std::to_string(features.cols()) +
                         " does not match model input " + std::to_string(model.input_dim));
    if (features.rows() < 1) throw data_error("sequence must have at least one frame");
    const int steps = static_cast<int>(features.rows());
    RnnForwardResult out;
    out.hidden_states.resize(model.hidden_dim, steps);
    VecX h = VecX::Zero(model.hidden_dim);
    for (int t = 0; t < steps; ++t) {
        h = (model.input_weights * features.row(t).transpose() + model.recurrent_weights * h +
             model.hidden_bias)
                .array()
                .tanh();
        out.hidden_states.col(t) = h;
    }
    out.probabilities = (model.output_weights * h + model.output_bias)
                            .unaryExpr([](double x) { return sigmoid(x); });
    return out;
}

double classifier_loss(const VecX& pred, int label) {
    double loss = 0.0;
    for (int j = 0; j < pred.size(); ++j) {
        const double target = (j == label) ? 1.0 : 0.0;
        const double diff = target - pred[j];
        loss += diff * diff;
    }
    return loss;
}

RnnGradients RnnGradients::zero(const RnnModel& model) {
    RnnGradients g;
    g.input_weights = MatX::Zero(model.hidden_dim, model.input_dim);
    g.recurrent_weights = MatX::Zero(model.hidden_dim, model.hidden_dim);
    g.hidden_bias = VecX::Zero(model.hidden_dim);
    g.output_weights = MatX::Zero(model.output_dim, model.hidden_dim);
    g.output_bias = VecX::Zero(model.output_dim);
    return g;
}

void RnnGradients::add(const RnnGradients& other) {
    input_weights += other.input_weights;
    recurrent_weights += other.recurrent_weights;
    hidden_bias += other.hidden_bias;
    output_weights += other.output_weights;
    output_bias += other.output_bias;
}

double RnnGradients::global_norm() const {
    return std::sqrt(input_weights.squaredNorm() + recurrent_weights.squaredNorm() +
                     hidden_bias.squaredNorm() + output_weights.squaredNorm() +
                     output_bias.squaredNorm());
}

void RnnGradients::scale(double s) {
    input_weights *= s;
    recurrent_weights *= s;
    hidden_bias *= s;
    output_weights *= s;
    output_bias *= s;
}

RnnGradients bptt(const RnnModel& model, const MatX& features, int label, double* loss_out) {
    const RnnForwardResult fwd = rnn_forward(model, features);
    const int steps = static_cast<int>(features.rows());
    if (loss_out) *loss_out = classifier_loss(fwd.probabilities, label);

    RnnGradients g = RnnGradients::zero(model);

    // d loss / d y = -2 (target - y); through sigmoid: * y (1 - y)
    VecX dz_out(model.output_dim);
    for (int j = 0; j < model.output_dim; ++j) {
        const double y = fwd.probabilities[j];
        const double target = (j == label) ? 1.0 : 0.0;
        dz_out[j] = -2.0 * (target - y) * y * (1.0 - y);
    }
    const VecX h_last = fwd.hidden_states.col(steps - 1);
    g.output_weights = dz_out * h_last.transpose();
    g.output_bias = dz_out;

    VecX dh = model.output_weights.transpose() * dz_out;
    for (int t = steps - 1; t >= 0; --t) {
        const VecX h_t = fwd.hidden_states.col(t);
        const VecX dz = dh.cwiseProduct((1.0 - h_t.array().square()).matrix());
        g.input_weights.noalias() += dz * features.row(t);
        if (t > 0) g.recurrent_weights.noalias() += dz * fwd.hidden_states.col(t - 1).transpose();
        g.hidden_bias += dz;
        dh = model.recurrent_weights.transpose() * dz;
    }
    return g;
}

namespace {

struct AdamState {
    RnnGradients m;
    RnnGradients v;
    int step = 0;
};

void adam_apply(MatX& param, MatX& m, MatX& v, const MatX& grad, double lr, double m_corr,
                double v_corr) {
    m = 0.9 * m + 0.1 * grad;
    v = 0.999 * v + 0.001 * grad.cwiseProduct(grad);
    param.array() -= lr * (m_corr * m.array()) / ((v_corr * v.array()).sqrt() + 1e-8);
}

void adam_apply(VecX& param, VecX& m, VecX& v, const VecX& grad, double lr, double m_corr,
                double v_corr) {
    m = 0.9 * m + 0.1 * grad;
    v = 0.999 * v + 0.001 * grad.cwiseProduct(grad);
    param.array() -= lr * (m_corr * m.array()) / ((v_corr * v.array()).sqrt() + 1e-8);
}

} // namespace

TrainResult train(const std::vector<SequenceSample>& samples, const TrainConfig& config) {
    if (samples.empty()) throw data_error("training set is empty");
    bool has_pos = false, has_neg = false;
    for (const auto& s : samples) {
        if (s.label == 1) has_pos = true;
        else if (s.label == 0) has_neg = true;
        else throw data_error("sample label must be 0 or 1, got " + std::to_string(s.label));
        if (s.features.rows() < 1) throw data_error("sequence must have at least one frame");
    }
    if (!has_pos || !has_neg)
        throw data_error("training needs at least one sample of each class");

    const int input_dim = static_cast<int>(samples.front().features.cols());
    for (const auto& s : samples)
        if (s.features.cols() != input_dim)
            throw data_error("inconsistent feature widths in training set");

    // per-dimension standardization statistics over all training frames
    VecX mean = VecX::Zero(input_dim);
    VecX stddev = VecX::Ones(input_dim);
    if (config.feature_standardization) {
        std::int64_t n_frames = 0;
        for (const auto& s : samples) {
            for (Eigen::Index r = 0; r < s.features.rows(); ++r)
                mean += s.features.row(r).transpose();
            n_frames += s.features.rows();
        }
        mean /= static_cast<double>(n_frames);
        VecX var = VecX::Zero(input_dim);
        for (const auto& s : samples)
            for (Eigen::Index r = 0; r < s.features.rows(); ++r) {
                const VecX diff = s.features.row(r).transpose() - mean;
                var += diff.cwiseProduct(diff);
            }
        var /= static_cast<double>(n_frames);
        stddev = var.cwiseSqrt().cwiseMax(1e-8);
    }

    std::vector<MatX> standardized;
    standardized.reserve(samples.size());
    for (const auto& s : samples) {
        MatX x = s.features;
        if (config.feature_standardization)
            for (int c = 0; c < input_dim; ++c)
                x.col(c) = (x.col(c).array() - mean[c]) / stddev[c];
        standardized.push_back(std::move(x));
    }

    RnnModel model = RnnModel::init(input_dim, 128, 2, config.seed);
    AdamState adam;
    adam.m = RnnGradients::zero(model);
    adam.v = RnnGradients::zero(model);

    Rng rng(config.seed);
    std::vector<std::size_t> order(samples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    TrainResult result;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        std::size_t cursor = 0;
        while (cursor < order.size()) {
            const std::size_t batch_end =
                std::min(cursor + static_cast<std::size_t>(config.batch_size), order.size());
            RnnGradients batch_grad = RnnGradients::zero(model);
            for (std::size_t b = cursor; b < batch_end; ++b) {
                double loss = 0.0;
                const RnnGradients g =
                    bptt(model, standardized[order[b]], samples[order[b]].label, &loss);
                batch_grad.add(g);
                epoch_loss += loss;
            }
            const double norm = batch_grad.global_norm();
            if (norm > config.grad_clip_norm && norm > 0.0)
                batch_grad.scale(config.grad_clip_norm / norm);

            ++adam.step;
            const double m_corr = 1.0 / (1.0 - std::pow(0.9, adam.step));
            const double v_corr = 1.0 / (1.0 - std::pow(0.999, adam.step));
            adam_apply(model.input_weights, adam.m.input_weights, adam.v.input_weights,
                       batch_grad.input_weights, config.learning_rate, m_corr, v_corr);
            adam_apply(model.recurrent_weights, adam.m.recurrent_weights, adam.v.recurrent_weights,
                       batch_grad.recurrent_weights, config.learning_rate, m_corr, v_corr);
            adam_apply(model.hidden_bias, adam.m.hidden_bias, adam.v.hidden_bias,
                       batch_grad.hidden_bias, config.learning_rate, m_corr, v_corr);
            adam_apply(model.output_weights, adam.m.output_weights, adam.v.output_weights,
                       batch_grad.output_weights, config.learning_rate, m_corr, v_corr);
            adam_apply(model.output_bias, adam.m.output_bias, adam.v.output_bias,
                       batch_grad.output_bias, config.learning_rate, m_corr, v_corr);
            cursor = batch_end;
        }
        result.epoch_losses.push_back(epoch_loss / static_cast<double>(samples.size()));
    }

    // Fold the standardization into the weights: W (x - mu) / sigma =
    // (W diag(1/sigma)) x + (b - W (mu/sigma)). Keeps the checkpoint a
    // pure weight record while predictions stay those of the
    // standardized-input model.
    if (config.feature_standardization) {
        const VecX mu_over_sigma = mean.cwiseQuotient(stddev);
        model.hidden_bias -= model.input_weights * mu_over_sigma;
        for (int c = 0; c < input_dim; ++c) model.input_weights.col(c) /= stddev[c];
    }

    model.epochs_trained = static_cast<std::uint32_t>(config.epochs);
    result.model = std::move(model);
    return result;
}

Prediction predict(const RnnModel& model, const MatX& features) {
    const RnnForwardResult fwd = rnn_forward(model, features);
    Prediction out;
    out.probabilities = fwd.probabilities;
    // tie resolves to class 0 (truth)
    out.label = fwd.probabilities[1] > fwd.probabilities[0] ? 1 : 0;
    return out;
}

void save_rnn(const RnnModel& model, const std::string& path) {
    model.validate();
    std::ofstream os(path, std::ios::binary);
    if (!os) throw data_error("cannot open checkpoint for writing: " + path);
    os.write(kMagic, 8);
    write_u32(os, static_cast<std::uint32_t>(model.input_dim));
    write_u32(os, static_cast<std::uint32_t>(model.hidden_dim));
    write_u32(os, static_cast<std::uint32_t>(model.output_dim));
    write_f32_matrix(os, model.input_weights);
    write_f32_matrix(os, model.recurrent_weights);
    write_f32_matrix(os, model.hidden_bias);
    write_f32_matrix(os, model.output_weights);
    write_f32_matrix(os, model.output_bias);
    write_u64(os, model.seed);
    write_u32(os, model.epochs_trained);
    if (!os) throw data_error("failed writing checkpoint: " + path);
}

RnnModel load_rnn(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw data_error("cannot open checkpoint: " + path);
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kMagic, 8) != 0)
        throw data_error("not an FRNN1 checkpoint: " + path);
    RnnModel model;
    model.input_dim = static_cast<int>(read_u32(is));
    model.hidden_dim = static_cast<int>(read_u32(is));
    model.output_dim = static_cast<int>(read_u32(is));
    model.input_weights = read_f32_matrix(is, model.hidden_dim, model.input_dim);
    model.recurrent_weights = read_f32_matrix(is, model.hidden_dim, model.hidden_dim);
    model.hidden_bias = read_f32_matrix(is, model.hidden_dim, 1);
    model.output_weights = read_f32_matrix(is, model.output_dim, model.hidden_dim);
    model.output_bias = read_f32_matrix(is, model.output_dim, 1);
    model.seed = read_u64(is);
    model.epochs_trained = read_u32(is);
    if (!is) throw data_error("truncated checkpoint: " + path);
    model.validate();
    return model;
}

} // namespace facefit
