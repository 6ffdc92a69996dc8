#include "qtrack/nn_train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "qtrack/rng.hpp"

namespace qtrack {

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw std::invalid_argument("train.learning_rate must be > 0");
    if (!(momentum >= 0.0 && momentum < 1.0))
        throw std::invalid_argument("train.momentum must lie in [0, 1)");
    if (!(rms_decay > 0.0 && rms_decay < 1.0))
        throw std::invalid_argument("train.rms_decay must lie in (0, 1)");
    if (!(epsilon > 0.0)) throw std::invalid_argument("train.epsilon must be > 0");
    if (epochs < 1) throw std::invalid_argument("train.epochs must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("train.batch_size must be >= 1");
    if (!(lambda_phase >= 0.0 && lambda_intensity >= 0.0))
        throw std::invalid_argument("train loss scales must be >= 0");
    if (!(intensity_min > 0.0 && intensity_min < intensity_max))
        throw std::invalid_argument("train intensity range must be increasing and positive");
    if (!(phase_sigma >= 0.0)) throw std::invalid_argument("train.phase_sigma must be >= 0");
    if (experiments_min < 1 || experiments_min > experiments_max)
        throw std::invalid_argument("train experiments range must be increasing and >= 1");
    if (dataset_size < 1) throw std::invalid_argument("train.dataset_size must be >= 1");
    if (!(validation_fraction >= 0.0 && validation_fraction < 1.0))
        throw std::invalid_argument("train.validation_fraction must lie in [0, 1)");
}

TrainingSample generate_sample(const PhysicsConfig& physics, const ReceiverConfig& receiver,
                               const TrainConfig& cfg, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> intensity_draw(cfg.intensity_min, cfg.intensity_max);
    std::uniform_int_distribution<int> experiments_draw(cfg.experiments_min, cfg.experiments_max);
    std::uniform_int_distribution<int> symbol_draw(0, receiver.alphabet - 1);

    TrainingSample sample;
    const double intensity = intensity_draw(rng);
    const double lo_intensity = intensity_draw(rng);
    double phase = 0.0;
    if (cfg.phase_sigma > 0.0) {
        std::normal_distribution<double> phase_draw(0.0, cfg.phase_sigma);
        phase = phase_draw(rng);
    }
    const int experiments = experiments_draw(rng);

    const ReceiverModel model = ReceiverModel::build(lo_intensity, receiver);
    DetectionMatrix matrix(receiver.alphabet, physics.pnr);
    const LOState lo{lo_intensity, 0.0};
    for (int n = 0; n < experiments; ++n) {
        const SymbolInstance symbol{symbol_draw(rng), intensity, phase};
        accumulate(matrix, discriminate(symbol, lo, receiver, model, rng));
    }

    sample.input = to_input_vector(matrix);
    sample.input.push_back(lo_intensity);
    sample.target_phase = phase;
    sample.target_intensity = intensity;
    const double gap = intensity - lo_intensity;
    sample.weight = std::exp(-gap * gap / 2.0) + 0.1;
    return sample;
}

std::vector<TrainingSample> generate_dataset(const PhysicsConfig& physics,
                                             const ReceiverConfig& receiver,
                                             const TrainConfig& cfg, std::int64_t count,
                                             std::uint64_t seed, bool parallel) {
    cfg.validate();
    receiver.validate();
    if (count < 1) throw std::invalid_argument("dataset size must be >= 1");
    std::vector<TrainingSample> data(static_cast<size_t>(count));
    if (parallel) {
#pragma omp parallel for schedule(dynamic, 64)
        for (std::int64_t i = 0; i < count; ++i) {
            std::mt19937_64 rng = make_stream(seed, 0x5452414eull, std::uint64_t(i));
            data[size_t(i)] = generate_sample(physics, receiver, cfg, rng);
        }
    } else {
        for (std::int64_t i = 0; i < count; ++i) {
            std::mt19937_64 rng = make_stream(seed, 0x5452414eull, std::uint64_t(i));
            data[size_t(i)] = generate_sample(physics, receiver, cfg, rng);
        }
    }
    return data;
}

MLPModel xavier_init(const std::vector<int>& layer_sizes, std::uint64_t seed) {
    MLPModel model;
    model.layer_sizes = layer_sizes;
    model.weights.resize(layer_sizes.size() - 1);
    model.biases.resize(layer_sizes.size() - 1);
    std::mt19937_64 rng = make_stream(seed, 0x58415649ull);
    for (size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
        const int in = layer_sizes[l];
        const int out = layer_sizes[l + 1];
        std::normal_distribution<double> draw(0.0, std::sqrt(1.0 / double(in)));
        model.weights[l].resize(size_t(in) * size_t(out));
        for (double& w : model.weights[l]) w = draw(rng);
        model.biases[l].assign(size_t(out), 0.0);
    }
    model.metadata.seed = seed;
    model.validate();
    return model;
}

double weighted_mse(std::span<const double> predicted_phase,
                    std::span<const double> predicted_intensity,
                    std::span<const double> target_phase,
                    std::span<const double> target_intensity,
                    std::span<const double> weights, double lambda_phase,
                    double lambda_intensity) {
    const size_t n = predicted_phase.size();
    if (predicted_intensity.size() != n || target_phase.size() != n ||
        target_intensity.size() != n || weights.size() != n)
        throw std::invalid_argument("weighted_mse spans must have equal length");
    if (n == 0) throw std::invalid_argument("weighted_mse needs at least one sample");
    double weighted_sum = 0.0;
    double weight_sum = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double ep = predicted_phase[i] - target_phase[i];
        const double ei = predicted_intensity[i] - target_intensity[i];
        weighted_sum += weights[i] * (lambda_phase * ep * ep + lambda_intensity * ei * ei);
        weight_sum += weights[i];
    }
    if (weight_sum <= 0.0)
        throw std::invalid_argument("weighted_mse needs a positive total weight");
    return weighted_sum / weight_sum;
}

Gradients Gradients::zeros_like(const MLPModel& model) {
    Gradients g;
    g.weights.resize(model.weights.size());
    g.biases.resize(model.biases.size());
    for (size_t l = 0; l < model.weights.size(); ++l) {
        g.weights[l].assign(model.weights[l].size(), 0.0);
        g.biases[l].assign(model.biases[l].size(), 0.0);
    }
    return g;
}

void Gradients::add(const Gradients& other) {
    for (size_t l = 0; l < weights.size(); ++l) {
        for (size_t i = 0; i < weights[l].size(); ++i) weights[l][i] += other.weights[l][i];
        for (size_t i = 0; i < biases[l].size(); ++i) biases[l][i] += other.biases[l][i];
    }
}

void Gradients::clear() {
    for (auto& w : weights) std::fill(w.begin(), w.end(), 0.0);
    for (auto& b : biases) std::fill(b.begin(), b.end(), 0.0);
}

namespace {

// Accumulates the unweighted-denominator part of the batch gradient for one
// sample: d/dtheta of w_i * (lambda_p ep^2 + lambda_i ei^2). Division by the
// batch weight sum happens once at the end.
void accumulate_sample_gradient(const MLPModel& model, const TrainingSample& sample,
                                const TrainConfig& cfg, MLPWorkspace& ws,
                                std::vector<std::vector<double>>& deltas, Gradients& grad,
                                double& loss_numerator) {
    mlp_forward_into(model, sample.input, ws);
    const size_t layers = model.layer_sizes.size();
    const std::vector<double>& out = ws.activations.back();
    const double ep = out[0] - sample.target_phase;
    const double ei = out[1] - sample.target_intensity;
    loss_numerator +=
        sample.weight * (cfg.lambda_phase * ep * ep + cfg.lambda_intensity * ei * ei);

    deltas.resize(layers);
    deltas[layers - 1].assign(out.size(), 0.0);
    deltas[layers - 1][0] = sample.weight * 2.0 * cfg.lambda_phase * ep;
    deltas[layers - 1][1] = sample.weight * 2.0 * cfg.lambda_intensity * ei;

    for (size_t l = layers - 1; l-- > 0;) {
        const int in = model.layer_sizes[l];
        const int out_size = model.layer_sizes[l + 1];
        const std::vector<double>& a = ws.activations[l];
        const std::vector<double>& delta = deltas[l + 1];
        double* gw = grad.weights[l].data();
        for (int o = 0; o < out_size; ++o) {
            const double d = delta[size_t(o)];
            if (d == 0.0) continue;
            double* row = gw + size_t(o) * size_t(in);
            for (int i = 0; i < in; ++i) row[i] += d * a[size_t(i)];
            grad.biases[l][size_t(o)] += d;
        }
        if (l == 0) break;
        std::vector<double>& prev = deltas[l];
        prev.assign(size_t(in), 0.0);
        const double* w = model.weights[l].data();
        for (int o = 0; o < out_size; ++o) {
            const double d = delta[size_t(o)];
            if (d == 0.0) continue;
            const double* row = w + size_t(o) * size_t(in);
            for (int i = 0; i < in; ++i) prev[size_t(i)] += d * row[i];
        }
        // Hidden activations are leaky rectified; the stored activation sign
        // recovers which side of the kink the pre-activation was on.
        for (int i = 0; i < in; ++i)
            if (ws.activations[l][size_t(i)] <= 0.0) prev[size_t(i)] *= model.leaky_slope;
    }
}

}  // namespace

double backprop(const MLPModel& model, const std::vector<TrainingSample>& data,
                std::span<const std::int64_t> batch, const TrainConfig& cfg, Gradients& out) {
    model.validate();
    if (batch.empty()) throw std::invalid_argument("backprop needs a non-empty batch");
    constexpr std::int64_t kBlock = 64;
    const std::int64_t n = std::int64_t(batch.size());
    const std::int64_t blocks = (n + kBlock - 1) / kBlock;

    std::vector<Gradients> block_grads(static_cast<size_t>(blocks));
    std::vector<double> block_loss(size_t(blocks), 0.0);

#pragma omp parallel for schedule(static)
    for (std::int64_t b = 0; b < blocks; ++b) {
        Gradients grad = Gradients::zeros_like(model);
        MLPWorkspace ws;
        std::vector<std::vector<double>> deltas;
        double loss_numerator = 0.0;
        const std::int64_t hi = std::min(n, (b + 1) * kBlock);
        for (std::int64_t i = b * kBlock; i < hi; ++i)
            accumulate_sample_gradient(model, data[size_t(batch[size_t(i)])], cfg, ws, deltas,
                                       grad, loss_numerator);
        block_grads[size_t(b)] = std::move(grad);
        block_loss[size_t(b)] = loss_numerator;
    }

    double weight_sum = 0.0;
    for (std::int64_t i = 0; i < n; ++i) weight_sum += data[size_t(batch[size_t(i)])].weight;
    if (weight_sum <= 0.0) throw std::invalid_argument("batch total weight must be positive");

    out = Gradients::zeros_like(model);
    double loss_numerator = 0.0;
    for (std::int64_t b = 0; b < blocks; ++b) {
        out.add(block_grads[size_t(b)]);
        loss_numerator += block_loss[size_t(b)];
    }
    const double inv = 1.0 / weight_sum;
    for (auto& w : out.weights)
        for (double& v : w) v *= inv;
    for (auto& bgrad : out.biases)
        for (double& v : bgrad) v *= inv;
    return loss_numerator * inv;
}

double batch_loss(const MLPModel& model, const std::vector<TrainingSample>& data,
                  std::span<const std::int64_t> batch, const TrainConfig& cfg) {
    if (batch.empty()) throw std::invalid_argument("batch_loss needs a non-empty batch");
    MLPWorkspace ws;
    double numerator = 0.0;
    double weight_sum = 0.0;
    for (std::int64_t idx : batch) {
        const TrainingSample& sample = data[size_t(idx)];
        mlp_forward_into(model, sample.input, ws);
        const double ep = ws.activations.back()[0] - sample.target_phase;
        const double ei = ws.activations.back()[1] - sample.target_intensity;
        numerator += sample.weight * (cfg.lambda_phase * ep * ep + cfg.lambda_intensity * ei * ei);
        weight_sum += sample.weight;
    }
    return numerator / weight_sum;
}

OptimizerState OptimizerState::zeros_like(const MLPModel& model) {
    OptimizerState s;
    s.ms_weights.resize(model.weights.size());
    s.ms_biases.resize(model.biases.size());
    s.mom_weights.resize(model.weights.size());
    s.mom_biases.resize(model.biases.size());
    for (size_t l = 0; l < model.weights.size(); ++l) {
        s.ms_weights[l].assign(model.weights[l].size(), 0.0);
        s.ms_biases[l].assign(model.biases[l].size(), 0.0);
        s.mom_weights[l].assign(model.weights[l].size(), 0.0);
        s.mom_biases[l].assign(model.biases[l].size(), 0.0);
    }
    return s;
}

namespace {

void rmsprop_update(double* value, double* mean_square, double* momentum, const double* grad,
                    size_t n, const TrainConfig& cfg) {
    for (size_t i = 0; i < n; ++i) {
        mean_square[i] = cfg.rms_decay * mean_square[i] + (1.0 - cfg.rms_decay) * grad[i] * grad[i];
        momentum[i] = cfg.momentum * momentum[i] + grad[i] / std::sqrt(mean_square[i] + cfg.epsilon);
        value[i] -= cfg.learning_rate * momentum[i];
    }
}

}  // namespace

void rmsprop_step(MLPModel& model, OptimizerState& state, const Gradients& grads,
                  const TrainConfig& cfg) {
    for (size_t l = 0; l < model.weights.size(); ++l) {
        rmsprop_update(model.weights[l].data(), state.ms_weights[l].data(),
                       state.mom_weights[l].data(), grads.weights[l].data(),
                       model.weights[l].size(), cfg);
        rmsprop_update(model.biases[l].data(), state.ms_biases[l].data(),
                       state.mom_biases[l].data(), grads.biases[l].data(),
                       model.biases[l].size(), cfg);
    }
}

TrainResult train(const std::vector<TrainingSample>& dataset, const TrainConfig& cfg,
                  std::uint64_t seed) {
    cfg.validate();
    if (dataset.empty()) throw std::invalid_argument("training dataset is empty");
    const size_t input_size = dataset.front().input.size();
    for (const TrainingSample& s : dataset)
        if (s.input.size() != input_size)
            throw std::invalid_argument("training samples have inconsistent input sizes");

    std::vector<int> layers{int(input_size), 32, 32, 32, 32, 16, 16, 8, 8, 2};
    TrainResult result;
    result.model = xavier_init(layers, seed);
    result.model.metadata.epochs = cfg.epochs;
    result.model.metadata.dataset_size = std::int64_t(dataset.size());
    result.model.metadata.learning_rate = cfg.learning_rate;

    std::vector<std::int64_t> order(dataset.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 shuffle_rng = make_stream(seed, 0x53485546ull);
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    const std::int64_t val_count =
        std::int64_t(double(dataset.size()) * cfg.validation_fraction);
    const std::int64_t train_count = std::int64_t(dataset.size()) - val_count;
    if (train_count < 1) throw std::invalid_argument("validation split leaves no training data");
    std::vector<std::int64_t> train_idx(order.begin(), order.begin() + train_count);
    std::vector<std::int64_t> val_idx(order.begin() + train_count, order.end());

    OptimizerState opt = OptimizerState::zeros_like(result.model);
    Gradients grads;
    result.train_loss.reserve(size_t(cfg.epochs));
    result.val_loss.reserve(size_t(cfg.epochs));

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(train_idx.begin(), train_idx.end(), shuffle_rng);
        double epoch_loss = 0.0;
        std::int64_t batches = 0;
        for (std::int64_t start = 0; start < train_count; start += cfg.batch_size) {
            const std::int64_t len = std::min<std::int64_t>(cfg.batch_size, train_count - start);
            const double loss = backprop(
                result.model, dataset,
                std::span<const std::int64_t>(train_idx.data() + start, size_t(len)), cfg, grads);
            if (!std::isfinite(loss))
                throw std::runtime_error("training loss is no longer finite at epoch " +
                                         std::to_string(epoch + 1) +
                                         "; lower the learning rate");
            rmsprop_step(result.model, opt, grads, cfg);
            epoch_loss += loss;
            ++batches;
        }
        result.train_loss.push_back(epoch_loss / double(batches));
        result.val_loss.push_back(
            val_idx.empty() ? 0.0 : batch_loss(result.model, dataset, val_idx, cfg));
    }
    return result;
}

}  // namespace qtrack
