#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "qtrack/nn.hpp"
#include "qtrack/receiver.hpp"

namespace qtrack {

struct TrainingSample {
    std::vector<double> input;    // flattened histogram + LO intensity
    double target_phase = 0.0;
    double target_intensity = 0.0;
    double weight = 0.0;
};

struct TrainConfig {
    // optimizer
    double learning_rate = 50e-6;
    double momentum = 0.8;
    double rms_decay = 0.9;
    double epsilon = 1e-8;
    int epochs = 2000;
    int batch_size = 256;
    // loss scales; intensity errors are an order of magnitude larger than
    // phase errors, so they are downweighted to balance the two outputs
    double lambda_phase = 1.0;
    double lambda_intensity = 1.0 / 25.0;
    // sampling distributions for generated data
    double intensity_min = 0.05;
    double intensity_max = 25.0;
    double phase_sigma = 0.25;  // std dev of the true phase offsets
    int experiments_min = 2;
    int experiments_max = 200;
    std::int64_t dataset_size = 500000;
    double validation_fraction = 0.1;

    void validate() const;
};

// One labelled example: a fixed (intensity, phase) pair observed through a
// batch of discriminations at an independently drawn LO intensity.
TrainingSample generate_sample(const PhysicsConfig& physics, const ReceiverConfig& receiver,
                               const TrainConfig& cfg, std::mt19937_64& rng);

// Dataset generation parallelises over samples; each sample runs on its own
// derived stream so the result is independent of thread count.
std::vector<TrainingSample> generate_dataset(const PhysicsConfig& physics,
                                             const ReceiverConfig& receiver,
                                             const TrainConfig& cfg, std::int64_t count,
                                             std::uint64_t seed, bool parallel = true);

MLPModel xavier_init(const std::vector<int>& layer_sizes, std::uint64_t seed);

// Weighted two-component squared error averaged with the sample weights.
double weighted_mse(std::span<const double> predicted_phase,
                    std::span<const double> predicted_intensity,
                    std::span<const double> target_phase,
                    std::span<const double> target_intensity,
                    std::span<const double> weights, double lambda_phase,
                    double lambda_intensity);

struct Gradients {
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> biases;

    static Gradients zeros_like(const MLPModel& model);
    void add(const Gradients& other);
    void clear();
};

// Batch loss and its exact gradient. Blocks of samples are processed
// independently and reduced in index order, so the result does not depend on
// the number of threads.
double backprop(const MLPModel& model, const std::vector<TrainingSample>& data,
                std::span<const std::int64_t> batch, const TrainConfig& cfg, Gradients& out);

double batch_loss(const MLPModel& model, const std::vector<TrainingSample>& data,
                  std::span<const std::int64_t> batch, const TrainConfig& cfg);

// Root-mean-square propagation with momentum on the normalised gradient.
struct OptimizerState {
    std::vector<std::vector<double>> ms_weights, ms_biases;      // running mean squares
    std::vector<std::vector<double>> mom_weights, mom_biases;    // momentum buffers

    static OptimizerState zeros_like(const MLPModel& model);
};

void rmsprop_step(MLPModel& model, OptimizerState& state, const Gradients& grads,
                  const TrainConfig& cfg);

struct TrainResult {
    MLPModel model;
    std::vector<double> train_loss;  // one entry per epoch
    std::vector<double> val_loss;
};

// Full training loop: deterministic split, per-epoch reshuffle, minibatch
// updates. Throws std::runtime_error if the loss leaves the reals.
TrainResult train(const std::vector<TrainingSample>& dataset, const TrainConfig& cfg,
                  std::uint64_t seed);

}  // namespace qtrack
