#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace qtrack {

struct ModelMetadata {
    std::uint64_t seed = 0;
    int epochs = 0;
    std::int64_t dataset_size = 0;
    double learning_rate = 0.0;
    std::string note;
};

// Plain fully connected network. Hidden layers use a leaky rectifier, the
// final layer is affine. Weights are row-major (output x input).
struct MLPModel {
    std::vector<int> layer_sizes;
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> biases;
    double leaky_slope = 0.1;
    ModelMetadata metadata;

    int input_size() const { return layer_sizes.front(); }
    int output_size() const { return layer_sizes.back(); }
    std::size_t parameter_count() const;
    void validate() const;  // shape consistency; throws std::invalid_argument
};

std::vector<double> mlp_forward(const MLPModel& model, std::span<const double> input);

// Reusable buffers for repeated forward/backward passes. activations[0] is
// the input copy; activations.back() is the network output.
struct MLPWorkspace {
    std::vector<std::vector<double>> activations;
};

void mlp_forward_into(const MLPModel& model, std::span<const double> input, MLPWorkspace& ws);

// Model files are JSON with a format tag and version so stale files fail
// loudly. Round-trips are exact.
void save_model(const MLPModel& model, const std::string& path);
MLPModel load_model(const std::string& path);

}  // namespace qtrack
