#include "qtrack/nn.hpp"

#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace qtrack {

std::size_t MLPModel::parameter_count() const {
    std::size_t n = 0;
    for (size_t l = 0; l + 1 < layer_sizes.size(); ++l)
        n += size_t(layer_sizes[l]) * size_t(layer_sizes[l + 1]) + size_t(layer_sizes[l + 1]);
    return n;
}

void MLPModel::validate() const {
    if (layer_sizes.size() < 2) throw std::invalid_argument("model needs at least two layers");
    for (int s : layer_sizes)
        if (s < 1) throw std::invalid_argument("model layer sizes must be >= 1");
    if (weights.size() != layer_sizes.size() - 1 || biases.size() != layer_sizes.size() - 1)
        throw std::invalid_argument("model weight/bias count does not match layer count");
    for (size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
        if (weights[l].size() != size_t(layer_sizes[l]) * size_t(layer_sizes[l + 1]))
            throw std::invalid_argument("model weight matrix shape mismatch");
        if (biases[l].size() != size_t(layer_sizes[l + 1]))
            throw std::invalid_argument("model bias vector shape mismatch");
    }
    if (!(leaky_slope >= 0.0)) throw std::invalid_argument("model activation slope must be >= 0");
}

void mlp_forward_into(const MLPModel& model, std::span<const double> input, MLPWorkspace& ws) {
    const size_t layers = model.layer_sizes.size();
    if (input.size() != size_t(model.input_size()))
        throw std::invalid_argument("model input size mismatch");
    ws.activations.resize(layers);
    ws.activations[0].assign(input.begin(), input.end());
    for (size_t l = 0; l + 1 < layers; ++l) {
        const int in = model.layer_sizes[l];
        const int out = model.layer_sizes[l + 1];
        const std::vector<double>& a = ws.activations[l];
        std::vector<double>& z = ws.activations[l + 1];
        z.assign(size_t(out), 0.0);
        const double* w = model.weights[l].data();
        for (int o = 0; o < out; ++o) {
            double acc = model.biases[l][size_t(o)];
            const double* row = w + size_t(o) * size_t(in);
            for (int i = 0; i < in; ++i) acc += row[i] * a[size_t(i)];
            z[size_t(o)] = acc;
        }
        if (l + 2 < layers) {  // hidden layers only
            for (double& v : z)
                if (v < 0.0) v *= model.leaky_slope;
        }
    }
}

std::vector<double> mlp_forward(const MLPModel& model, std::span<const double> input) {
    MLPWorkspace ws;
    mlp_forward_into(model, input, ws);
    return ws.activations.back();
}

void save_model(const MLPModel& model, const std::string& path) {
    model.validate();
    nlohmann::json j;
    j["format"] = "qtrack-mlp";
    j["version"] = 1;
    j["layer_sizes"] = model.layer_sizes;
    j["leaky_slope"] = model.leaky_slope;
    j["weights"] = model.weights;
    j["biases"] = model.biases;
    j["metadata"] = {{"seed", model.metadata.seed},
                     {"epochs", model.metadata.epochs},
                     {"dataset_size", model.metadata.dataset_size},
                     {"learning_rate", model.metadata.learning_rate},
                     {"note", model.metadata.note}};
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open model file for writing: " + path);
    out << j.dump(1) << '\n';
    if (!out) throw std::runtime_error("failed writing model file: " + path);
}

MLPModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open model file: " + path);
    nlohmann::json j = nlohmann::json::parse(in);  // parse errors carry the byte offset
    if (j.value("format", "") != std::string("qtrack-mlp"))
        throw std::runtime_error("not a model file: " + path);
    if (j.value("version", 0) != 1)
        throw std::runtime_error("unsupported model file version in " + path);
    MLPModel model;
    model.layer_sizes = j.at("layer_sizes").get<std::vector<int>>();
    model.leaky_slope = j.at("leaky_slope").get<double>();
    model.weights = j.at("weights").get<std::vector<std::vector<double>>>();
    model.biases = j.at("biases").get<std::vector<std::vector<double>>>();
    const nlohmann::json& meta = j.at("metadata");
    model.metadata.seed = meta.at("seed").get<std::uint64_t>();
    model.metadata.epochs = meta.at("epochs").get<int>();
    model.metadata.dataset_size = meta.at("dataset_size").get<std::int64_t>();
    model.metadata.learning_rate = meta.at("learning_rate").get<double>();
    model.metadata.note = meta.at("note").get<std::string>();
    model.validate();
    return model;
}

}  // namespace qtrack
