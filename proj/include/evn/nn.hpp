#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "evn/rng.hpp"

namespace evn {

enum class Activation { relu, tanh, sigmoid, softmax, identity };

Activation parse_activation(const std::string& name);
std::string to_string(Activation a);

// Layer recipe in the dash-separated style of the ensemble spec files:
// layer_sizes runs input..output, and dropout_rates / activations line up
// with it (entry i applies after layer i's activation; the entry for the
// input layer acts on the raw feature vector).
struct NetConfig {
  std::string name;
  std::vector<int> layer_sizes;
  std::vector<double> dropout_rates;
  std::vector<Activation> activations;
  int epochs = 10;
  std::uint64_t seed = 0;
  double learning_rate = 0.01;
  int batch_size = 32;
};

void validate_config(const NetConfig& c);  // throws UsageError

// Default activation stack: relu on the input layer, tanh on hidden
// layers, softmax (or sigmoid for 1-wide output) on the output layer.
std::vector<Activation> default_activations(std::size_t n_layers, int output_width);

struct DenseNet {
  std::vector<Eigen::MatrixXd> weights;  // layer l: sizes[l+1] x sizes[l]
  std::vector<Eigen::VectorXd> biases;
  NetConfig config;

  int input_size() const { return config.layer_sizes.front(); }
  int output_size() const { return config.layer_sizes.back(); }
};

DenseNet init_net(const NetConfig& c, Rng& rng);

enum class Mode { train, infer };

// Post-activation values per layer, after dropout when applied.
struct ForwardCache {
  std::vector<Eigen::VectorXd> activations;
};

Eigen::VectorXd forward(const DenseNet& net, const Eigen::VectorXd& x, Mode mode,
                        Rng* rng = nullptr, ForwardCache* cache = nullptr);

struct Sample {
  Eigen::VectorXd x;
  int label = 0;
};

struct Gradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
};

// Analytic gradient of the mean loss over the batch, dropout disabled.
// Loss is categorical cross-entropy for softmax outputs and binary
// cross-entropy for 1-wide sigmoid outputs.
Gradients gradient(const DenseNet& net, const std::vector<Sample>& batch);

// Mean loss over the batch, dropout disabled (finite-difference oracle hook).
double batch_loss(const DenseNet& net, const std::vector<Sample>& batch);

using EpochLogger = std::function<void(int epoch, double mean_loss)>;

DenseNet train(const NetConfig& config, const std::vector<Sample>& dataset, int n_classes,
               const EpochLogger& log = nullptr);

std::string serialize(const DenseNet& net);
DenseNet deserialize(const std::string& bytes);  // throws DataError

// Shared binary container (magic, version, shape headers, row-major
// little-endian float64 payload, trailing config text block).
std::string pack_model(const std::vector<std::pair<const Eigen::MatrixXd*, const Eigen::VectorXd*>>& layers,
                       const std::string& config_text);
void unpack_model(const std::string& bytes,
                  std::vector<std::pair<Eigen::MatrixXd, Eigen::VectorXd>>& layers,
                  std::string& config_text);

std::string config_to_text(const NetConfig& c, const std::string& kind);
NetConfig config_from_text(const std::string& text, std::string* kind_out = nullptr);

}  // namespace evn
