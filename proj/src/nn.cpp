#include "evn/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include "evn/error.hpp"
#include "evn/util.hpp"

namespace evn {

Activation parse_activation(const std::string& name) {
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  if (name == "sigmoid") return Activation::sigmoid;
  if (name == "softmax") return Activation::softmax;
  if (name == "identity") return Activation::identity;
  throw UsageError("unknown activation '" + name + "'");
}

std::string to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::sigmoid: return "sigmoid";
    case Activation::softmax: return "softmax";
    case Activation::identity: return "identity";
  }
  return "?";
}

void validate_config(const NetConfig& c) {
  if (c.layer_sizes.size() < 2) throw UsageError("net config needs at least input and output layers");
  for (int s : c.layer_sizes)
    if (s <= 0) throw UsageError("layer sizes must be positive");
  if (c.dropout_rates.size() != c.layer_sizes.size())
    throw UsageError("dropout list length must match layer list length");
  for (double d : c.dropout_rates)
    if (d < 0.0 || d >= 1.0) throw UsageError("dropout rates must lie in [0,1)");
  if (c.dropout_rates.back() != 0.0) throw UsageError("dropout on the output layer must be 0");
  if (c.activations.size() != c.layer_sizes.size())
    throw UsageError("activation list length must match layer list length");
  for (std::size_t i = 0; i + 1 < c.activations.size(); ++i)
    if (c.activations[i] == Activation::softmax)
      throw UsageError("softmax is only allowed on the output layer");
  if (c.epochs <= 0) throw UsageError("epochs must be positive");
  if (c.learning_rate < 0.0) throw UsageError("learning rate must not be negative");
  if (c.batch_size <= 0) throw UsageError("batch size must be positive");
}

std::vector<Activation> default_activations(std::size_t n_layers, int output_width) {
  std::vector<Activation> acts(n_layers, Activation::tanh);
  acts.front() = Activation::relu;
  acts.back() = output_width == 1 ? Activation::sigmoid : Activation::softmax;
  return acts;
}

DenseNet init_net(const NetConfig& c, Rng& rng) {
  validate_config(c);
  DenseNet net;
  net.config = c;
  const std::size_t nw = c.layer_sizes.size() - 1;
  net.weights.reserve(nw);
  net.biases.reserve(nw);
  for (std::size_t l = 0; l < nw; ++l) {
    int fan_in = c.layer_sizes[l];
    int fan_out = c.layer_sizes[l + 1];
    double limit = std::sqrt(6.0 / (fan_in + fan_out));
    Eigen::MatrixXd w(fan_out, fan_in);
    for (int r = 0; r < fan_out; ++r)
      for (int col = 0; col < fan_in; ++col) w(r, col) = uniform(rng, -limit, limit);
    net.weights.push_back(std::move(w));
    net.biases.push_back(Eigen::VectorXd::Zero(fan_out));
  }
  return net;
}

namespace {

void apply_activation(Activation act, Eigen::VectorXd& v) {
  switch (act) {
    case Activation::relu:
      v = v.cwiseMax(0.0);
      break;
    case Activation::tanh:
      v = v.array().tanh();
      break;
    case Activation::sigmoid:
      v = (1.0 / (1.0 + (-v.array()).exp()));
      break;
    case Activation::softmax: {
      double m = v.maxCoeff();
      Eigen::ArrayXd e = (v.array() - m).exp();
      v = e / e.sum();
      break;
    }
    case Activation::identity:
      break;
  }
}

void apply_dropout(Eigen::VectorXd& v, double rate, Rng& rng) {
  if (rate <= 0.0) return;
  double keep = 1.0 - rate;
  for (Eigen::Index i = 0; i < v.size(); ++i)
    v[i] = uniform01(rng) < rate ? 0.0 : v[i] / keep;
}

struct BatchState {
  std::vector<Eigen::MatrixXd> pre;   // post-activation before dropout, per layer
  std::vector<Eigen::MatrixXd> post;  // after dropout
};

void apply_activation_cols(Activation act, Eigen::MatrixXd& m) {
  switch (act) {
    case Activation::relu:
      m = m.cwiseMax(0.0);
      break;
    case Activation::tanh:
      m = m.array().tanh();
      break;
    case Activation::sigmoid:
      m = (1.0 / (1.0 + (-m.array()).exp()));
      break;
    case Activation::softmax:
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        Eigen::VectorXd col = m.col(c);
        apply_activation(Activation::softmax, col);
        m.col(c) = col;
      }
      break;
    case Activation::identity:
      break;
  }
}

// Forward over a batch laid out as columns; masks hold the inverted
// dropout factors (0 or 1/keep) and are empty in infer mode.
void batch_forward(const DenseNet& net, const Eigen::MatrixXd& x,
                   const std::vector<Eigen::MatrixXd>& masks, BatchState& state) {
  const auto& c = net.config;
  const std::size_t nl = c.layer_sizes.size();
  state.pre.resize(nl);
  state.post.resize(nl);
  Eigen::MatrixXd a = x;
  apply_activation_cols(c.activations[0], a);
  state.pre[0] = a;
  if (!masks.empty() && masks[0].size() > 0) a = a.cwiseProduct(masks[0]);
  state.post[0] = a;
  for (std::size_t l = 1; l < nl; ++l) {
    Eigen::MatrixXd z = net.weights[l - 1] * a;
    z.colwise() += net.biases[l - 1];
    apply_activation_cols(c.activations[l], z);
    state.pre[l] = z;
    if (!masks.empty() && masks[l].size() > 0) z = z.cwiseProduct(masks[l]);
    state.post[l] = z;
    a = state.post[l];
  }
}

void check_train_output(const NetConfig& c, int n_classes) {
  Activation out = c.activations.back();
  int width = c.layer_sizes.back();
  if (out == Activation::softmax) {
    if (width != n_classes)
      throw UsageError("output width " + std::to_string(width) + " does not match " +
                       std::to_string(n_classes) + " classes");
  } else if (out == Activation::sigmoid && width == 1) {
    if (n_classes != 2) throw UsageError("1-wide sigmoid output expects 2 classes");
  } else {
    throw UsageError("training requires a softmax output or a 1-wide sigmoid output");
  }
}

Eigen::MatrixXd target_matrix(const NetConfig& c, const std::vector<const Sample*>& batch,
                              int n_classes) {
  int width = c.layer_sizes.back();
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(width, static_cast<Eigen::Index>(batch.size()));
  for (std::size_t i = 0; i < batch.size(); ++i) {
    int label = batch[i]->label;
    if (label < 0 || label >= n_classes)
      throw UsageError("label " + std::to_string(label) + " out of range");
    if (width == 1)
      y(0, static_cast<Eigen::Index>(i)) = label;
    else
      y(label, static_cast<Eigen::Index>(i)) = 1.0;
  }
  return y;
}

// Backprop of mean cross-entropy through the cached batch state.
Gradients batch_backward(const DenseNet& net, const BatchState& state, const Eigen::MatrixXd& x,
                         const Eigen::MatrixXd& y, const std::vector<Eigen::MatrixXd>& masks) {
  (void)x;
  const auto& c = net.config;
  const std::size_t nl = c.layer_sizes.size();
  const double inv_b = 1.0 / static_cast<double>(y.cols());

  Gradients g;
  g.weights.resize(nl - 1);
  g.biases.resize(nl - 1);

  // Softmax+CE and sigmoid+BCE share the same output delta.
  Eigen::MatrixXd delta = (state.post[nl - 1] - y) * inv_b;
  for (std::size_t l = nl - 1; l >= 1; --l) {
    g.weights[l - 1] = delta * state.post[l - 1].transpose();
    g.biases[l - 1] = delta.rowwise().sum();
    if (l == 1) break;
    Eigen::MatrixXd grad_post = net.weights[l - 1].transpose() * delta;
    if (!masks.empty() && masks[l - 1].size() > 0) grad_post = grad_post.cwiseProduct(masks[l - 1]);
    Eigen::ArrayXXd deriv;
    switch (c.activations[l - 1]) {
      case Activation::relu: deriv = (state.pre[l - 1].array() > 0.0).cast<double>(); break;
      case Activation::tanh: deriv = 1.0 - state.pre[l - 1].array().square(); break;
      case Activation::sigmoid:
        deriv = state.pre[l - 1].array() * (1.0 - state.pre[l - 1].array());
        break;
      case Activation::identity: deriv = Eigen::ArrayXXd::Ones(grad_post.rows(), grad_post.cols()); break;
      case Activation::softmax: throw UsageError("softmax is only allowed on the output layer");
    }
    delta = grad_post.array() * deriv;
  }
  return g;
}

}  // namespace

Eigen::VectorXd forward(const DenseNet& net, const Eigen::VectorXd& x, Mode mode, Rng* rng,
                        ForwardCache* cache) {
  const auto& c = net.config;
  if (x.size() != c.layer_sizes.front())
    throw UsageError("input has length " + std::to_string(x.size()) + ", net expects " +
                     std::to_string(c.layer_sizes.front()));
  bool drop = mode == Mode::train;
  if (drop) {
    bool any = std::any_of(c.dropout_rates.begin(), c.dropout_rates.end(),
                           [](double d) { return d > 0.0; });
    if (any && rng == nullptr) throw UsageError("train-mode forward with dropout needs an rng");
  }
  if (cache) cache->activations.clear();

  Eigen::VectorXd a = x;
  apply_activation(c.activations[0], a);
  if (drop) apply_dropout(a, c.dropout_rates[0], *rng);
  if (cache) cache->activations.push_back(a);
  for (std::size_t l = 1; l < c.layer_sizes.size(); ++l) {
    Eigen::VectorXd z = net.weights[l - 1] * a + net.biases[l - 1];
    apply_activation(c.activations[l], z);
    if (drop) apply_dropout(z, c.dropout_rates[l], *rng);
    if (cache) cache->activations.push_back(z);
    a = std::move(z);
  }
  return a;
}

Gradients gradient(const DenseNet& net, const std::vector<Sample>& batch) {
  if (batch.empty()) throw UsageError("gradient of an empty batch");
  int n_classes = net.config.layer_sizes.back() == 1 ? 2 : net.config.layer_sizes.back();
  check_train_output(net.config, n_classes);
  std::vector<const Sample*> ptrs;
  ptrs.reserve(batch.size());
  for (const auto& s : batch) ptrs.push_back(&s);

  Eigen::MatrixXd x(net.input_size(), static_cast<Eigen::Index>(batch.size()));
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (batch[i].x.size() != net.input_size()) throw UsageError("sample dimension mismatch");
    x.col(static_cast<Eigen::Index>(i)) = batch[i].x;
  }
  Eigen::MatrixXd y = target_matrix(net.config, ptrs, n_classes);
  BatchState state;
  batch_forward(net, x, {}, state);
  return batch_backward(net, state, x, y, {});
}

double batch_loss(const DenseNet& net, const std::vector<Sample>& batch) {
  if (batch.empty()) throw UsageError("loss of an empty batch");
  const double eps = 1e-12;
  double total = 0.0;
  for (const Sample& s : batch) {
    Eigen::VectorXd out = forward(net, s.x, Mode::infer);
    if (net.output_size() == 1) {
      double p = std::min(std::max(out[0], eps), 1.0 - eps);
      total += s.label ? -std::log(p) : -std::log(1.0 - p);
    } else {
      double p = std::max(out[s.label], eps);
      total += -std::log(p);
    }
  }
  return total / static_cast<double>(batch.size());
}

DenseNet train(const NetConfig& config, const std::vector<Sample>& dataset, int n_classes,
               const EpochLogger& log) {
  validate_config(config);
  check_train_output(config, n_classes);
  if (dataset.empty()) throw UsageError("training dataset is empty");
  for (const Sample& s : dataset) {
    if (s.x.size() != config.layer_sizes.front()) throw UsageError("sample dimension mismatch");
    if (s.label < 0 || s.label >= n_classes)
      throw UsageError("label " + std::to_string(s.label) + " out of range");
  }

  Rng rng(config.seed);
  DenseNet net = init_net(config, rng);
  const std::size_t n = dataset.size();
  const std::size_t nl = config.layer_sizes.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    shuffle(order, rng);
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      std::size_t bsz = std::min<std::size_t>(config.batch_size, n - start);
      Eigen::MatrixXd x(config.layer_sizes.front(), static_cast<Eigen::Index>(bsz));
      std::vector<const Sample*> ptrs(bsz);
      for (std::size_t i = 0; i < bsz; ++i) {
        ptrs[i] = &dataset[order[start + i]];
        x.col(static_cast<Eigen::Index>(i)) = ptrs[i]->x;
      }
      Eigen::MatrixXd y = target_matrix(config, ptrs, n_classes);

      // Inverted-dropout mask factors, sampled column (sample) outer.
      std::vector<Eigen::MatrixXd> masks(nl);
      for (std::size_t l = 0; l < nl; ++l) {
        double rate = config.dropout_rates[l];
        if (rate <= 0.0) continue;
        double keep = 1.0 - rate;
        masks[l].resize(config.layer_sizes[l], static_cast<Eigen::Index>(bsz));
        for (std::size_t cix = 0; cix < bsz; ++cix)
          for (int r = 0; r < config.layer_sizes[l]; ++r)
            masks[l](r, static_cast<Eigen::Index>(cix)) = uniform01(rng) < rate ? 0.0 : 1.0 / keep;
      }

      BatchState state;
      batch_forward(net, x, masks, state);
      Gradients g = batch_backward(net, state, x, y, masks);
      for (std::size_t l = 0; l + 1 < nl; ++l) {
        net.weights[l] -= config.learning_rate * g.weights[l];
        net.biases[l] -= config.learning_rate * g.biases[l];
      }

      // Batch loss from the (dropped-out) forward pass, for logging only.
      const Eigen::MatrixXd& out = state.post[nl - 1];
      const double eps = 1e-12;
      double loss = 0.0;
      for (std::size_t i = 0; i < bsz; ++i) {
        if (config.layer_sizes.back() == 1) {
          double p = std::min(std::max(out(0, static_cast<Eigen::Index>(i)), eps), 1.0 - eps);
          loss += ptrs[i]->label ? -std::log(p) : -std::log(1.0 - p);
        } else {
          loss += -std::log(std::max(out(ptrs[i]->label, static_cast<Eigen::Index>(i)), eps));
        }
      }
      epoch_loss += loss / static_cast<double>(bsz);
      ++batches;
    }
    if (log) log(epoch, epoch_loss / static_cast<double>(batches));
  }
  return net;
}

static constexpr char kMagic[8] = {'E', 'V', 'N', 'M', 'O', 'D', 'L', '1'};
static constexpr std::uint32_t kFormatVersion = 1;

std::string pack_model(const std::vector<std::pair<const Eigen::MatrixXd*, const Eigen::VectorXd*>>& layers,
                       const std::string& config_text) {
  std::string out;
  out.append(kMagic, sizeof(kMagic));
  put_u32(out, kFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(layers.size()));
  for (const auto& [w, b] : layers) {
    put_u32(out, static_cast<std::uint32_t>(w->rows()));
    put_u32(out, static_cast<std::uint32_t>(w->cols()));
  }
  for (const auto& [w, b] : layers) {
    for (Eigen::Index r = 0; r < w->rows(); ++r)
      for (Eigen::Index c = 0; c < w->cols(); ++c) put_f64(out, (*w)(r, c));
    for (Eigen::Index r = 0; r < b->size(); ++r) put_f64(out, (*b)[r]);
  }
  put_u32(out, static_cast<std::uint32_t>(config_text.size()));
  out += config_text;
  return out;
}

void unpack_model(const std::string& bytes,
                  std::vector<std::pair<Eigen::MatrixXd, Eigen::VectorXd>>& layers,
                  std::string& config_text) {
  if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0)
    throw DataError("model file: bad magic");
  std::size_t pos = sizeof(kMagic);
  std::uint32_t version = 0, n_layers = 0;
  if (!get_u32(bytes, pos, version) || version != kFormatVersion)
    throw DataError("model file: unsupported format version");
  if (!get_u32(bytes, pos, n_layers)) throw DataError("model file: truncated header");
  std::vector<std::pair<std::uint32_t, std::uint32_t>> shapes(n_layers);
  for (auto& [rows, cols] : shapes)
    if (!get_u32(bytes, pos, rows) || !get_u32(bytes, pos, cols))
      throw DataError("model file: truncated shape header");
  layers.clear();
  for (const auto& [rows, cols] : shapes) {
    Eigen::MatrixXd w(rows, cols);
    for (std::uint32_t r = 0; r < rows; ++r)
      for (std::uint32_t c = 0; c < cols; ++c) {
        double v;
        if (!get_f64(bytes, pos, v)) throw DataError("model file: truncated weight payload");
        w(r, c) = v;
      }
    Eigen::VectorXd b(rows);
    for (std::uint32_t r = 0; r < rows; ++r) {
      double v;
      if (!get_f64(bytes, pos, v)) throw DataError("model file: truncated bias payload");
      b[r] = v;
    }
    layers.emplace_back(std::move(w), std::move(b));
  }
  std::uint32_t config_len = 0;
  if (!get_u32(bytes, pos, config_len) || pos + config_len != bytes.size())
    throw DataError("model file: truncated config block");
  config_text = bytes.substr(pos, config_len);
}

namespace {

std::string join_dashes(const std::vector<std::string>& parts) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += '-';
    out += parts[i];
  }
  return out;
}

}  // namespace

std::string config_to_text(const NetConfig& c, const std::string& kind) {
  std::vector<std::string> layers, drops, acts;
  for (int s : c.layer_sizes) layers.push_back(std::to_string(s));
  for (double d : c.dropout_rates) drops.push_back(format_f64(d));
  for (Activation a : c.activations) acts.push_back(to_string(a));
  std::string out;
  out += "kind=" + kind + "\n";
  out += "name=" + c.name + "\n";
  out += "layers=" + join_dashes(layers) + "\n";
  out += "dropout=" + join_dashes(drops) + "\n";
  out += "activations=" + join_dashes(acts) + "\n";
  out += "epochs=" + std::to_string(c.epochs) + "\n";
  out += "seed=" + std::to_string(c.seed) + "\n";
  out += "learning_rate=" + format_f64(c.learning_rate) + "\n";
  out += "batch_size=" + std::to_string(c.batch_size) + "\n";
  return out;
}

NetConfig config_from_text(const std::string& text, std::string* kind_out) {
  NetConfig c;
  std::string kind;
  for (std::string_view line : split(text, '\n')) {
    line = trim(line);
    if (line.empty()) continue;
    std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) throw DataError("model config block: bad line '" + std::string(line) + "'");
    std::string key(line.substr(0, eq));
    std::string value(line.substr(eq + 1));
    if (key == "kind") {
      kind = value;
    } else if (key == "name") {
      c.name = value;
    } else if (key == "layers") {
      c.layer_sizes.clear();
      for (auto part : split(value, '-')) {
        std::int64_t v;
        if (!parse_i64(part, v)) throw DataError("model config block: bad layer size");
        c.layer_sizes.push_back(static_cast<int>(v));
      }
    } else if (key == "dropout") {
      c.dropout_rates.clear();
      for (auto part : split(value, '-')) {
        double v;
        if (!parse_f64(part, v)) throw DataError("model config block: bad dropout rate");
        c.dropout_rates.push_back(v);
      }
    } else if (key == "activations") {
      c.activations.clear();
      for (auto part : split(value, '-')) c.activations.push_back(parse_activation(std::string(part)));
    } else if (key == "epochs") {
      std::int64_t v;
      if (!parse_i64(value, v)) throw DataError("model config block: bad epochs");
      c.epochs = static_cast<int>(v);
    } else if (key == "seed") {
      std::uint64_t v;
      if (!parse_u64(value, v)) throw DataError("model config block: bad seed");
      c.seed = v;
    } else if (key == "learning_rate") {
      if (!parse_f64(value, c.learning_rate)) throw DataError("model config block: bad learning rate");
    } else if (key == "batch_size") {
      std::int64_t v;
      if (!parse_i64(value, v)) throw DataError("model config block: bad batch size");
      c.batch_size = static_cast<int>(v);
    } else {
      throw DataError("model config block: unknown key '" + key + "'");
    }
  }
  if (kind_out) *kind_out = kind;
  return c;
}

std::string serialize(const DenseNet& net) {
  std::vector<std::pair<const Eigen::MatrixXd*, const Eigen::VectorXd*>> layers;
  for (std::size_t l = 0; l < net.weights.size(); ++l)
    layers.emplace_back(&net.weights[l], &net.biases[l]);
  return pack_model(layers, config_to_text(net.config, "dense"));
}

DenseNet deserialize(const std::string& bytes) {
  std::vector<std::pair<Eigen::MatrixXd, Eigen::VectorXd>> layers;
  std::string config_text;
  unpack_model(bytes, layers, config_text);
  std::string kind;
  NetConfig c = config_from_text(config_text, &kind);
  if (kind != "dense") throw DataError("model file: expected a dense net, got kind '" + kind + "'");
  if (layers.size() + 1 != c.layer_sizes.size()) throw DataError("model file: layer count mismatch");
  DenseNet net;
  net.config = c;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (layers[l].first.rows() != c.layer_sizes[l + 1] || layers[l].first.cols() != c.layer_sizes[l])
      throw DataError("model file: layer shape mismatch");
    net.weights.push_back(std::move(layers[l].first));
    net.biases.push_back(std::move(layers[l].second));
  }
  return net;
}

}  // namespace evn
