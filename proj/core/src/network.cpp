#include "cfvn/network.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include "cfvn/binary_io.hpp"
#include "cfvn/error.hpp"

namespace cfvn {
namespace {

constexpr std::string_view kMagic = "CFVN";
constexpr std::uint16_t kVersion = 1;
constexpr double kInitialSlope = 0.25;

template <typename Layer>
std::vector<Layer> zeros_like(const std::vector<Layer>& layers) {
  std::vector<Layer> out;
  for (const auto& l : layers) {
    out.push_back({decltype(l.w)::Zero(l.w.rows(), l.w.cols()), decltype(l.b)::Zero(l.b.size()),
                   decltype(l.slope)::Zero(l.slope.size())});
  }
  return out;
}

// Column-per-example matrices built from an encoded dataset.
struct Columns {
  Eigen::MatrixXf x, y, mask;
};

Columns to_columns(const EncodedDataset& data) {
  const auto n = static_cast<Eigen::Index>(data.examples.size());
  const auto in = static_cast<Eigen::Index>(data.input_dim());
  const auto out = static_cast<Eigen::Index>(data.target_dim());
  Columns c{Eigen::MatrixXf(in, n), Eigen::MatrixXf(out, n), Eigen::MatrixXf(out, n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& ex = data.examples[static_cast<std::size_t>(i)];
    if (static_cast<Eigen::Index>(ex.inputs.size()) != in || static_cast<Eigen::Index>(ex.targets.size()) != out) {
      throw InvalidInput("encoded example has the wrong shape");
    }
    c.x.col(i) = Eigen::Map<const Eigen::VectorXf>(ex.inputs.data(), in);
    c.y.col(i) = Eigen::Map<const Eigen::VectorXf>(ex.targets.data(), out);
    for (Eigen::Index t = 0; t < out; ++t) c.mask(t, i) = ex.mask[static_cast<std::size_t>(t)] ? 1.0f : 0.0f;
  }
  return c;
}

}  // namespace

MlpConfig MlpConfig::desk(std::size_t input_dim, std::size_t output_dim) {
  return {input_dim, output_dim, {200, 200, 200}};
}

MlpConfig MlpConfig::paper(std::size_t input_dim, std::size_t output_dim) {
  return {input_dim, output_dim, std::vector<std::size_t>(7, 500)};
}

void MlpConfig::validate() const {
  if (input_dim < 1 || output_dim < 1) throw InvalidInput("network dimensions must be at least 1");
  for (std::size_t h : hidden) {
    if (h < 1) throw InvalidInput("hidden layer widths must be at least 1");
  }
  if (zero_sum && (output_dim % 2 != 0 || input_dim < output_dim)) {
    throw InvalidInput("the zero-sum head needs an even output and both ranges among the inputs");
  }
}

void TrainConfig::validate() const {
  if (epochs < 1) throw InvalidInput("epochs must be at least 1");
  if (batch < 1) throw InvalidInput("batch size must be at least 1");
  if (!(learning_rate > 0.0) || !(huber_delta > 0.0)) throw InvalidInput("learning rate and delta must be positive");
}

template <typename Scalar>
Mlp<Scalar>::Mlp(const MlpConfig& config) : config_(config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  std::size_t fan_in = config.input_dim;
  std::vector<std::size_t> widths = config.hidden;
  widths.push_back(config.output_dim);
  for (std::size_t l = 0; l < widths.size(); ++l) {
    const bool hidden = l + 1 < widths.size();
    // He-style bound for PReLU units at the initial slope, LeCun for the output
    const double gain = hidden ? 6.0 / (1.0 + kInitialSlope * kInitialSlope) : 3.0;
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const double bound = std::sqrt(gain / static_cast<double>(fan_in));
    Layer layer;
    layer.w.resize(static_cast<Eigen::Index>(widths[l]), static_cast<Eigen::Index>(fan_in));
    for (Eigen::Index j = 0; j < layer.w.cols(); ++j) {
      for (Eigen::Index i = 0; i < layer.w.rows(); ++i) layer.w(i, j) = static_cast<Scalar>(bound * u(rng));
    }
    layer.b = Vector::Zero(static_cast<Eigen::Index>(widths[l]));
    if (hidden)
      layer.slope = Vector::Constant(static_cast<Eigen::Index>(widths[l]), static_cast<Scalar>(kInitialSlope));
    layers_.push_back(std::move(layer));
    fan_in = widths[l];
  }
}

template <typename Scalar>
std::size_t Mlp<Scalar>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += static_cast<std::size_t>(l.w.size() + l.b.size() + l.slope.size());
  return n;
}

template <typename Scalar>
bool Mlp<Scalar>::all_finite() const {
  return std::all_of(layers_.begin(), layers_.end(),
                     [](const Layer& l) { return l.w.allFinite() && l.b.allFinite() && l.slope.allFinite(); });
}

template <typename Scalar>
typename Mlp<Scalar>::Matrix Mlp<Scalar>::forward_raw(const Matrix& x) const {
  if (static_cast<std::size_t>(x.rows()) != config_.input_dim)
    throw InvalidInput("input length differs from the network's");
  Matrix a = x;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const Layer& layer = layers_[l];
    Matrix z = layer.w * a;
    z.colwise() += layer.b;
    if (l + 1 < layers_.size()) {
      a = (z.array() > 0).select(z, z.array().colwise() * layer.slope.array());
    } else {
      a = std::move(z);
    }
  }
  return a;
}

template <typename Scalar>
typename Mlp<Scalar>::Matrix Mlp<Scalar>::forward(const Matrix& x) const {
  Matrix raw = forward_raw(x);
  if (!config_.zero_sum) return raw;
  return zero_sum_correct<Scalar>(raw, x.topRows(raw.rows()));
}

template <typename Scalar>
typename Mlp<Scalar>::Matrix zero_sum_correct(const typename Mlp<Scalar>::Matrix& raw,
                                              const typename Mlp<Scalar>::Matrix& ranges) {
  if (raw.rows() != ranges.rows() || raw.cols() != ranges.cols()) throw InvalidInput("range and output shapes differ");
  const auto e = (Scalar(0.5) * (raw.array() * ranges.array()).colwise().sum()).eval();
  typename Mlp<Scalar>::Matrix out = raw;
  out.array().rowwise() -= e;
  return out;
}

template typename Mlp<float>::Matrix zero_sum_correct<float>(const Mlp<float>::Matrix&, const Mlp<float>::Matrix&);
template typename Mlp<double>::Matrix zero_sum_correct<double>(const Mlp<double>::Matrix&, const Mlp<double>::Matrix&);

template <typename Scalar>
Scalar Mlp<Scalar>::loss(const Matrix& x, const Matrix& y, const Matrix& mask, Scalar delta,
                         std::vector<Layer>* gradient) const {
  if (static_cast<std::size_t>(x.rows()) != config_.input_dim)
    throw InvalidInput("input length differs from the network's");
  if (y.rows() != static_cast<Eigen::Index>(config_.output_dim) || y.cols() != x.cols() || mask.rows() != y.rows() ||
      mask.cols() != y.cols()) {
    throw InvalidInput("target or mask shape differs from the network output");
  }
  const std::size_t depth = layers_.size();
  std::vector<Matrix> pre(depth);   // pre-activations
  std::vector<Matrix> post(depth);  // activations feeding layer l + 1
  const Matrix* in = &x;
  for (std::size_t l = 0; l < depth; ++l) {
    pre[l] = layers_[l].w * *in;
    pre[l].colwise() += layers_[l].b;
    if (l + 1 < depth) {
      post[l] = (pre[l].array() > 0).select(pre[l], pre[l].array().colwise() * layers_[l].slope.array());
      in = &post[l];
    }
  }
  const Matrix& raw = pre[depth - 1];
  const Matrix out = config_.zero_sum ? zero_sum_correct<Scalar>(raw, x.topRows(raw.rows())) : raw;
  const auto diff = (out - y).array();
  const Scalar live = mask.sum();
  if (gradient) *gradient = zeros_like(layers_);
  if (live <= 0) return 0;
  const auto abs = diff.abs();
  const Scalar total =
      (mask.array() * (abs <= delta).select(Scalar(0.5) * diff.square(), delta * (abs - Scalar(0.5) * delta))).sum();
  if (!gradient) return total / live;

  Matrix g = (mask.array() * diff.max(-delta).min(delta)).matrix() / live;
  if (config_.zero_sum) {
    const auto ranges = x.topRows(raw.rows()).array();
    const auto s = g.colwise().sum().eval();
    g.array() -= Scalar(0.5) * (ranges.rowwise() * s.array());
  }
  for (std::size_t l = depth; l-- > 0;) {
    Layer& d = (*gradient)[l];
    if (l + 1 < depth) {
      const auto& z = pre[l];
      d.slope = (z.array() > 0).select(Matrix::Zero(z.rows(), z.cols()).array(), g.array() * z.array()).rowwise().sum();
      g = (z.array() > 0).select(g, g.array().colwise() * layers_[l].slope.array());
    }
    const Matrix& a = l == 0 ? x : post[l - 1];
    d.w.noalias() = g * a.transpose();
    d.b = g.rowwise().sum();
    if (l > 0) g = layers_[l].w.transpose() * g;
  }
  return total / live;
}

template class Mlp<float>;
template class Mlp<double>;

template <typename Scalar>
Adam<Scalar>::Adam(const Mlp<Scalar>& net, const TrainConfig& config)
    : config_(config), m_(zeros_like(net.layers())), v_(zeros_like(net.layers())) {}

template <typename Scalar>
void Adam<Scalar>::step(Mlp<Scalar>& net, const std::vector<typename Mlp<Scalar>::Layer>& gradient) {
  ++t_;
  const auto b1 = static_cast<Scalar>(config_.beta1), b2 = static_cast<Scalar>(config_.beta2);
  const auto c1 = static_cast<Scalar>(1.0 - std::pow(config_.beta1, static_cast<double>(t_)));
  const auto c2 = static_cast<Scalar>(1.0 - std::pow(config_.beta2, static_cast<double>(t_)));
  const auto lr = static_cast<Scalar>(config_.learning_rate), eps = static_cast<Scalar>(config_.epsilon);
  auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
    m.array() = b1 * m.array() + (1 - b1) * g.array();
    v.array() = b2 * v.array() + (1 - b2) * g.array().square();
    param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  };
  auto& layers = net.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    update(layers[l].w, m_[l].w, v_[l].w, gradient[l].w);
    update(layers[l].b, m_[l].b, v_[l].b, gradient[l].b);
    if (layers[l].slope.size() > 0) update(layers[l].slope, m_[l].slope, v_[l].slope, gradient[l].slope);
  }
  if (!net.all_finite()) throw std::runtime_error("non-finite network parameter after Adam step " + std::to_string(t_));
}

template class Adam<float>;
template class Adam<double>;

double dataset_loss(const Mlp<float>& model, const EncodedDataset& data, double delta) {
  if (data.examples.empty()) return std::numeric_limits<double>::quiet_NaN();
  const Columns c = to_columns(data);
  constexpr Eigen::Index kChunk = 1000;
  double total = 0.0, live = 0.0;
  for (Eigen::Index at = 0; at < c.x.cols(); at += kChunk) {
    const Eigen::Index w = std::min(kChunk, c.x.cols() - at);
    const Eigen::MatrixXf m = c.mask.middleCols(at, w);
    const double l = m.sum();
    total +=
        static_cast<double>(model.loss(c.x.middleCols(at, w), c.y.middleCols(at, w), m, static_cast<float>(delta))) * l;
    live += l;
  }
  return live > 0.0 ? total / live : 0.0;
}

TrainResult train(const EncodedDataset& train_set, const EncodedDataset* test_set, const MlpConfig& mlp,
                  const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  if (train_set.examples.empty()) throw InvalidInput("training set is empty");
  if (mlp.input_dim != train_set.input_dim() || mlp.output_dim != train_set.target_dim()) {
    throw InvalidInput("network shape does not match the encoded dataset");
  }
  TrainResult result{Mlp<float>(mlp), {}};
  Adam<float> adam(result.model, config);
  const Columns c = to_columns(train_set);
  const auto n = static_cast<std::size_t>(c.x.cols());
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::mt19937_64 rng(config.seed);
  std::vector<Mlp<float>::Layer> grad;
  Eigen::MatrixXf bx, by, bm;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0, live = 0.0;
    for (std::size_t at = 0; at < n; at += config.batch) {
      const std::size_t w = std::min(config.batch, n - at);
      bx.resize(c.x.rows(), static_cast<Eigen::Index>(w));
      by.resize(c.y.rows(), static_cast<Eigen::Index>(w));
      bm.resize(c.mask.rows(), static_cast<Eigen::Index>(w));
      for (std::size_t j = 0; j < w; ++j) {
        const Eigen::Index src = order[at + j];
        bx.col(static_cast<Eigen::Index>(j)) = c.x.col(src);
        by.col(static_cast<Eigen::Index>(j)) = c.y.col(src);
        bm.col(static_cast<Eigen::Index>(j)) = c.mask.col(src);
      }
      const double l = bm.sum();
      const float loss = result.model.loss(bx, by, bm, static_cast<float>(config.huber_delta), &grad);
      adam.step(result.model, grad);
      total += static_cast<double>(loss) * l;
      live += l;
    }
    EpochLoss e{epoch, live > 0.0 ? total / live : 0.0,
                test_set ? dataset_loss(result.model, *test_set, config.huber_delta)
                         : std::numeric_limits<double>::quiet_NaN()};
    if (!std::isfinite(e.train_huber))
      throw std::runtime_error("training loss is not finite at epoch " + std::to_string(epoch));
    result.curve.push_back(e);
    if (on_epoch) on_epoch(e);
  }
  return result;
}

std::vector<std::vector<float>> predict(const Mlp<float>& model, const EncodedDataset& data) {
  std::vector<std::vector<float>> out;
  out.reserve(data.examples.size());
  const auto in = static_cast<Eigen::Index>(data.input_dim());
  constexpr std::size_t kChunk = 1000;
  Eigen::MatrixXf x;
  for (std::size_t at = 0; at < data.examples.size(); at += kChunk) {
    const std::size_t w = std::min(kChunk, data.examples.size() - at);
    x.resize(in, static_cast<Eigen::Index>(w));
    for (std::size_t j = 0; j < w; ++j) {
      const auto& ex = data.examples[at + j];
      if (static_cast<Eigen::Index>(ex.inputs.size()) != in) throw InvalidInput("encoded example has the wrong shape");
      x.col(static_cast<Eigen::Index>(j)) = Eigen::Map<const Eigen::VectorXf>(ex.inputs.data(), in);
    }
    const Eigen::MatrixXf y = model.forward(x);
    for (std::size_t j = 0; j < w; ++j) {
      const auto col = y.col(static_cast<Eigen::Index>(j));
      out.emplace_back(col.data(), col.data() + col.size());
    }
  }
  return out;
}

double gradient_check(const Mlp<double>& net, std::span<const double> input, std::span<const double> target,
                      std::span<const std::uint8_t> mask, double epsilon, double delta) {
  if (!(epsilon > 0.0)) throw InvalidInput("gradient check step must be positive");
  using M = Mlp<double>::Matrix;
  const M x = Eigen::Map<const Eigen::VectorXd>(input.data(), static_cast<Eigen::Index>(input.size()));
  const M y = Eigen::Map<const Eigen::VectorXd>(target.data(), static_cast<Eigen::Index>(target.size()));
  M m(static_cast<Eigen::Index>(mask.size()), 1);
  for (std::size_t i = 0; i < mask.size(); ++i) m(static_cast<Eigen::Index>(i), 0) = mask[i] ? 1.0 : 0.0;

  std::vector<Mlp<double>::Layer> grad;
  net.loss(x, y, m, delta, &grad);
  Mlp<double> probe = net;
  double worst = 0.0;
  auto check = [&](double& param, double analytic) {
    const double saved = param;
    param = saved + epsilon;
    const double up = probe.loss(x, y, m, delta);
    param = saved - epsilon;
    const double down = probe.loss(x, y, m, delta);
    param = saved;
    const double numeric = (up - down) / (2.0 * epsilon);
    const double err = std::abs(analytic - numeric) / std::max(std::abs(analytic) + std::abs(numeric), 1e-6);
    worst = std::max(worst, err);
  };
  for (std::size_t l = 0; l < probe.layers().size(); ++l) {
    auto& layer = probe.layers()[l];
    for (Eigen::Index i = 0; i < layer.w.size(); ++i) check(layer.w.data()[i], grad[l].w.data()[i]);
    for (Eigen::Index i = 0; i < layer.b.size(); ++i) check(layer.b.data()[i], grad[l].b.data()[i]);
    for (Eigen::Index i = 0; i < layer.slope.size(); ++i) check(layer.slope.data()[i], grad[l].slope.data()[i]);
  }
  return worst;
}

void write_model(const std::filesystem::path& path, const Mlp<float>& model) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  const MlpConfig& c = model.config();
  bin::put_magic(out, kMagic);
  bin::put<std::uint16_t>(out, kVersion);
  bin::put<std::uint32_t>(out, static_cast<std::uint32_t>(c.input_dim));
  bin::put<std::uint32_t>(out, static_cast<std::uint32_t>(c.output_dim));
  bin::put<std::uint8_t>(out, c.zero_sum ? 1 : 0);
  bin::put<std::uint64_t>(out, c.seed);
  bin::put<std::uint32_t>(out, static_cast<std::uint32_t>(c.hidden.size()));
  for (std::size_t h : c.hidden) bin::put<std::uint32_t>(out, static_cast<std::uint32_t>(h));
  for (const auto& l : model.layers()) {
    for (Eigen::Index i = 0; i < l.w.rows(); ++i) {
      for (Eigen::Index j = 0; j < l.w.cols(); ++j) bin::put<double>(out, l.w(i, j));
    }
    for (Eigen::Index i = 0; i < l.b.size(); ++i) bin::put<double>(out, l.b(i));
    for (Eigen::Index i = 0; i < l.slope.size(); ++i) bin::put<double>(out, l.slope(i));
  }
  out.close();
  if (!out) throw IoError("write failed on " + path.string());
}

Mlp<float> read_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model " + path.string());
  try {
    bin::expect_magic(in, kMagic);
    if (bin::get<std::uint16_t>(in) != kVersion) throw IoError("unsupported model version");
    MlpConfig c;
    c.input_dim = bin::get<std::uint32_t>(in);
    c.output_dim = bin::get<std::uint32_t>(in);
    c.zero_sum = bin::get<std::uint8_t>(in) != 0;
    c.seed = bin::get<std::uint64_t>(in);
    c.hidden.resize(bin::get<std::uint32_t>(in));
    for (auto& h : c.hidden) h = bin::get<std::uint32_t>(in);
    Mlp<float> model(c);
    for (auto& l : model.layers()) {
      for (Eigen::Index i = 0; i < l.w.rows(); ++i) {
        for (Eigen::Index j = 0; j < l.w.cols(); ++j) l.w(i, j) = static_cast<float>(bin::get<double>(in));
      }
      for (Eigen::Index i = 0; i < l.b.size(); ++i) l.b(i) = static_cast<float>(bin::get<double>(in));
      for (Eigen::Index i = 0; i < l.slope.size(); ++i) l.slope(i) = static_cast<float>(bin::get<double>(in));
    }
    return model;
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  } catch (const InvalidInput& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

void write_loss_curve(const std::filesystem::path& path, std::span<const EpochLoss> curve) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "epoch,train_huber,test_huber\n";
  out.precision(10);
  for (const auto& e : curve) out << e.epoch << ',' << e.train_huber << ',' << e.test_huber << '\n';
  if (!out) throw IoError("write failed on " + path.string());
}

}  // namespace cfvn
