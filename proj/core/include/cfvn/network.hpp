#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "cfvn/encoding.hpp"

namespace cfvn {

struct MlpConfig {
  std::size_t input_dim = 0;
  std::size_t output_dim = 0;
  std::vector<std::size_t> hidden{200, 200, 200};
  // Subtract e = (r1.raw1 + r2.raw2) / 2 from every output, with r1 and r2
  // the first output_dim inputs split in half.
  bool zero_sum = true;
  std::uint64_t seed = 0;

  // Three layers of 200 units.
  static MlpConfig desk(std::size_t input_dim, std::size_t output_dim);
  // Seven layers of 500 units.
  static MlpConfig paper(std::size_t input_dim, std::size_t output_dim);
  void validate() const;
  friend bool operator==(const MlpConfig&, const MlpConfig&) = default;
};

// Feed-forward net: affine + PReLU per hidden layer, affine output, then the
// optional zero-sum correction. Batches are stored one example per column.
template <typename Scalar>
class Mlp {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  struct Layer {
    Matrix w;
    Vector b;
    // One learnable negative-side slope per unit; empty on the output layer.
    Vector slope;
  };

  Mlp() = default;
  // Fan-in scaled uniform weights, zero biases, slopes 0.25.
  explicit Mlp(const MlpConfig& config);

  const MlpConfig& config() const { return config_; }
  std::vector<Layer>& layers() { return layers_; }
  const std::vector<Layer>& layers() const { return layers_; }
  std::size_t parameter_count() const;
  bool all_finite() const;

  Matrix forward_raw(const Matrix& x) const;
  Matrix forward(const Matrix& x) const;

  // Mean Huber loss over entries with mask != 0; gradient has the layers'
  // shapes when requested.
  Scalar loss(const Matrix& x, const Matrix& y, const Matrix& mask, Scalar delta = 1,
              std::vector<Layer>* gradient = nullptr) const;

  template <typename Other>
  Mlp<Other> cast() const {
    Mlp<Other> out;
    out.config_ = config_;
    for (const auto& l : layers_) {
      out.layers_.push_back({l.w.template cast<Other>(), l.b.template cast<Other>(), l.slope.template cast<Other>()});
    }
    return out;
  }

 private:
  template <typename>
  friend class Mlp;
  MlpConfig config_;
  std::vector<Layer> layers_;
};

extern template class Mlp<float>;
extern template class Mlp<double>;

// v_p = raw_p - e with e = (r1.raw1 + r2.raw2) / 2, column by column.
template <typename Scalar>
typename Mlp<Scalar>::Matrix zero_sum_correct(const typename Mlp<Scalar>::Matrix& raw,
                                              const typename Mlp<Scalar>::Matrix& ranges);

struct TrainConfig {
  int epochs = 350;
  std::size_t batch = 1000;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double huber_delta = 1.0;
  std::uint64_t seed = 0;
  void validate() const;
};

template <typename Scalar>
class Adam {
 public:
  Adam(const Mlp<Scalar>& net, const TrainConfig& config);
  void step(Mlp<Scalar>& net, const std::vector<typename Mlp<Scalar>::Layer>& gradient);
  std::int64_t steps() const { return t_; }

 private:
  TrainConfig config_;
  std::vector<typename Mlp<Scalar>::Layer> m_, v_;
  std::int64_t t_ = 0;
};

extern template class Adam<float>;
extern template class Adam<double>;

struct EpochLoss {
  int epoch = 0;
  double train_huber = 0.0;
  // NaN when no test set was given.
  double test_huber = 0.0;
};

struct TrainResult {
  Mlp<float> model;
  std::vector<EpochLoss> curve;
};

using EpochCallback = std::function<void(const EpochLoss&)>;

// Mini-batch Adam on the masked Huber loss. Train loss per epoch is the
// live-entry mean over the epoch's batches.
TrainResult train(const EncodedDataset& train_set, const EncodedDataset* test_set, const MlpConfig& mlp,
                  const TrainConfig& config, const EpochCallback& on_epoch = {});

// Corrected outputs, one vector per example.
std::vector<std::vector<float>> predict(const Mlp<float>& model, const EncodedDataset& data);

// Masked Huber loss of the model over a dataset, in double.
double dataset_loss(const Mlp<float>& model, const EncodedDataset& data, double delta = 1.0);

// Largest |analytic - numeric| / max(|analytic| + |numeric|, 1e-6) over every
// parameter, numeric by central differences with step epsilon.
double gradient_check(const Mlp<double>& net, std::span<const double> input, std::span<const double> target,
                      std::span<const std::uint8_t> mask, double epsilon, double delta = 1.0);

// "CFVN": magic, version u16, input u32, output u32, zero_sum u8, seed u64,
// hidden count u32 and widths u32, then per layer w (row-major), b and
// slopes as f64.
void write_model(const std::filesystem::path& path, const Mlp<float>& model);
Mlp<float> read_model(const std::filesystem::path& path);

void write_loss_curve(const std::filesystem::path& path, std::span<const EpochLoss> curve);

}  // namespace cfvn
