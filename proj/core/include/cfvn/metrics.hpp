#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cfvn/encoding.hpp"

namespace cfvn {

double huber(double residual, double delta = 1.0);
inline double mse(double residual) { return residual * residual; }

enum class Regime : std::uint8_t { kAbstractedTrain, kUnabstractedTrain, kAbstractedTest, kUnabstractedTest };

const char* to_string(Regime regime);
Regime parse_regime(std::string_view name);
bool is_abstracted(Regime regime);

struct LossReport {
  EncodingKind encoding = EncodingKind::kDirect;
  Regime regime = Regime::kAbstractedTest;
  double huber = 0.0;
  double mse = 0.0;
  std::size_t examples = 0;
  std::size_t hands = 0;
};

// Pooled sums of both losses, added in a fixed order.
struct LossAccumulator {
  double huber = 0.0;
  double mse = 0.0;
  std::size_t count = 0;

  void add(double residual) {
    huber += cfvn::huber(residual);
    mse += cfvn::mse(residual);
    ++count;
  }
  double mean_huber() const { return count ? huber / static_cast<double>(count) : 0.0; }
  double mean_mse() const { return count ? mse / static_cast<double>(count) : 0.0; }
};

// predictions[i] holds the network output for encoded.examples[i].
// Abstracted regimes compare against the encoded targets on live entries;
// unabstracted regimes decode to hands and compare against the raw CVs of
// examples[i] on dealable hands.
LossReport evaluate(std::span<const std::vector<float>> predictions, std::span<const TrainingExample> examples,
                    const EncodedDataset& encoded, const MappingLookup& lookup, Regime regime);

// Appends "encoding,regime,huber,mse,n_examples" rows, writing the header
// when the file is new.
void append_results_csv(const std::filesystem::path& path, std::span<const LossReport> reports);
std::vector<LossReport> read_results_csv(const std::filesystem::path& path);

}  // namespace cfvn
