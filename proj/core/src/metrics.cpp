#include "cfvn/metrics.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "cfvn/error.hpp"

namespace cfvn {

double huber(double r, double delta) {
  if (!(delta > 0.0)) throw InvalidInput("huber delta must be positive");
  const double a = std::abs(r);
  return a <= delta ? 0.5 * r * r : delta * (a - 0.5 * delta);
}

const char* to_string(Regime regime) {
  switch (regime) {
    case Regime::kAbstractedTrain:
      return "abstracted-train";
    case Regime::kUnabstractedTrain:
      return "unabstracted-train";
    case Regime::kAbstractedTest:
      return "abstracted-test";
    case Regime::kUnabstractedTest:
      return "unabstracted-test";
  }
  return "?";
}

Regime parse_regime(std::string_view name) {
  for (auto r :
       {Regime::kAbstractedTrain, Regime::kUnabstractedTrain, Regime::kAbstractedTest, Regime::kUnabstractedTest}) {
    if (name == to_string(r)) return r;
  }
  throw InvalidInput("unknown regime '" + std::string(name) + "'");
}

bool is_abstracted(Regime regime) { return regime == Regime::kAbstractedTrain || regime == Regime::kAbstractedTest; }

LossReport evaluate(std::span<const std::vector<float>> predictions, std::span<const TrainingExample> examples,
                    const EncodedDataset& encoded, const MappingLookup& lookup, Regime regime) {
  const std::size_t n = encoded.examples.size();
  if (predictions.size() != n) throw InvalidInput("prediction count differs from the encoded dataset");
  if (!is_abstracted(regime) && examples.size() != n) {
    throw InvalidInput("raw and encoded datasets differ in size");
  }
  const std::size_t dim = encoded.target_dim();
  const std::size_t k = encoded.num_buckets;
  LossAccumulator acc;
  std::vector<double> bucket(k);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& pred = predictions[i];
    const auto& enc = encoded.examples[i];
    if (pred.size() != dim) throw InvalidInput("prediction length differs from the target length");
    if (is_abstracted(regime)) {
      for (std::size_t t = 0; t < dim; ++t) {
        if (enc.mask[t]) acc.add(static_cast<double>(pred[t]) - static_cast<double>(enc.targets[t]));
      }
      continue;
    }
    const TrainingExample& ex = examples[i];
    if (encoded.kind == EncodingKind::kDirect) {
      // hands are the buckets, so decoding is the identity on live hands;
      // CVs are compared at the f32 precision every file format stores
      for (std::size_t t = 0; t < dim; ++t) {
        if (!enc.mask[t]) continue;
        const auto& cv = t < kNumHands ? ex.cvs.v1 : ex.cvs.v2;
        acc.add(static_cast<double>(pred[t]) - static_cast<double>(static_cast<float>(cv[t % kNumHands])));
      }
      continue;
    }
    const BucketMapping& m = lookup(ex.spec.board);
    if (m.num_buckets != k) throw InvalidInput("mapping bucket count differs from the encoded dataset");
    for (std::size_t p = 0; p < 2; ++p) {
      for (std::size_t b = 0; b < k; ++b) bucket[b] = pred[p * k + b];
      const std::vector<double> hands = decode_cv(bucket, m);
      const auto& cv = p == 0 ? ex.cvs.v1 : ex.cvs.v2;
      for (std::size_t h = 0; h < kNumHands; ++h) {
        if (m.bucket_of[h] != kSentinelBucket) acc.add(hands[h] - cv[h]);
      }
    }
  }
  return {encoded.kind, regime, acc.mean_huber(), acc.mean_mse(), n, acc.count};
}

void append_results_csv(const std::filesystem::path& path, std::span<const LossReport> reports) {
  const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
  std::ofstream out(path, std::ios::app);
  if (!out) throw IoError("cannot open " + path.string() + " for appending");
  if (fresh) out << "encoding,regime,huber,mse,n_examples\n";
  out.precision(17);
  for (const auto& r : reports) {
    out << to_string(r.encoding) << ',' << to_string(r.regime) << ',' << r.huber << ',' << r.mse << ',' << r.examples
        << '\n';
  }
  if (!out) throw IoError("write failed on " + path.string());
}

std::vector<LossReport> read_results_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open results file " + path.string());
  std::vector<LossReport> out;
  std::string line;
  std::getline(in, line);
  if (line != "encoding,regime,huber,mse,n_examples") throw IoError(path.string() + ": unexpected header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string enc, regime, huber_s, mse_s, n_s;
    if (!std::getline(row, enc, ',') || !std::getline(row, regime, ',') || !std::getline(row, huber_s, ',') ||
        !std::getline(row, mse_s, ',') || !std::getline(row, n_s)) {
      throw IoError(path.string() + ": malformed row '" + line + "'");
    }
    try {
      LossReport r;
      r.encoding = parse_encoding(enc);
      r.regime = parse_regime(regime);
      r.huber = std::stod(huber_s);
      r.mse = std::stod(mse_s);
      r.examples = std::stoull(n_s);
      out.push_back(r);
    } catch (const std::exception& e) {
      throw IoError(path.string() + ": malformed row '" + line + "': " + e.what());
    }
  }
  return out;
}

}  // namespace cfvn
