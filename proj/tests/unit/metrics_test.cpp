#include "cfvn/metrics.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "cfvn/error.hpp"
#include "mapping_util.hpp"
#include "test_util.hpp"

namespace cfvn {
namespace {

namespace fs = std::filesystem;

TEST(Huber, KnownValues) {
  EXPECT_EQ(huber(0.0), 0.0);
  EXPECT_EQ(huber(0.5), 0.125);
  EXPECT_EQ(huber(-0.5), 0.125);
  EXPECT_EQ(huber(1.0), 0.5);
  EXPECT_EQ(huber(2.0), 1.5);
  EXPECT_EQ(huber(-3.0), 2.5);
  EXPECT_EQ(huber(3.0, 2.0), 4.0);
  EXPECT_EQ(mse(0.5), 0.25);
  EXPECT_EQ(mse(-3.0), 9.0);
  EXPECT_THROW(huber(1.0, 0.0), InvalidInput);
}

TEST(Huber, ContinuousAndBelowHalfSquare) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-10, 10);
  for (int i = 0; i < 10000; ++i) {
    const double r = u(rng);
    ASSERT_LE(huber(r), 0.5 * r * r + 1e-12);
    ASSERT_GE(huber(r), 0.0);
    ASSERT_NEAR(huber(r + 1e-7), huber(r), 1e-6);
  }
  EXPECT_NEAR(huber(1.0 + 1e-12), 0.5, 1e-11);
}

TEST(Regime, NamesRoundTrip) {
  for (auto r :
       {Regime::kAbstractedTrain, Regime::kUnabstractedTrain, Regime::kAbstractedTest, Regime::kUnabstractedTest}) {
    EXPECT_EQ(parse_regime(to_string(r)), r);
  }
  EXPECT_THROW(parse_regime("train"), InvalidInput);
  EXPECT_TRUE(is_abstracted(Regime::kAbstractedTest));
  EXPECT_FALSE(is_abstracted(Regime::kUnabstractedTrain));
}

struct Fixture {
  Deck deck = Deck::parse("short20");
  std::vector<TrainingExample> raw;
  BucketMapping mapping;
  MappingLookup lookup;

  explicit Fixture(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0, 0.5);
    for (int i = 0; i < 6; ++i) {
      TrainingExample ex;
      ex.spec = test::random_spec(rng, "AsKdJcTh", deck, 20, 90);
      ex.cvs.v1.assign(kNumHands, 0.0);
      ex.cvs.v2.assign(kNumHands, 0.0);
      for (HandIndex h : valid_hands(ex.spec.board, deck)) {
        ex.cvs.v1[h.value] = n(rng);
        ex.cvs.v2[h.value] = n(rng);
      }
      raw.push_back(ex);
    }
    mapping = test::random_mapping(rng, raw[0].spec.board, deck, 30);
    lookup = [this](const Board&) -> const BucketMapping& { return mapping; };
  }
};

std::vector<std::vector<float>> targets_of(const EncodedDataset& e) {
  std::vector<std::vector<float>> out;
  for (const auto& ex : e.examples) out.push_back(ex.targets);
  return out;
}

TEST(Evaluate, PerfectPredictions) {
  Fixture f(32);
  const EncodedDataset d = encode_dataset(f.raw, EncodingKind::kDirect, kNumHands, {}, CvWeighting::kRange, f.deck);
  const auto pred = targets_of(d);
  for (Regime r : {Regime::kAbstractedTest, Regime::kUnabstractedTest}) {
    const LossReport rep = evaluate(pred, f.raw, d, {}, r);
    EXPECT_EQ(rep.huber, 0.0);
    EXPECT_EQ(rep.mse, 0.0);
    EXPECT_EQ(rep.examples, 6u);
    EXPECT_EQ(rep.hands, 6u * 2 * 120);
  }
  // abstracted loss of perfect bucket predictions is 0; unabstracted is the
  // encoding error
  const EncodedDataset b = encode_dataset(f.raw, EncodingKind::kEhs2, 30, f.lookup, CvWeighting::kRange, f.deck);
  const auto bp = targets_of(b);
  EXPECT_EQ(evaluate(bp, f.raw, b, f.lookup, Regime::kAbstractedTrain).huber, 0.0);
  const LossReport u = evaluate(bp, f.raw, b, f.lookup, Regime::kUnabstractedTrain);
  const EncodingError ee = encoding_error(f.raw, EncodingKind::kEhs2, f.lookup, CvWeighting::kRange, f.deck);
  EXPECT_NEAR(u.huber, ee.huber, 1e-6);
  EXPECT_EQ(u.hands, ee.hands);
}

TEST(Evaluate, DirectRegimesAreBitIdentical) {
  Fixture f(33);
  const EncodedDataset d = encode_dataset(f.raw, EncodingKind::kDirect, kNumHands, {}, CvWeighting::kRange, f.deck);
  std::mt19937_64 rng(34);
  std::normal_distribution<float> n(0, 1);
  auto pred = targets_of(d);
  for (auto& p : pred) {
    for (float& x : p) x += n(rng);
  }
  const LossReport a = evaluate(pred, f.raw, d, {}, Regime::kAbstractedTest);
  const LossReport u = evaluate(pred, f.raw, d, {}, Regime::kUnabstractedTest);
  EXPECT_EQ(a.huber, u.huber);
  EXPECT_EQ(a.mse, u.mse);
  EXPECT_EQ(a.hands, u.hands);
  EXPECT_GT(a.huber, 0.0);
}

TEST(Evaluate, KnownConstantOffset) {
  Fixture f(35);
  const EncodedDataset d = encode_dataset(f.raw, EncodingKind::kDirect, kNumHands, {}, CvWeighting::kRange, f.deck);
  auto pred = targets_of(d);
  for (auto& p : pred) {
    for (float& x : p) x += 2.0f;
  }
  const LossReport a = evaluate(pred, f.raw, d, {}, Regime::kAbstractedTest);
  EXPECT_NEAR(a.huber, 1.5, 1e-5);
  EXPECT_NEAR(a.mse, 4.0, 1e-5);
}

TEST(Evaluate, ShapeErrors) {
  Fixture f(36);
  const EncodedDataset d = encode_dataset(f.raw, EncodingKind::kDirect, kNumHands, {}, CvWeighting::kRange, f.deck);
  auto pred = targets_of(d);
  pred.pop_back();
  EXPECT_THROW(evaluate(pred, f.raw, d, {}, Regime::kAbstractedTest), InvalidInput);
  pred = targets_of(d);
  pred[0].pop_back();
  EXPECT_THROW(evaluate(pred, f.raw, d, {}, Regime::kAbstractedTest), InvalidInput);
}

TEST(ResultsCsv, RoundTripAndErrors) {
  const fs::path path = fs::temp_directory_path() / "cfvn_metrics_test.csv";
  fs::remove(path);
  const std::vector<LossReport> rows{{EncodingKind::kPotentialAware, Regime::kAbstractedTest, 0.1 / 3, 1e-17, 5, 0},
                                     {EncodingKind::kDirect, Regime::kUnabstractedTrain, 2.0, 4.0, 7, 0}};
  append_results_csv(path, std::span(rows).first(1));
  append_results_csv(path, std::span(rows).subspan(1));
  const auto back = read_results_csv(path);
  ASSERT_EQ(back.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(back[i].encoding, rows[i].encoding);
    EXPECT_EQ(back[i].regime, rows[i].regime);
    EXPECT_EQ(back[i].huber, rows[i].huber);
    EXPECT_EQ(back[i].mse, rows[i].mse);
    EXPECT_EQ(back[i].examples, rows[i].examples);
  }
  std::ofstream(path, std::ios::app) << "pa,abstracted-test,x,1,1\n";
  EXPECT_THROW(read_results_csv(path), IoError);
  std::ofstream(path) << "nope\n";
  EXPECT_THROW(read_results_csv(path), IoError);
  EXPECT_THROW(read_results_csv(path.string() + ".missing"), IoError);
}

}  // namespace
}  // namespace cfvn
