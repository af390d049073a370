#include "cfvn/encoding.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <random>

#include "cfvn/error.hpp"
#include "mapping_util.hpp"
#include "test_util.hpp"

namespace cfvn {
namespace {

namespace fs = std::filesystem;

std::vector<double> random_cv(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 0.7);
  std::vector<double> cv(kNumHands);
  for (double& x : cv) x = n(rng);
  return cv;
}

TEST(EncodeCv, RoundTripProperties) {
  std::mt19937_64 rng(21);
  const Deck deck = Deck::full();
  const Board board = Board::parse("AsKd7c2h");
  for (int t = 0; t < 2000; ++t) {
    const int k = 1 + static_cast<int>(rng() % 200);
    const BucketMapping m = test::random_mapping(rng, board, deck, k);
    const Range r = test::random_range(rng, board, deck, 0.3);
    const auto cv = random_cv(rng);
    const auto enc = encode_cv(cv, r, m);
    const auto dec = decode_cv(enc, m);
    const auto mass = encode_range(r, m);
    double total = 0.0, before = 0.0, after = 0.0;
    for (double x : mass) total += x;
    for (std::size_t h = 0; h < kNumHands; ++h) {
      before += r.probs[h] * cv[h];
      after += r.probs[h] * dec[h];
    }
    ASSERT_NEAR(total, 1.0, 1e-12);
    ASSERT_NEAR(after, before, 1e-9);
    const auto members = m.members();
    for (std::size_t b = 0; b < members.size(); ++b) {
      if (members[b].empty()) {
        ASSERT_EQ(enc[b], 0.0);
        continue;
      }
      double lo = 1e300, hi = -1e300;
      for (HandIndex h : members[b]) {
        lo = std::min(lo, cv[h.value]);
        hi = std::max(hi, cv[h.value]);
      }
      ASSERT_GE(enc[b], lo - 1e-12);
      ASSERT_LE(enc[b], hi + 1e-12);
    }
  }
}

TEST(EncodeCv, SingletonBucketsAreLossless) {
  std::mt19937_64 rng(22);
  const Board board = Board::parse("Td9d4s4c");
  const BucketMapping m = test::singleton_mapping(board, Deck::full());
  for (int t = 0; t < 50; ++t) {
    const Range r = test::random_range(rng, board, Deck::full());
    const auto cv = random_cv(rng);
    const auto dec = decode_cv(encode_cv(cv, r, m), m);
    for (std::uint16_t h = 0; h < kNumHands; ++h) {
      if (board.collides(HandIndex{h})) {
        ASSERT_EQ(dec[h], 0.0);
      } else {
        ASSERT_NEAR(dec[h], cv[h], 1e-15);
      }
    }
  }
}

TEST(EncodeCv, ZeroMassBucketFallsBackToPlainMean) {
  const Board board = Board::parse("AsKd7c2h");
  BucketMapping m;
  m.board = board;
  m.num_buckets = 2;
  m.bucket_of.fill(kSentinelBucket);
  const HandIndex a = hand_index(Card::parse("3c"), Card::parse("4c"));
  const HandIndex b = hand_index(Card::parse("3d"), Card::parse("4d"));
  const HandIndex c = hand_index(Card::parse("5c"), Card::parse("6c"));
  m.bucket_of[a.value] = 0;
  m.bucket_of[b.value] = 0;
  m.bucket_of[c.value] = 1;
  Range r;
  r.probs[c.value] = 1.0;
  std::vector<double> cv(kNumHands, 0.0);
  cv[a.value] = 1.0;
  cv[b.value] = 3.0;
  cv[c.value] = -2.0;
  EXPECT_EQ(encode_cv(cv, r, m), (std::vector<double>{2.0, -2.0}));
  r.probs[c.value] = 0.5;
  r.probs[a.value] = 0.5;
  EXPECT_EQ(encode_cv(cv, r, m), (std::vector<double>{1.0, -2.0}));
  EXPECT_EQ(encode_cv(cv, r, m, CvWeighting::kUniform), (std::vector<double>{2.0, -2.0}));
  EXPECT_THROW(decode_cv(std::vector<double>{1.0}, m), InvalidInput);
}

TEST(Direct, InputLayout) {
  std::mt19937_64 rng(23);
  const SubgameSpec s = test::random_spec(rng, "AsKd7c2h", Deck::full(), 30, 85);
  const auto x = encode_direct(s);
  ASSERT_EQ(x.size(), kDirectInputs);
  EXPECT_EQ(kDirectInputs, 2705u);
  EXPECT_EQ(x[5], s.range1.probs[5]);
  EXPECT_EQ(x[kNumHands + 7], s.range2.probs[7]);
  double board_bits = 0.0;
  for (std::size_t i = 2 * kNumHands; i < 2 * kNumHands + kNumCards; ++i) board_bits += x[i];
  EXPECT_EQ(board_bits, 4.0);
  EXPECT_EQ(x[2 * kNumHands + static_cast<std::size_t>(Card::parse("As").index())], 1.0);
  EXPECT_DOUBLE_EQ(x.back(), 30.0 / 200.0);
}

TrainingExample fake_example(std::mt19937_64& rng, const char* board, const Deck& deck) {
  TrainingExample ex;
  ex.spec = test::random_spec(rng, board, deck, 20, 90);
  ex.cvs.v1 = random_cv(rng);
  ex.cvs.v2 = random_cv(rng);
  for (std::uint16_t h = 0; h < kNumHands; ++h) {
    if (ex.spec.board.collides(HandIndex{h}) || (hand_mask(HandIndex{h}) & ~deck.mask())) {
      ex.cvs.v1[h] = ex.cvs.v2[h] = 0.0;
    }
  }
  return ex;
}

TEST(EncodeExample, ShapesAndMasks) {
  std::mt19937_64 rng(24);
  const Deck deck = Deck::parse("short20");
  const TrainingExample ex = fake_example(rng, "AsKdJcTh", deck);
  BucketMapping m = test::random_mapping(rng, ex.spec.board, deck, 300);
  m.kind = AbstractionKind::kPotentialAware;
  const MappingLookup lookup = [&](const Board&) -> const BucketMapping& { return m; };
  const EncodedExample e = encode_example(ex, EncodingKind::kPotentialAware, lookup, CvWeighting::kRange, deck);
  ASSERT_EQ(e.inputs.size(), 601u);
  ASSERT_EQ(e.targets.size(), 600u);
  const auto occ = m.occupied();
  for (std::size_t b = 0; b < 300; ++b) {
    EXPECT_EQ(e.mask[b], occ[b] ? 1 : 0);
    EXPECT_EQ(e.mask[300 + b], occ[b] ? 1 : 0);
  }
  EXPECT_FLOAT_EQ(e.inputs.back(), static_cast<float>(normalized_pot(ex.spec)));
  EXPECT_THROW(encode_example(ex, EncodingKind::kEhs2, lookup, CvWeighting::kRange, deck), InvalidInput);

  const EncodedExample d = encode_example(ex, EncodingKind::kDirect, {}, CvWeighting::kRange, deck);
  ASSERT_EQ(d.inputs.size(), kDirectInputs);
  ASSERT_EQ(d.targets.size(), 2u * kNumHands);
  EXPECT_EQ(std::count(d.mask.begin(), d.mask.end(), 1), 2 * 120);
}

TEST(EncodingError, DirectIsZeroAndSingletonIsZero) {
  std::mt19937_64 rng(25);
  const Deck deck = Deck::parse("short20");
  std::vector<TrainingExample> data;
  for (int i = 0; i < 5; ++i) data.push_back(fake_example(rng, "AsKdJcTh", deck));
  const EncodingError d = encoding_error(data, EncodingKind::kDirect, {}, CvWeighting::kRange, deck);
  EXPECT_EQ(d.huber, 0.0);
  EXPECT_EQ(d.mse, 0.0);
  EXPECT_EQ(d.examples, 5u);
  EXPECT_EQ(d.hands, 5u * 2 * 120);

  BucketMapping m = test::singleton_mapping(data[0].spec.board, deck);
  const MappingLookup lookup = [&](const Board&) -> const BucketMapping& { return m; };
  const EncodingError s = encoding_error(data, EncodingKind::kEhs2, lookup, CvWeighting::kRange, deck);
  EXPECT_LT(s.huber, 1e-30);
  EXPECT_THROW(encoding_error(std::span<const TrainingExample>{}, EncodingKind::kDirect, {}), InvalidInput);
}

TEST(MappingTable, LookupAndMissingBoard) {
  AbstractionSettings s;
  s.kind = EncodingKind::kEhs2;
  s.deck = Deck::parse("short20");
  s.ehs2_buckets = 20;
  const std::vector<Board> boards{Board::parse("AsKdJcTh"), Board::parse("QsJhTdAc"), Board::parse("KdAsThJc")};
  const MappingTable one = build_mappings(s, boards, 1);
  const MappingTable three = build_mappings(s, boards, 3);
  EXPECT_EQ(one.size(), 2u);
  EXPECT_EQ(one.all(), three.all());
  EXPECT_EQ(one.at(boards[2]).board, boards[0]);
  EXPECT_THROW(one.at(Board::parse("AhKhQhJh")), InvalidInput);
  EXPECT_EQ(s.num_buckets(), 20u);
  s.kind = EncodingKind::kNested;
  EXPECT_THROW(build_mapping(s, boards[0]), InvalidInput);
}

TEST(EncodedFile, RoundTrip) {
  std::mt19937_64 rng(26);
  const Deck deck = Deck::parse("short20");
  std::vector<TrainingExample> data;
  for (int i = 0; i < 4; ++i) data.push_back(fake_example(rng, "AsKdJcTh", deck));
  BucketMapping m = test::random_mapping(rng, data[0].spec.board, deck, 50);
  const MappingLookup lookup = [&](const Board&) -> const BucketMapping& { return m; };
  const EncodedDataset enc = encode_dataset(data, EncodingKind::kEhs2, 50, lookup, CvWeighting::kRange, deck, 2);
  const fs::path path = fs::temp_directory_path() / "cfvn_encoding_test.cenc";
  write_encoded(path, enc);
  const EncodedDataset back = read_encoded(path);
  EXPECT_EQ(back.kind, enc.kind);
  EXPECT_EQ(back.num_buckets, 50u);
  ASSERT_EQ(back.examples.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(back.examples[i].inputs, enc.examples[i].inputs);
    EXPECT_EQ(back.examples[i].targets, enc.examples[i].targets);
    EXPECT_EQ(back.examples[i].mask, enc.examples[i].mask);
  }
  EXPECT_THROW(encode_dataset(data, EncodingKind::kEhs2, 51, lookup, CvWeighting::kRange, deck), InvalidInput);
  fs::resize_file(path, fs::file_size(path) - 3);
  EXPECT_THROW(read_encoded(path), IoError);
}

}  // namespace
}  // namespace cfvn
