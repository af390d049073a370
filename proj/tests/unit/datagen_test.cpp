#include "cfvn/datagen.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "cfvn/error.hpp"

namespace cfvn {
namespace {

namespace fs = std::filesystem;

DatagenConfig small_config() {
  DatagenConfig c;
  c.deck = Deck::parse("short20");
  c.actions = {.bet_fractions = {1.0}, .all_in = false, .raise_cap = 1};
  c.cfr = {.iterations = 20, .averaging_start = 10, .plus = true};
  return c;
}

fs::path temp_file(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "cfvn_datagen_test";
  fs::create_directories(dir);
  return dir / name;
}

TEST(DeriveSeed, PureAndSpread) {
  EXPECT_EQ(derive_seed(1, 2), derive_seed(1, 2));
  std::set<std::uint64_t> seen;
  for (std::uint64_t s = 0; s < 4; ++s) {
    for (std::uint64_t i = 0; i < 1000; ++i) seen.insert(derive_seed(s, i));
  }
  EXPECT_EQ(seen.size(), 4000u);
}

TEST(SampleRange, NormalizedAndZeroOnBlockedHands) {
  Rng rng(1);
  const Board board = Board::parse("AsKd7c2h");
  for (int t = 0; t < 50; ++t) {
    const Range r = sample_range(rng, board);
    EXPECT_NEAR(r.total(), 1.0, 1e-12);
    for (std::uint16_t h = 0; h < kNumHands; ++h) {
      if (board.collides(HandIndex{h})) ASSERT_EQ(r.probs[h], 0.0);
      ASSERT_GE(r.probs[h], 0.0);
    }
  }
}

// Every hand's expected mass is 1/n; the largest z-score over the 120
// hands stays within a Bonferroni-style bound.
TEST(SampleRange, ExpectedMassIsUniform) {
  Rng rng(2);
  const Deck deck = Deck::parse("short20");
  const Board board = Board::parse("AsKdJcTh");
  const auto hands = valid_hands(board, deck);
  const std::size_t n = hands.size();
  std::vector<double> sum(n, 0.0), sq(n, 0.0);
  const int trials = 100000;
  for (int t = 0; t < trials; ++t) {
    const Range r = sample_range(rng, board, deck);
    for (std::size_t i = 0; i < n; ++i) {
      const double x = r.probs[hands[i].value];
      sum[i] += x;
      sq[i] += x * x;
    }
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double mean = sum[i] / trials;
    const double var = sq[i] / trials - mean * mean;
    const double se = std::sqrt(var / trials);
    worst = std::max(worst, std::abs(mean - 1.0 / static_cast<double>(n)) / se);
  }
  EXPECT_LT(worst, 4.0);
}

TEST(SampleSituation, BoardsPotsAndStacks) {
  Rng rng(3);
  const DatagenConfig c = small_config();
  std::vector<int> count(kNumCards, 0);
  const int trials = 20000;
  for (int t = 0; t < trials; ++t) {
    const SubgameSpec s = sample_situation(rng, c);
    ASSERT_NO_THROW(validate(s, c.deck));
    for (Card card : s.board.cards()) ++count[static_cast<std::size_t>(card.index())];
    bool listed = false;
    for (double f : c.pot_fractions) listed = listed || std::abs(s.pot - f * c.total_chips) < 1e-12;
    ASSERT_TRUE(listed);
    ASSERT_DOUBLE_EQ(s.pot + 2 * s.stack, c.total_chips);
  }
  // each deck card shows up on 4/20 of boards
  const double p = 4.0 / 20.0;
  const double se = std::sqrt(trials * p * (1 - p));
  for (int i = 0; i < kNumCards; ++i) {
    if (!c.deck.contains(Card(i))) {
      EXPECT_EQ(count[static_cast<std::size_t>(i)], 0);
      continue;
    }
    EXPECT_LT(std::abs(count[static_cast<std::size_t>(i)] - trials * p), 4 * se) << Card(i).str();
  }
}

TEST(GenerateDataset, DeterministicAndThreadInvariant) {
  const DatagenConfig c = small_config();
  const auto a = generate_dataset(6, 42, c, 1);
  const auto b = generate_dataset(6, 42, c, 3);
  ASSERT_EQ(a.size(), 6u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].spec.board, b[i].spec.board);
    EXPECT_EQ(a[i].spec.range1.probs, b[i].spec.range1.probs);
    EXPECT_EQ(a[i].cvs.v1, b[i].cvs.v1);
    EXPECT_EQ(a[i].cvs.v2, b[i].cvs.v2);
    const TrainingExample solo = generate_example(42, i, c);
    EXPECT_EQ(solo.cvs.v1, a[i].cvs.v1);
  }
  const auto other = generate_dataset(2, 43, c, 1);
  EXPECT_NE(other[0].cvs.v1, a[0].cvs.v1);
  std::vector<std::size_t> order;
  generate_dataset(5, 1, c, 4, [&](std::size_t i, TrainingExample&&) { order.push_back(i); });
  EXPECT_EQ(order, (std::vector<std::size_t>{0, 1, 2, 3, 4}));
}

TEST(GenerateDataset, SinkErrorsPropagate) {
  const DatagenConfig c = small_config();
  EXPECT_THROW(generate_dataset(4, 1, c, 2,
                                [](std::size_t i, TrainingExample&&) {
                                  if (i == 1) throw IoError("disk full");
                                }),
               IoError);
  EXPECT_THROW(generate_dataset(0, 1, c, 1), InvalidInput);
}

TEST(TrainSplit, FirstEightyPercent) {
  EXPECT_EQ(train_count(10), 8u);
  EXPECT_EQ(train_count(200), 160u);
  EXPECT_EQ(train_count(10000), 8000u);
  EXPECT_EQ(train_count(3), 2u);
}

TEST(DatasetFile, RoundTripAtFloatPrecision) {
  const DatagenConfig c = small_config();
  const auto data = generate_dataset(3, 5, c, 1);
  const fs::path path = temp_file("rt.cfvd");
  write_dataset(path, data);
  EXPECT_EQ(fs::file_size(path), 4 + 2 + 8 + 3 * (4 + 4 + 4 + 4 * 1326 * 4u));
  const auto back = read_dataset(path);
  ASSERT_EQ(back.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(back[i].spec.board, data[i].spec.board);
    EXPECT_EQ(back[i].spec.pot, static_cast<float>(data[i].spec.pot));
    for (std::size_t h = 0; h < kNumHands; ++h) {
      ASSERT_EQ(back[i].cvs.v2[h], static_cast<float>(data[i].cvs.v2[h]));
      ASSERT_EQ(back[i].spec.range1.probs[h], static_cast<float>(data[i].spec.range1.probs[h]));
    }
  }
  // writing the same records again gives the same bytes
  const fs::path again = temp_file("rt2.cfvd");
  write_dataset(again, data);
  std::ifstream x(path, std::ios::binary), y(again, std::ios::binary);
  EXPECT_TRUE(std::equal(std::istreambuf_iterator<char>(x), {}, std::istreambuf_iterator<char>(y)));
}

TEST(DatasetFile, Errors) {
  const DatagenConfig c = small_config();
  const auto data = generate_dataset(2, 6, c, 1);
  const fs::path path = temp_file("short.cfvd");
  {
    DatasetWriter w(path, 3);
    w.write(data[0]);
    EXPECT_THROW(w.close(), InvalidInput);
  }
  write_dataset(path, data);
  fs::resize_file(path, fs::file_size(path) - 100);
  EXPECT_THROW(read_dataset(path), IoError);
  EXPECT_THROW(read_dataset(temp_file("missing.cfvd")), IoError);
  std::ofstream(temp_file("junk.cfvd")) << "not a dataset";
  EXPECT_THROW(read_dataset(temp_file("junk.cfvd")), IoError);
}

TEST(DatasetFile, CsvHasOneRowPerExample) {
  const auto data = generate_dataset(2, 7, small_config(), 1);
  const fs::path path = temp_file("d.csv");
  write_dataset_csv(path, data);
  std::ifstream in(path);
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) ++lines;
  EXPECT_EQ(lines, 3);
}

}  // namespace
}  // namespace cfvn
