#include "cfvn/strength.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "cfvn/error.hpp"
#include "naive_eval.hpp"

namespace cfvn {
namespace {

std::vector<int> cards_of(const Board& b) {
  std::vector<int> out;
  for (Card c : b.cards()) out.push_back(c.index());
  return out;
}

double naive_hs(const Board& board5, HandIndex hero, const Deck& deck) {
  auto [a, b] = hand_cards(hero);
  auto mine = cards_of(board5);
  mine.push_back(a.index());
  mine.push_back(b.index());
  const naive::Rank me = naive::rank_best(mine);
  double score = 0.0, n = 0.0;
  for (HandIndex opp : valid_hands(board5, deck)) {
    if (hand_mask(opp) & hand_mask(hero)) continue;
    auto [c, d] = hand_cards(opp);
    auto theirs = cards_of(board5);
    theirs.push_back(c.index());
    theirs.push_back(d.index());
    const naive::Rank them = naive::rank_best(theirs);
    score += me > them ? 1.0 : me == them ? 0.5 : 0.0;
    n += 1.0;
  }
  return score / n;
}

TEST(Strength, HandStrengthMatchesNaiveEnumeration) {
  const Board board = Board::parse("AsKd7c2h9s");
  const auto hands = valid_hands(board);
  for (std::size_t i = 0; i < hands.size(); i += 97) {
    EXPECT_NEAR(hand_strength(board, hands[i]), naive_hs(board, hands[i], Deck::full()), 1e-12);
  }
  const auto all = hand_strengths(board);
  for (std::size_t i = 0; i < hands.size(); i += 131)
    EXPECT_DOUBLE_EQ(all[hands[i].value], hand_strength(board, hands[i]));
  EXPECT_EQ(all[hand_index(Card::parse("As"), Card::parse("3c")).value], 0.0);
}

TEST(Strength, NutsAndTiesOnKnownBoards) {
  // Broadway on board: every hand chops unless it makes a flush
  const Board broadway = Board::parse("AsKdQcJhTc");
  EXPECT_DOUBLE_EQ(hand_strength(broadway, hand_index(Card::parse("2d"), Card::parse("3h"))),
                   naive_hs(broadway, hand_index(Card::parse("2d"), Card::parse("3h")), Deck::full()));
  const Board b = Board::parse("AsKsQsJs2d");
  EXPECT_DOUBLE_EQ(hand_strength(b, hand_index(Card::parse("Ts"), Card::parse("3c"))), 1.0);
}

TEST(Strength, ExpectedStatisticsMatchRollout) {
  for (const char* text : {"AsKd7c2h", "9h8h7d2c"}) {
    const Board board4 = Board::parse(text);
    const auto hands = valid_hands(board4);
    for (std::size_t i = 0; i < hands.size(); i += 211) {
      double e = 0.0, e2 = 0.0, n = 0.0;
      const Deck deck = Deck::full();
      for (Card river : deck.cards()) {
        if (board4.contains(river) || (hand_mask(hands[i]) & river.mask())) continue;
        const double hs = naive_hs(board4.with(river), hands[i], Deck::full());
        e += hs;
        e2 += hs * hs;
        n += 1.0;
      }
      EXPECT_NEAR(expected_hs(board4, hands[i]), e / n, 1e-12);
      EXPECT_NEAR(expected_hs2(board4, hands[i]), e2 / n, 1e-12);
    }
  }
}

TEST(Strength, ShortDeckUsesOnlyShortDeckOpponents) {
  const Deck deck = Deck::parse("short20");
  const Board board = Board::parse("AsKdJcThQh");
  const auto hands = valid_hands(board, deck);
  ASSERT_EQ(hands.size(), 105u);
  for (std::size_t i = 0; i < hands.size(); i += 13) {
    EXPECT_NEAR(hand_strength(board, hands[i], deck), naive_hs(board, hands[i], deck), 1e-12);
  }
}

TEST(Strength, TurnStrengthAgreesWithFreeFunctions) {
  const Board board4 = Board::parse("Td9d4s4c");
  const TurnStrength ts(board4);
  EXPECT_EQ(ts.rivers().size(), 48u);
  EXPECT_EQ(ts.hands().size(), 1128u);
  for (std::size_t i = 0; i < ts.hands().size(); i += 37) {
    const HandIndex h = ts.hands()[i];
    EXPECT_NEAR(ts.ehs(h), expected_hs(board4, h), 1e-12);
    EXPECT_NEAR(ts.ehs2(h), expected_hs2(board4, h), 1e-12);
    // Jensen
    EXPECT_GE(ts.ehs2(h) + 1e-15, ts.ehs(h) * ts.ehs(h));
  }
  EXPECT_THROW(ts.ehs(hand_index(Card::parse("Td"), Card::parse("2c"))), InvalidInput);
}

TEST(Strength, HistogramIsADistributionNearTheMean) {
  const Board board4 = Board::parse("AsKd7c2h");
  const TurnStrength ts(board4);
  for (std::size_t i = 0; i < ts.hands().size(); i += 53) {
    const HandIndex h = ts.hands()[i];
    const HsHistogram hist = ts.histogram(h, 50);
    ASSERT_EQ(hist.size(), 50u);
    double total = 0.0;
    for (double x : hist.bins) {
      EXPECT_GE(x, 0.0);
      total += x;
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
    EXPECT_NEAR(hist.mean(), ts.ehs(h), 0.5 / 50 + 1e-12);
    EXPECT_EQ(hist.bins, hs_histogram(board4, h, 50).bins);
  }
}

}  // namespace
}  // namespace cfvn
