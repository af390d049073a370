#include "cfvn/subgame.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "cfvn/error.hpp"
#include "test_util.hpp"

namespace cfvn {
namespace {

ActionConfig three_actions() { return {.bet_fractions = {1.0}, .all_in = false, .raise_cap = 1}; }

TEST(Tree, ShortDeckCapOneNodeCount) {
  // per street: 4 decisions, 2 folds, 3 ways to close it; 16 rivers follow
  // each of the 3 turn closings, each river street ending in 3 showdowns
  SubgameSpec spec;
  spec.board = Board::parse("AsKdJcTh");
  spec.pot = 20;
  spec.stack = 1000;
  const BettingTree t = build_turn_tree(spec, three_actions(), Deck::parse("short20"));
  EXPECT_EQ(t.nodes.size(), 441u);
  EXPECT_EQ(t.count(NodeKind::kDecision), 4u + 3 * 16 * 4);
  EXPECT_EQ(t.count(NodeKind::kFold), 2u + 3 * 16 * 2);
  EXPECT_EQ(t.count(NodeKind::kShowdown), 3u * 16 * 3);
  EXPECT_EQ(t.count(NodeKind::kChance), 3u);
  EXPECT_EQ(t.chance_cards.size(), 16u);
  EXPECT_EQ(t.depth(), 7);
}

TEST(Tree, KuhnShape) {
  const BettingTree t = kuhn_tree();
  EXPECT_EQ(t.nodes.size(), 9u);
  EXPECT_EQ(t.count(NodeKind::kDecision), 4u);
  EXPECT_EQ(t.count(NodeKind::kShowdown), 3u);
  EXPECT_EQ(t.count(NodeKind::kFold), 2u);
}

TEST(Tree, BetsCapAtTheStackAndMergeWithAllIn) {
  // pot 20, stack 15: a pot bet (to 30) exceeds the 25 cap and becomes the all-in
  const BettingTree t = build_tree(20.0, 15.0, {.bet_fractions = {1.0}, .all_in = true, .raise_cap = 3});
  const TreeNode& root = t.root();
  ASSERT_EQ(root.actions.size(), 2u);
  EXPECT_EQ(root.actions[1].kind, ActionKind::kAllIn);
  EXPECT_DOUBLE_EQ(root.actions[1].commitment, 25.0);
  for (const TreeNode& n : t.nodes) {
    EXPECT_LE(n.committed[0], 25.0 + 1e-9);
    EXPECT_LE(n.committed[1], 25.0 + 1e-9);
    if (n.kind == NodeKind::kShowdown) EXPECT_DOUBLE_EQ(n.committed[0], n.committed[1]);
  }
}

TEST(Tree, RaiseCapLimitsBetsPerStreet) {
  for (int cap : {1, 2, 3}) {
    const BettingTree t = build_tree(2.0, 1000.0, {.bet_fractions = {1.0}, .all_in = false, .raise_cap = cap});
    int longest = 0;
    std::vector<int> bets(t.nodes.size(), 0);
    for (std::size_t i = 0; i < t.nodes.size(); ++i) {
      const TreeNode& n = t.nodes[i];
      for (std::size_t a = 0; a < n.children.size(); ++a) {
        const int b = bets[i] + (n.actions[a].kind == ActionKind::kBet ? 1 : 0);
        bets[static_cast<std::size_t>(n.children[a])] = b;
        longest = std::max(longest, b);
      }
    }
    EXPECT_EQ(longest, cap);
  }
}

TEST(Tree, NoBettingWhenStacksAreEmpty) {
  SubgameSpec spec;
  spec.board = Board::parse("AsKdJcTh");
  spec.pot = 20;
  spec.stack = 0;
  const BettingTree t = build_turn_tree(spec, {}, Deck::parse("short20"));
  // chance node straight into 16 showdowns
  EXPECT_EQ(t.nodes.size(), 17u);
  EXPECT_EQ(t.root().kind, NodeKind::kChance);
}

TEST(Tree, RejectsBadParameters) {
  EXPECT_THROW(build_tree(0.0, 1.0, {}), InvalidInput);
  EXPECT_THROW(build_tree(1.0, -1.0, {}), InvalidInput);
  EXPECT_THROW(build_tree(1.0, 1.0, {.bet_fractions = {-0.5}}), InvalidInput);
  SubgameSpec spec;
  spec.board = Board::parse("AsKdJc");
  EXPECT_THROW(build_turn_tree(spec, {}), InvalidInput);
}

TEST(HandSpace, TurnSpaces) {
  const HandSpace full = turn_hand_space(Board::parse("AsKd7c2h"));
  EXPECT_EQ(full.size(), 1128u);
  EXPECT_EQ(full.states.size(), 49u);
  EXPECT_EQ(full.outcomes_per_deal, 44);
  const HandSpace s = turn_hand_space(Board::parse("AsKdJcTh"), Deck::parse("short20"));
  EXPECT_EQ(s.size(), 120u);
  EXPECT_EQ(s.states.size(), 17u);
  EXPECT_EQ(s.outcomes_per_deal, 12);
  for (std::size_t st = 1; st < s.states.size(); ++st) {
    int live = 0;
    for (auto x : s.states[st].live) live += x;
    EXPECT_EQ(live, 105);
    EXPECT_EQ(s.states[st].order.size(), 105u);
  }
}

TEST(HandSpace, SlotsRoundTrip) {
  std::mt19937_64 rng(1);
  const Deck deck = Deck::parse("short20");
  const Board board = Board::parse("AsKdJcTh");
  const HandSpace s = turn_hand_space(board, deck);
  const Range r = test::random_range(rng, board, deck);
  EXPECT_EQ(from_slots(to_slots(r, s), s), r.probs);
}

TEST(Spec, Validation) {
  std::mt19937_64 rng(2);
  const Deck deck = Deck::parse("short20");
  SubgameSpec s = test::random_spec(rng, "AsKdJcTh", deck, 10, 95);
  EXPECT_NO_THROW(validate(s, deck));
  SubgameSpec bad = s;
  bad.range1.probs[hand_index(Card::parse("As"), Card::parse("Qs")).value] = 0.1;
  EXPECT_THROW(validate(bad, deck), InvalidInput);
  bad = s;
  for (double& x : bad.range2.probs) x *= 2;
  EXPECT_THROW(validate(bad, deck), InvalidInput);
  bad = s;
  bad.pot = 0;
  EXPECT_THROW(validate(bad, deck), InvalidInput);
  // a deuce is outside the short deck
  bad = s;
  bad.range1.probs[hand_index(Card::parse("2c"), Card::parse("Qs")).value] = 0.1;
  EXPECT_THROW(validate(bad, deck), InvalidInput);
}

}  // namespace
}  // namespace cfvn
