#include "cfvn/cfr.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <random>

#include "cfvn/error.hpp"
#include "test_util.hpp"

namespace cfvn {
namespace {

double p1_value(const HandSpace& space, std::span<const double> r1, std::span<const double> r2, const SlotValues& v) {
  double s = 0.0;
  for (std::size_t i = 0; i < space.size(); ++i) s += r1[i] * v[0][i];
  return s / joint_mass(space, r1, r2);
}

StrategyProfile random_profile(const BettingTree& tree, const HandSpace& space, std::mt19937_64& rng) {
  StrategyProfile s = uniform_strategy(tree, space);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  for (std::size_t id = 0; id < tree.nodes.size(); ++id) {
    const std::size_t a = tree.nodes[id].children.size();
    if (tree.nodes[id].kind != NodeKind::kDecision) continue;
    for (std::size_t i = 0; i < space.size(); ++i) {
      double total = 0.0;
      for (std::size_t k = 0; k < a; ++k) total += s.probs[id][k * space.size() + i] = u(rng);
      for (std::size_t k = 0; k < a; ++k) s.probs[id][k * space.size() + i] /= total;
    }
  }
  return s;
}

// Expected chips for player 1 given both slots, walking the tree deal by deal.
double deal_value(const BettingTree& tree, const HandSpace& space, const StrategyProfile& s, std::size_t i,
                  std::size_t j) {
  const auto disjoint = [&](std::size_t a, int card) { return space.cards[a][0] != card && space.cards[a][1] != card; };
  std::function<double(int)> walk = [&](int id) -> double {
    const TreeNode& n = tree.nodes[static_cast<std::size_t>(id)];
    switch (n.kind) {
      case NodeKind::kFold:
        return n.player == 0 ? -n.committed[0] : n.committed[1];
      case NodeKind::kShowdown: {
        const auto& st = space.states[static_cast<std::size_t>(n.board_state)];
        const auto a = st.strength[i], b = st.strength[j];
        return n.committed[0] * ((a > b) - (a < b));
      }
      case NodeKind::kChance: {
        double total = 0.0;
        int count = 0;
        for (std::size_t c = 0; c < n.children.size(); ++c) {
          const int card = tree.chance_cards[static_cast<std::size_t>(n.outcomes[c])].index();
          if (!disjoint(i, card) || !disjoint(j, card)) continue;
          total += walk(n.children[c]);
          ++count;
        }
        return total / count;
      }
      case NodeKind::kDecision: {
        const std::size_t slot = n.player == 0 ? i : j;
        double v = 0.0;
        for (std::size_t a = 0; a < n.children.size(); ++a) {
          v += s.prob(id, static_cast<int>(a), slot) * walk(n.children[a]);
        }
        return v;
      }
    }
    return 0.0;
  };
  return walk(0);
}

TEST(Evaluate, MatchesDealByDealEnumeration) {
  std::mt19937_64 rng(11);
  const Deck deck = Deck::parse("short20");
  const SubgameSpec spec = test::random_spec(rng, "AsKdJcTh", deck, 20, 90);
  const BettingTree tree = build_turn_tree(spec, {.bet_fractions = {1.0}, .all_in = true, .raise_cap = 2}, deck);
  const HandSpace space = turn_hand_space(spec.board, deck);
  const auto r1 = to_slots(spec.range1, space), r2 = to_slots(spec.range2, space);
  const StrategyProfile s = random_profile(tree, space, rng);
  const SlotValues v = evaluate_strategy(tree, space, r1, r2, s);

  const auto share = [&](std::size_t a, std::size_t b) {
    return space.cards[a][0] != space.cards[b][0] && space.cards[a][0] != space.cards[b][1] &&
           space.cards[a][1] != space.cards[b][0] && space.cards[a][1] != space.cards[b][1];
  };
  double joint = 0.0, value = 0.0;
  for (std::size_t i = 0; i < space.size(); ++i) {
    double slot_cv1 = 0.0, slot_cv2 = 0.0;
    for (std::size_t j = 0; j < space.size(); ++j) {
      if (!share(i, j)) continue;
      const double dv = deal_value(tree, space, s, i, j);
      slot_cv1 += r2[j] * dv;
      joint += r1[i] * r2[j];
      value += r1[i] * r2[j] * dv;
      slot_cv2 -= r1[j] * deal_value(tree, space, s, j, i);
    }
    if (i % 10 == 0) {
      ASSERT_NEAR(v[0][i], slot_cv1, 1e-9) << "slot " << i;
      ASSERT_NEAR(v[1][i], slot_cv2, 1e-9) << "slot " << i;
    }
  }
  EXPECT_NEAR(joint, joint_mass(space, r1, r2), 1e-12);
  EXPECT_NEAR(p1_value(space, r1, r2, v), value / joint, 1e-9);
}

TEST(Evaluate, RootValuesAreZeroSum) {
  std::mt19937_64 rng(12);
  const SubgameSpec spec = test::random_spec(rng, "AsKd7c2h", Deck::full(), 8, 96);
  const BettingTree tree = build_turn_tree(spec, {.bet_fractions = {1.0}, .all_in = false, .raise_cap = 1});
  const HandSpace space = turn_hand_space(spec.board);
  const auto r1 = to_slots(spec.range1, space), r2 = to_slots(spec.range2, space);
  const SlotValues v = evaluate_strategy(tree, space, r1, r2, random_profile(tree, space, rng));
  double z = 0.0;
  for (std::size_t i = 0; i < space.size(); ++i) z += r1[i] * v[0][i] + r2[i] * v[1][i];
  EXPECT_NEAR(z, 0.0, 1e-12);
}

// Best response to a fixed profile, by trying every pure strategy of the
// responder in Kuhn poker (4 choices per card, 3 cards).
TEST(BestResponse, MatchesPureStrategyEnumerationInKuhn) {
  std::mt19937_64 rng(13);
  const BettingTree tree = kuhn_tree();
  const HandSpace space = kuhn_hand_space();
  const std::vector<double> r{1.0 / 3, 1.0 / 3, 1.0 / 3};
  for (int trial = 0; trial < 20; ++trial) {
    const StrategyProfile fixed = random_profile(tree, space, rng);
    const BestResponse br = best_response(tree, space, r, r, fixed);
    for (int player = 0; player < 2; ++player) {
      std::vector<int> nodes;
      for (std::size_t id = 0; id < tree.nodes.size(); ++id) {
        if (tree.nodes[id].kind == NodeKind::kDecision && tree.nodes[id].player == player)
          nodes.push_back(static_cast<int>(id));
      }
      ASSERT_EQ(nodes.size(), 2u);
      double best = -1e300;
      for (int code = 0; code < 64; ++code) {
        StrategyProfile s = fixed;
        for (std::size_t card = 0; card < 3; ++card) {
          const int choice = (code >> (2 * card)) & 3;
          for (std::size_t k = 0; k < 2; ++k) {
            const auto id = static_cast<std::size_t>(nodes[k]);
            const int a = (choice >> k) & 1;
            s.probs[id][0 * 3 + card] = a == 0 ? 1.0 : 0.0;
            s.probs[id][1 * 3 + card] = a == 1 ? 1.0 : 0.0;
          }
        }
        const SlotValues v = evaluate_strategy(tree, space, r, r, s);
        double val = 0.0;
        for (std::size_t i = 0; i < 3; ++i) val += r[i] * v[static_cast<std::size_t>(player)][i];
        best = std::max(best, val / joint_mass(space, r, r));
      }
      EXPECT_NEAR(player == 0 ? br.br1 : br.br2, best, 1e-12);
    }
  }
}

TEST(Cfr, KuhnConvergesToKnownValue) {
  const BettingTree tree = kuhn_tree();
  const HandSpace space = kuhn_hand_space();
  const std::vector<double> r{1.0 / 3, 1.0 / 3, 1.0 / 3};
  for (bool plus : {true, false}) {
    CfrSolver solver(tree, space, r, r, {.iterations = 20000, .averaging_start = plus ? 100 : 0, .plus = plus});
    solver.run(20000);
    EXPECT_EQ(solver.iterations_done(), 20000);
    EXPECT_NEAR(p1_value(space, r, r, solver.average_values()), -1.0 / 18, 1e-3) << "plus " << plus;
    const BestResponse br = best_response(tree, space, r, r, solver.average_strategy());
    EXPECT_LT(br.exploitability(), 2e-3) << "plus " << plus;
    EXPECT_GE(br.exploitability(), -1e-12);
  }
}

TEST(Cfr, ExploitabilityShrinksWithIterations) {
  std::mt19937_64 rng(14);
  const Deck deck = Deck::parse("short20");
  const SubgameSpec spec = test::random_spec(rng, "AsKdJcTh", deck, 16, 92);
  const BettingTree tree = build_turn_tree(spec, {}, deck);
  const HandSpace space = turn_hand_space(spec.board, deck);
  const auto r1 = to_slots(spec.range1, space), r2 = to_slots(spec.range2, space);
  CfrSolver solver(tree, space, r1, r2, {.iterations = 400, .averaging_start = 0, .plus = true});
  solver.run(25);
  const double early = best_response(tree, space, r1, r2, solver.average_strategy()).exploitability();
  solver.run(375);
  const double late = best_response(tree, space, r1, r2, solver.average_strategy()).exploitability();
  EXPECT_LT(late, early / 4);
  EXPECT_LT(late / spec.pot, 0.01);
}

TEST(SolveTurn, ValuesAreInPotsAndZeroSum) {
  std::mt19937_64 rng(15);
  const Deck deck = Deck::parse("short20");
  const SubgameSpec spec = test::random_spec(rng, "QsJhTdAc", deck, 40, 80);
  const BettingTree tree = build_turn_tree(spec, {}, deck);
  const TurnSolution a = solve_turn(tree, spec, {.iterations = 200, .averaging_start = 100}, deck);
  const TurnSolution b = solve_turn(tree, spec, {.iterations = 200, .averaging_start = 100}, deck);
  EXPECT_EQ(a.cvs.v1, b.cvs.v1);
  EXPECT_EQ(a.cvs.v2, b.cvs.v2);
  double z = 0.0;
  for (int h = 0; h < kNumHands; ++h) {
    z += spec.range1.probs[static_cast<std::size_t>(h)] * a.cvs.v1[static_cast<std::size_t>(h)] +
         spec.range2.probs[static_cast<std::size_t>(h)] * a.cvs.v2[static_cast<std::size_t>(h)];
    // a hand can lose at most what it put in, measured against the pot
    EXPECT_LE(std::abs(a.cvs.v1[static_cast<std::size_t>(h)]), (spec.pot / 2 + spec.stack) / spec.pot);
  }
  EXPECT_NEAR(z, 0.0, 1e-12);
  EXPECT_EQ(a.cvs.v1[hand_index(Card::parse("Ac"), Card::parse("Ks")).value], 0.0);
}

TEST(SolveTurn, RejectsMismatchedInputs) {
  std::mt19937_64 rng(16);
  const Deck deck = Deck::parse("short20");
  const SubgameSpec spec = test::random_spec(rng, "AsKdJcTh", deck, 20, 90);
  const BettingTree full_tree = build_turn_tree(spec, {});
  EXPECT_THROW(solve_turn(full_tree, spec, {.iterations = 10, .averaging_start = 5}, deck), InvalidInput);
  const BettingTree tree = build_turn_tree(spec, {}, deck);
  EXPECT_THROW(solve_turn(tree, spec, {.iterations = 10, .averaging_start = 10}, deck), InvalidInput);
  EXPECT_THROW(solve_turn(tree, spec, {.iterations = 0, .averaging_start = 0}, deck), InvalidInput);
  const HandSpace space = turn_hand_space(spec.board, deck);
  std::vector<double> zeros(space.size(), 0.0), ones(space.size(), 1.0);
  EXPECT_THROW(CfrSolver(tree, space, zeros, ones, {.iterations = 10, .averaging_start = 0}), InvalidInput);
}

}  // namespace
}  // namespace cfvn
