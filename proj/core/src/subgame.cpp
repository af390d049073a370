#include "cfvn/subgame.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cfvn/error.hpp"

namespace cfvn {
namespace {

constexpr double kChipEps = 1e-9;

class TreeBuilder {
 public:
  TreeBuilder(BettingTree& tree, const ActionConfig& config, double max_commit)
      : tree_(tree), config_(config), max_commit_(max_commit) {}

  int start_street(std::array<double, 2> c, int street, int state) {
    const bool can_bet =
        config_.raise_cap >= 1 && max_commit_ - c[0] > kChipEps && (!config_.bet_fractions.empty() || config_.all_in);
    if (!can_bet) return end_street(c, street, state);
    return decision(c, street, state, 0, 0, false);
  }

 private:
  int add(TreeNode node) {
    tree_.nodes.push_back(std::move(node));
    return static_cast<int>(tree_.nodes.size() - 1);
  }

  int terminal(NodeKind kind, int player, std::array<double, 2> c, int street, int state) {
    TreeNode n;
    n.kind = kind;
    n.player = player;
    n.committed = c;
    n.street = street;
    n.board_state = state;
    return add(std::move(n));
  }

  int end_street(std::array<double, 2> c, int street, int state) {
    if (street == 0 && !tree_.chance_cards.empty()) {
      TreeNode n;
      n.kind = NodeKind::kChance;
      n.committed = c;
      n.street = street;
      n.board_state = state;
      const int id = add(std::move(n));
      std::vector<int> children;
      for (std::size_t i = 0; i < tree_.chance_cards.size(); ++i) {
        children.push_back(start_street(c, 1, 1 + static_cast<int>(i)));
      }
      tree_.nodes[id].children = std::move(children);
      tree_.nodes[id].outcomes.resize(tree_.chance_cards.size());
      std::iota(tree_.nodes[id].outcomes.begin(), tree_.nodes[id].outcomes.end(), 0);
      return id;
    }
    return terminal(NodeKind::kShowdown, -1, c, street, state);
  }

  int decision(std::array<double, 2> c, int street, int state, int p, int bets, bool opened) {
    TreeNode n;
    n.kind = NodeKind::kDecision;
    n.player = p;
    n.committed = c;
    n.street = street;
    n.board_state = state;
    const int id = add(std::move(n));

    const int o = 1 - p;
    const bool facing = c[o] - c[p] > kChipEps;
    std::vector<Action> actions;
    std::vector<int> children;

    if (facing) {
      actions.push_back({ActionKind::kFold, c[p]});
      children.push_back(terminal(NodeKind::kFold, p, c, street, state));
    }

    std::array<double, 2> called = c;
    called[p] = c[o];
    actions.push_back({ActionKind::kCheckCall, called[p]});
    if (facing || opened) {
      children.push_back(end_street(called, street, state));
    } else {
      children.push_back(decision(called, street, state, o, bets, true));
    }

    if (bets < config_.raise_cap && max_commit_ - c[o] > kChipEps) {
      std::vector<double> sizes;
      for (double f : config_.bet_fractions) {
        const double target = c[o] + f * 2.0 * c[o];
        sizes.push_back(target >= max_commit_ - kChipEps ? max_commit_ : target);
      }
      if (config_.all_in) sizes.push_back(max_commit_);
      std::sort(sizes.begin(), sizes.end());
      sizes.erase(
          std::unique(sizes.begin(), sizes.end(), [](double a, double b) { return std::abs(a - b) <= kChipEps; }),
          sizes.end());
      for (double target : sizes) {
        if (target - c[o] <= kChipEps) continue;
        std::array<double, 2> raised = c;
        raised[p] = target;
        const bool all_in = target >= max_commit_ - kChipEps;
        actions.push_back({all_in ? ActionKind::kAllIn : ActionKind::kBet, target});
        children.push_back(decision(raised, street, state, o, bets + 1, true));
      }
    }

    tree_.nodes[id].actions = std::move(actions);
    tree_.nodes[id].children = std::move(children);
    return id;
  }

  BettingTree& tree_;
  const ActionConfig& config_;
  double max_commit_;
};

}  // namespace

double Range::total() const { return std::accumulate(probs.begin(), probs.end(), 0.0); }

void validate(const SubgameSpec& spec, const Deck& deck) {
  if (spec.board.size() != 4) throw InvalidInput("subgame board must have four cards");
  if ((spec.board.mask() & ~deck.mask()) != 0) throw InvalidInput("board card outside the deck");
  if (!(spec.pot > 0.0) || !std::isfinite(spec.pot)) throw InvalidInput("pot must be positive");
  if (!(spec.stack >= 0.0) || !std::isfinite(spec.stack)) throw InvalidInput("stack must be non-negative");
  const CardMask dead = spec.board.mask() | ~deck.mask();
  for (const Range* r : {&spec.range1, &spec.range2}) {
    if (r->probs.size() != kNumHands) throw InvalidInput("range must have 1326 entries");
    double total = 0.0;
    for (std::uint16_t h = 0; h < kNumHands; ++h) {
      const double p = r->probs[h];
      if (!(p >= 0.0) || !std::isfinite(p)) throw InvalidInput("range entries must be finite and >= 0");
      if (p != 0.0 && (hand_mask(HandIndex{h}) & dead) != 0) {
        throw InvalidInput("range has mass on a blocked hand");
      }
      total += p;
    }
    if (total == 0.0) throw InvalidInput("range is all zeros");
    if (std::abs(total - 1.0) > 1e-6) throw InvalidInput("range does not sum to 1");
  }
}

std::size_t BettingTree::count(NodeKind kind) const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [kind](const TreeNode& n) { return n.kind == kind; }));
}

int BettingTree::depth() const {
  std::vector<int> d(nodes.size(), 0);
  int best = 0;
  // children always follow their parent in the node list
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (int c : nodes[i].children) {
      d[static_cast<std::size_t>(c)] = d[i] + 1;
      best = std::max(best, d[i] + 1);
    }
  }
  return best;
}

BettingTree build_tree(double pot, double stack, const ActionConfig& config, std::span<const Card> chance_cards) {
  if (!(pot > 0.0)) throw InvalidInput("pot must be positive");
  if (!(stack >= 0.0)) throw InvalidInput("stack must be non-negative");
  for (double f : config.bet_fractions) {
    if (!(f > 0.0)) throw InvalidInput("bet fractions must be positive");
  }
  BettingTree tree;
  tree.pot = pot;
  tree.stack = stack;
  tree.chance_cards.assign(chance_cards.begin(), chance_cards.end());
  TreeBuilder builder(tree, config, pot / 2.0 + stack);
  builder.start_street({pot / 2.0, pot / 2.0}, 0, 0);
  return tree;
}

BettingTree build_turn_tree(const SubgameSpec& spec, const ActionConfig& config, const Deck& deck) {
  if (spec.board.size() != 4) throw InvalidInput("turn tree needs a four-card board");
  std::vector<Card> rivers;
  for (Card c : deck.cards()) {
    if (!spec.board.contains(c)) rivers.push_back(c);
  }
  return build_tree(spec.pot, spec.stack, config, rivers);
}

HandSpace turn_hand_space(const Board& board4, const Deck& deck) {
  if (board4.size() != 4) throw InvalidInput("turn hand space needs a four-card board");
  HandSpace space;
  space.cards_per_hand = 2;
  const auto& table = hand_card_table();
  for (HandIndex h : valid_hands(board4, deck)) {
    space.cards.push_back(table[h.value]);
    space.ids.push_back(h.value);
  }
  const std::size_t n = space.size();
  BoardState root;
  root.live.assign(n, 1);
  root.strength.assign(n, 0);
  space.states.push_back(std::move(root));

  int rivers = 0;
  for (Card river : deck.cards()) {
    if (board4.contains(river)) continue;
    ++rivers;
    const CardMask board5 = board4.mask() | river.mask();
    BoardState s;
    s.live.assign(n, 0);
    s.strength.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const CardMask hm = hand_mask(HandIndex{space.ids[i]});
      if (hm & river.mask()) continue;
      s.live[i] = 1;
      s.strength[i] = evaluate(board5 | hm).value;
      s.order.push_back(static_cast<int>(i));
    }
    std::stable_sort(s.order.begin(), s.order.end(), [&](int a, int b) {
      return s.strength[static_cast<std::size_t>(a)] < s.strength[static_cast<std::size_t>(b)];
    });
    space.states.push_back(std::move(s));
  }
  space.outcomes_per_deal = rivers - 4;
  return space;
}

HandSpace kuhn_hand_space() {
  HandSpace space;
  space.cards_per_hand = 1;
  for (std::uint8_t c = 0; c < 3; ++c) {
    space.cards.push_back({c, c});
    space.ids.push_back(c);
  }
  BoardState s;
  s.live.assign(3, 1);
  s.strength = {0, 1, 2};
  s.order = {0, 1, 2};
  space.states.push_back(std::move(s));
  space.outcomes_per_deal = 1;
  return space;
}

BettingTree kuhn_tree() {
  ActionConfig config;
  config.bet_fractions = {0.5};
  config.all_in = false;
  config.raise_cap = 1;
  return build_tree(2.0, 1.0, config);
}

std::vector<double> to_slots(const Range& range, const HandSpace& space) {
  std::vector<double> out(space.size());
  for (std::size_t i = 0; i < space.size(); ++i) out[i] = range.probs.at(space.ids[i]);
  return out;
}

std::vector<double> from_slots(std::span<const double> slots, const HandSpace& space) {
  std::vector<double> out(kNumHands, 0.0);
  for (std::size_t i = 0; i < space.size(); ++i) out[space.ids[i]] = slots[i];
  return out;
}

std::string describe(const Action& action) {
  switch (action.kind) {
    case ActionKind::kFold:
      return "fold";
    case ActionKind::kCheckCall:
      return "call";
    case ActionKind::kBet:
      return "bet";
    case ActionKind::kAllIn:
      return "allin";
  }
  return "?";
}

}  // namespace cfvn
