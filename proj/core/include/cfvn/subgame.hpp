#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cfvn/cards.hpp"

namespace cfvn {

// A probability distribution over the 1326 private hands.
struct Range {
  std::vector<double> probs = std::vector<double>(kNumHands, 0.0);

  double operator[](HandIndex h) const { return probs[h.value]; }
  double total() const;
};

// One turn situation: board, pot, per-player behind stack and both ranges.
struct SubgameSpec {
  Board board;
  double pot = 1.0;
  double stack = 0.0;
  Range range1;
  Range range2;
};

// Throws InvalidInput unless the ranges are normalized, non-negative and zero
// on hands blocked by the board or missing from the deck.
void validate(const SubgameSpec& spec, const Deck& deck = Deck::full());

// Per-hand counterfactual values at the subgame root, in units of the pot.
struct CvPair {
  std::vector<double> v1 = std::vector<double>(kNumHands, 0.0);
  std::vector<double> v2 = std::vector<double>(kNumHands, 0.0);
};

struct ActionConfig {
  // Bet and raise sizes as fractions of the pot after calling.
  std::vector<double> bet_fractions{1.0};
  bool all_in = true;
  // Bets plus raises allowed per street.
  int raise_cap = 3;
};

enum class NodeKind : std::uint8_t { kDecision, kChance, kFold, kShowdown };
enum class ActionKind : std::uint8_t { kFold, kCheckCall, kBet, kAllIn };

struct Action {
  ActionKind kind;
  // Actor's total commitment after the action.
  double commitment;
};

struct TreeNode {
  NodeKind kind = NodeKind::kDecision;
  // Acting player for decisions, folding player for folds; 0 or 1.
  int player = -1;
  int street = 0;
  // Each player's total chips in the pot, including half the starting pot.
  std::array<double, 2> committed{};
  // Board state used for showdowns and live-hand masks below this node.
  int board_state = 0;
  std::vector<int> children;
  std::vector<Action> actions;
  // Chance nodes: index into BettingTree::chance_cards per child.
  std::vector<int> outcomes;
};

struct BettingTree {
  std::vector<TreeNode> nodes;
  std::vector<Card> chance_cards;
  double pot = 0.0;
  double stack = 0.0;

  const TreeNode& root() const { return nodes.front(); }
  std::size_t count(NodeKind kind) const;
  // Longest root-to-leaf path, in edges.
  int depth() const;
};

// Betting over one street, or two streets separated by a chance node dealing
// one of chance_cards. A street where nobody can bet is skipped.
BettingTree build_tree(double pot, double stack, const ActionConfig& config, std::span<const Card> chance_cards = {});

// Turn and river betting with the river dealt from the deck minus the board.
BettingTree build_turn_tree(const SubgameSpec& spec, const ActionConfig& config, const Deck& deck = Deck::full());

// The private-information side of a subgame: a list of hand slots with their
// cards, and per board state which slots are live and how they rank.
struct BoardState {
  std::vector<std::uint8_t> live;
  std::vector<std::uint32_t> strength;
  // Live slots by ascending strength.
  std::vector<int> order;
};

struct HandSpace {
  int cards_per_hand = 2;
  // Slot -> card indices (second is unused for one-card hands).
  std::vector<std::array<std::uint8_t, 2>> cards;
  // Slot -> external hand id (HandIndex value for Hold'em).
  std::vector<std::uint16_t> ids;
  // State 0 is the root board; state 1 + i follows chance card i.
  std::vector<BoardState> states;
  // Number of chance outcomes compatible with any fixed pair of hands.
  int outcomes_per_deal = 1;

  std::size_t size() const { return cards.size(); }
};

// Slots are the hands dealable on board4; states 1.. are the river boards in
// deck order, matching build_turn_tree's chance cards.
HandSpace turn_hand_space(const Board& board4, const Deck& deck = Deck::full());

// Three one-card hands J < Q < K with cards 0, 1, 2 and no chance node.
HandSpace kuhn_hand_space();

// Kuhn poker: ante 1 each, one bet of 1, single street.
BettingTree kuhn_tree();

std::vector<double> to_slots(const Range& range, const HandSpace& space);
std::vector<double> from_slots(std::span<const double> slots, const HandSpace& space);

std::string describe(const Action& action);

}  // namespace cfvn
