#pragma once

#include <array>
#include <vector>

#include "cfvn/cards.hpp"

namespace cfvn {

// Discretized distribution of river hand strength. Bin b covers [b/B, (b+1)/B);
// HS = 1 falls into the top bin.
struct HsHistogram {
  std::vector<double> bins;
  std::size_t size() const { return bins.size(); }
  // Mass-weighted mean of bin centers.
  double mean() const;
};

// Probability of beating a uniformly random opponent hand on a five-card board,
// ties counted as half. Opponent hands exclude board and hero cards.
double hand_strength(const Board& board5, HandIndex hand, const Deck& deck = Deck::full());

// Hand strength of every hand on a five-card board. Entries for hands not
// dealable on this board are 0.
std::array<double, kNumHands> hand_strengths(const Board& board5, const Deck& deck = Deck::full());

// Roll-out statistics over every river card of a four-card board.
double expected_hs(const Board& board4, HandIndex hand, const Deck& deck = Deck::full());
double expected_hs2(const Board& board4, HandIndex hand, const Deck& deck = Deck::full());
HsHistogram hs_histogram(const Board& board4, HandIndex hand, int bins, const Deck& deck = Deck::full());

// All river hand strengths for one turn board, computed once and shared by
// the per-hand statistics. Immutable after construction.
class TurnStrength {
 public:
  TurnStrength(const Board& board4, const Deck& deck = Deck::full());

  const Board& board() const { return board_; }
  const Deck& deck() const { return deck_; }
  const std::vector<HandIndex>& hands() const { return hands_; }
  std::span<const Card> rivers() const { return rivers_; }

  // HS of a hand once river card rivers()[r] is dealt.
  double river_hs(std::size_t r, HandIndex hand) const { return river_hs_[r][hand.value]; }

  double ehs(HandIndex hand) const;
  double ehs2(HandIndex hand) const;
  HsHistogram histogram(HandIndex hand, int bins) const;

 private:
  void check(HandIndex hand) const;

  Board board_;
  Deck deck_;
  std::vector<HandIndex> hands_;
  std::vector<Card> rivers_;
  std::vector<std::array<double, kNumHands>> river_hs_;
};

}  // namespace cfvn
