#pragma once

#include <random>

#include "cfvn/subgame.hpp"

namespace cfvn::test {

// Normalized random range over the dealable hands, with some hands at zero.
inline Range random_range(std::mt19937_64& rng, const Board& board, const Deck& deck, double zero_share = 0.2) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Range r;
  double total = 0.0;
  for (HandIndex h : valid_hands(board, deck)) {
    const double x = u(rng) < zero_share ? 0.0 : u(rng);
    r.probs[h.value] = x;
    total += x;
  }
  for (double& x : r.probs) x /= total;
  return r;
}

inline SubgameSpec random_spec(std::mt19937_64& rng, const char* board, const Deck& deck, double pot, double stack) {
  SubgameSpec s;
  s.board = Board::parse(board);
  s.pot = pot;
  s.stack = stack;
  s.range1 = random_range(rng, s.board, deck);
  s.range2 = random_range(rng, s.board, deck);
  return s;
}

}  // namespace cfvn::test
