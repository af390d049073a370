#include "cfvn/strength.hpp"

#include <algorithm>
#include <numeric>

#include "cfvn/error.hpp"

namespace cfvn {
namespace {

void require_disjoint(const Board& board, HandIndex hand, const Deck& deck) {
  if (hand.value >= kNumHands) throw InvalidInput("hand index out of range");
  if (board.collides(hand)) throw InvalidInput("hand collides with board " + board.str());
  if ((hand_mask(hand) & ~deck.mask()) != 0) throw InvalidInput("hand uses cards outside the deck");
}

}  // namespace

double HsHistogram::mean() const {
  const double width = 1.0 / static_cast<double>(bins.size());
  double m = 0.0;
  for (std::size_t b = 0; b < bins.size(); ++b) m += bins[b] * (static_cast<double>(b) + 0.5) * width;
  return m;
}

std::array<double, kNumHands> hand_strengths(const Board& board5, const Deck& deck) {
  if (board5.size() != 5) throw InvalidInput("hand strength needs a five-card board");
  const std::vector<HandIndex> hands = valid_hands(board5, deck);
  std::vector<std::pair<HandRank, HandIndex>> ranked;
  ranked.reserve(hands.size());
  for (HandIndex h : hands) ranked.emplace_back(evaluate(board5.mask() | hand_mask(h)), h);
  std::sort(ranked.begin(), ranked.end());

  const auto& cards = hand_card_table();
  const int remaining = deck.size() - 5 - 2;
  const double opponents = remaining * (remaining - 1) / 2.0;

  std::array<double, kNumHands> hs{};
  std::array<int, kNumCards> lower_card{}, eq_card{};
  int lower_total = 0;
  for (std::size_t lo = 0; lo < ranked.size();) {
    std::size_t hi = lo;
    while (hi < ranked.size() && ranked[hi].first == ranked[lo].first) ++hi;
    eq_card.fill(0);
    for (std::size_t i = lo; i < hi; ++i) {
      const auto& c = cards[ranked[i].second.value];
      ++eq_card[c[0]];
      ++eq_card[c[1]];
    }
    const int eq_total = static_cast<int>(hi - lo);
    for (std::size_t i = lo; i < hi; ++i) {
      const auto& c = cards[ranked[i].second.value];
      const int wins = lower_total - lower_card[c[0]] - lower_card[c[1]];
      // the hand itself holds both cards: add it back once, then drop it
      const int ties = eq_total - eq_card[c[0]] - eq_card[c[1]] + 1;
      hs[ranked[i].second.value] = (wins + 0.5 * ties) / opponents;
    }
    for (int c = 0; c < kNumCards; ++c) lower_card[c] += eq_card[c];
    lower_total += eq_total;
    lo = hi;
  }
  return hs;
}

double hand_strength(const Board& board5, HandIndex hand, const Deck& deck) {
  if (board5.size() != 5) throw InvalidInput("hand strength needs a five-card board");
  require_disjoint(board5, hand, deck);
  return hand_strengths(board5, deck)[hand.value];
}

TurnStrength::TurnStrength(const Board& board4, const Deck& deck)
    : board_(board4), deck_(deck), hands_(valid_hands(board4, deck)) {
  if (board4.size() != 4) throw InvalidInput("turn statistics need a four-card board");
  if ((board4.mask() & ~deck.mask()) != 0) throw InvalidInput("board uses cards outside the deck");
  for (Card c : deck.cards()) {
    if (!board4.contains(c)) rivers_.push_back(c);
  }
  river_hs_.reserve(rivers_.size());
  for (Card r : rivers_) river_hs_.push_back(hand_strengths(board4.with(r), deck));
}

void TurnStrength::check(HandIndex hand) const { require_disjoint(board_, hand, deck_); }

double TurnStrength::ehs(HandIndex hand) const {
  check(hand);
  const CardMask hm = hand_mask(hand);
  double sum = 0.0;
  int n = 0;
  for (std::size_t r = 0; r < rivers_.size(); ++r) {
    if (hm & rivers_[r].mask()) continue;
    sum += river_hs_[r][hand.value];
    ++n;
  }
  return sum / n;
}

double TurnStrength::ehs2(HandIndex hand) const {
  check(hand);
  const CardMask hm = hand_mask(hand);
  double sum = 0.0;
  int n = 0;
  for (std::size_t r = 0; r < rivers_.size(); ++r) {
    if (hm & rivers_[r].mask()) continue;
    const double v = river_hs_[r][hand.value];
    sum += v * v;
    ++n;
  }
  return sum / n;
}

HsHistogram TurnStrength::histogram(HandIndex hand, int bins) const {
  check(hand);
  if (bins < 1) throw InvalidInput("histogram needs at least one bin");
  const CardMask hm = hand_mask(hand);
  std::vector<int> counts(static_cast<std::size_t>(bins), 0);
  int n = 0;
  for (std::size_t r = 0; r < rivers_.size(); ++r) {
    if (hm & rivers_[r].mask()) continue;
    const int b = std::min(static_cast<int>(river_hs_[r][hand.value] * bins), bins - 1);
    ++counts[static_cast<std::size_t>(b)];
    ++n;
  }
  HsHistogram h;
  h.bins.resize(counts.size());
  for (std::size_t b = 0; b < counts.size(); ++b) h.bins[b] = static_cast<double>(counts[b]) / n;
  return h;
}

double expected_hs(const Board& board4, HandIndex hand, const Deck& deck) {
  require_disjoint(board4, hand, deck);
  return TurnStrength(board4, deck).ehs(hand);
}

double expected_hs2(const Board& board4, HandIndex hand, const Deck& deck) {
  require_disjoint(board4, hand, deck);
  return TurnStrength(board4, deck).ehs2(hand);
}

HsHistogram hs_histogram(const Board& board4, HandIndex hand, int bins, const Deck& deck) {
  require_disjoint(board4, hand, deck);
  if (bins < 1) throw InvalidInput("histogram needs at least one bin");
  return TurnStrength(board4, deck).histogram(hand, bins);
}

}  // namespace cfvn
