#include "cfvn/cards.hpp"

#include <algorithm>
#include <bit>

#include "cfvn/error.hpp"

namespace cfvn {
namespace {

constexpr std::string_view kRankChars = "23456789TJQKA";
constexpr std::string_view kSuitChars = "cdhs";

// Highest straight top rank for a 13-bit rank set, or -1. Wheel (A-5) = 3.
std::array<std::int8_t, 8192> make_straight_table() {
  std::array<std::int8_t, 8192> table{};
  for (int m = 0; m < 8192; ++m) {
    // bit 0 = ace-low, bit r + 1 = rank r
    const int ext = (m << 1) | ((m >> 12) & 1);
    table[m] = -1;
    for (int top = 12; top >= 3; --top) {
      const int window = 0x1f << (top - 3);
      if ((ext & window) == window) {
        table[m] = static_cast<std::int8_t>(top);
        break;
      }
    }
  }
  return table;
}

const std::array<std::int8_t, 8192> kStraightHigh = make_straight_table();

constexpr std::uint32_t pack(HandCategory cat, std::initializer_list<int> ranks) {
  std::uint32_t v = static_cast<std::uint32_t>(cat) << 20;
  int shift = 16;
  for (int r : ranks) {
    v |= static_cast<std::uint32_t>(r) << shift;
    shift -= 4;
  }
  return v;
}

// Top n ranks of a 13-bit set, highest first, written into out.
int top_ranks(std::uint32_t set, int n, int* out) {
  int k = 0;
  while (set != 0 && k < n) {
    const int r = 31 - std::countl_zero(set);
    out[k++] = r;
    set &= ~(1u << r);
  }
  return k;
}

std::array<std::array<std::uint8_t, 2>, kNumHands> make_hand_table() {
  std::array<std::array<std::uint8_t, 2>, kNumHands> t{};
  for (int j = 1; j < kNumCards; ++j) {
    for (int i = 0; i < j; ++i) {
      t[j * (j - 1) / 2 + i] = {static_cast<std::uint8_t>(i), static_cast<std::uint8_t>(j)};
    }
  }
  return t;
}

}  // namespace

Card Card::parse(std::string_view text) {
  if (text.size() != 2) throw InvalidInput("bad card: '" + std::string(text) + "'");
  const auto r = kRankChars.find(static_cast<char>(std::toupper(text[0])));
  const auto s = kSuitChars.find(static_cast<char>(std::tolower(text[1])));
  if (r == std::string_view::npos || s == std::string_view::npos) {
    throw InvalidInput("bad card: '" + std::string(text) + "'");
  }
  return Card::from(static_cast<int>(r), static_cast<int>(s));
}

std::string Card::str() const { return {kRankChars[rank()], kSuitChars[suit()]}; }

const std::array<std::array<std::uint8_t, 2>, kNumHands>& hand_card_table() {
  static const auto table = make_hand_table();
  return table;
}

HandIndex hand_index(Card a, Card b) {
  if (a == b) throw InvalidInput("hand_index: identical cards " + a.str());
  int i = a.index(), j = b.index();
  if (i > j) std::swap(i, j);
  return HandIndex{static_cast<std::uint16_t>(j * (j - 1) / 2 + i)};
}

std::pair<Card, Card> hand_cards(HandIndex hand) {
  if (hand.value >= kNumHands) throw InvalidInput("hand index out of range");
  const auto& c = hand_card_table()[hand.value];
  return {Card(c[0]), Card(c[1])};
}

CardMask hand_mask(HandIndex hand) {
  const auto& c = hand_card_table()[hand.value];
  return (CardMask{1} << c[0]) | (CardMask{1} << c[1]);
}

Board::Board(std::span<const Card> cards) {
  if (cards.size() > 5) throw InvalidInput("board holds at most 5 cards");
  for (Card c : cards) {
    if (c.index() >= kNumCards) throw InvalidInput("card index out of range");
    if (mask_ & c.mask()) throw InvalidInput("duplicate board card " + c.str());
    cards_[size_++] = c;
    mask_ |= c.mask();
  }
}

Board::Board(std::initializer_list<Card> cards) : Board(std::span<const Card>(cards.begin(), cards.size())) {}

Board Board::parse(std::string_view text) {
  if (text.size() % 2 != 0) throw InvalidInput("bad board: '" + std::string(text) + "'");
  std::vector<Card> cards;
  for (std::size_t i = 0; i < text.size(); i += 2) cards.push_back(Card::parse(text.substr(i, 2)));
  return Board(cards);
}

Board Board::with(Card c) const {
  std::vector<Card> cards(cards_.begin(), cards_.begin() + size_);
  cards.push_back(c);
  return Board(cards);
}

std::string Board::str() const {
  std::string s;
  for (Card c : cards()) s += c.str();
  return s;
}

Deck::Deck(int min_rank) : min_rank_(min_rank) {
  if (min_rank < 0 || min_rank > 9) throw InvalidInput("deck must keep at least 4 ranks");
  for (int i = min_rank * kNumSuits; i < kNumCards; ++i) {
    cards_.emplace_back(i);
    mask_ |= CardMask{1} << i;
  }
}

Deck Deck::parse(std::string_view name) {
  if (name == "full") return full();
  if (name.starts_with("short")) {
    int n = 0;
    try {
      n = std::stoi(std::string(name.substr(5)));
    } catch (const std::exception&) {
      throw InvalidInput("bad deck: '" + std::string(name) + "'");
    }
    if (n % kNumSuits != 0 || n < 16 || n > kNumCards) {
      throw InvalidInput("short deck size must be a multiple of 4 in [16, 52]");
    }
    return short_deck(kNumRanks - n / kNumSuits);
  }
  throw InvalidInput("bad deck: '" + std::string(name) + "'");
}

std::string Deck::name() const { return min_rank_ == 0 ? "full" : "short" + std::to_string(size()); }

HandRank evaluate(CardMask cards) {
  std::array<std::uint32_t, 4> suits{};
  std::array<std::uint8_t, kNumRanks> counts{};
  std::uint32_t any = 0;
  for (CardMask m = cards; m != 0; m &= m - 1) {
    const int idx = std::countr_zero(m);
    const int r = idx >> 2;
    suits[idx & 3] |= 1u << r;
    ++counts[r];
    any |= 1u << r;
  }

  // With at most 7 cards a flush excludes quads and full houses, so it can be
  // resolved before counting ranks.
  int k[5]{};
  for (std::uint32_t s : suits) {
    if (std::popcount(s) >= 5) {
      const int sf = kStraightHigh[s];
      if (sf >= 0) return HandRank{pack(HandCategory::kStraightFlush, {sf})};
      top_ranks(s, 5, k);
      return HandRank{pack(HandCategory::kFlush, {k[0], k[1], k[2], k[3], k[4]})};
    }
  }

  std::uint32_t quads = 0, trips = 0, pairs = 0;
  for (int r = 0; r < kNumRanks; ++r) {
    switch (counts[r]) {
      case 4:
        quads |= 1u << r;
        break;
      case 3:
        trips |= 1u << r;
        break;
      case 2:
        pairs |= 1u << r;
        break;
      default:
        break;
    }
  }

  if (quads) {
    const int q = 31 - std::countl_zero(quads);
    top_ranks(any & ~(1u << q), 1, k);
    return HandRank{pack(HandCategory::kQuads, {q, k[0]})};
  }
  if (trips) {
    const int t = 31 - std::countl_zero(trips);
    const std::uint32_t rest = (trips & ~(1u << t)) | pairs;
    if (rest) {
      return HandRank{pack(HandCategory::kFullHouse, {t, 31 - std::countl_zero(rest)})};
    }
  }
  const int straight = kStraightHigh[any];
  if (straight >= 0) return HandRank{pack(HandCategory::kStraight, {straight})};
  if (trips) {
    const int t = 31 - std::countl_zero(trips);
    top_ranks(any & ~(1u << t), 2, k);
    return HandRank{pack(HandCategory::kTrips, {t, k[0], k[1]})};
  }
  if (std::popcount(pairs) >= 2) {
    int p[2];
    top_ranks(pairs, 2, p);
    top_ranks(any & ~(1u << p[0]) & ~(1u << p[1]), 1, k);
    return HandRank{pack(HandCategory::kTwoPair, {p[0], p[1], k[0]})};
  }
  if (pairs) {
    const int p = 31 - std::countl_zero(pairs);
    top_ranks(any & ~(1u << p), 3, k);
    return HandRank{pack(HandCategory::kPair, {p, k[0], k[1], k[2]})};
  }
  top_ranks(any, 5, k);
  return HandRank{pack(HandCategory::kHighCard, {k[0], k[1], k[2], k[3], k[4]})};
}

HandRank evaluate7(const Board& board, HandIndex hand) {
  if (hand.value >= kNumHands) throw InvalidInput("hand index out of range");
  if (board.size() != 5) throw InvalidInput("evaluate7 needs a five-card board");
  if (board.collides(hand)) throw InvalidInput("hand collides with board");
  return evaluate(board.mask() | hand_mask(hand));
}

std::vector<HandIndex> valid_hands(const Board& board, const Deck& deck) {
  std::vector<HandIndex> out;
  const CardMask dead = board.mask() | ~deck.mask();
  for (std::uint16_t h = 0; h < kNumHands; ++h) {
    if ((hand_mask(HandIndex{h}) & dead) == 0) out.push_back(HandIndex{h});
  }
  return out;
}

}  // namespace cfvn
