#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace cfvn {

inline constexpr int kNumRanks = 13;
inline constexpr int kNumSuits = 4;
inline constexpr int kNumCards = 52;
inline constexpr int kNumHands = 1326;

using CardMask = std::uint64_t;

// A playing card. index = rank * 4 + suit, rank 0 = deuce ... 12 = ace.
class Card {
 public:
  constexpr Card() = default;
  constexpr explicit Card(int index) : index_(static_cast<std::uint8_t>(index)) {}
  static constexpr Card from(int rank, int suit) { return Card(rank * kNumSuits + suit); }

  // Parses "As", "Td", "2c".
  static Card parse(std::string_view text);

  constexpr int index() const { return index_; }
  constexpr int rank() const { return index_ >> 2; }
  constexpr int suit() const { return index_ & 3; }
  constexpr CardMask mask() const { return CardMask{1} << index_; }
  std::string str() const;

  friend constexpr auto operator<=>(Card, Card) = default;

 private:
  std::uint8_t index_ = 0;
};

// Identifies one of the 1326 unordered two-card hands: j*(j-1)/2 + i for i < j.
struct HandIndex {
  std::uint16_t value = 0;
  friend constexpr auto operator<=>(HandIndex, HandIndex) = default;
};

HandIndex hand_index(Card a, Card b);
std::pair<Card, Card> hand_cards(HandIndex hand);
CardMask hand_mask(HandIndex hand);

// Precomputed (low, high) card indices for every hand index.
const std::array<std::array<std::uint8_t, 2>, kNumHands>& hand_card_table();

// Public cards, 0 to 5 of them, all distinct.
class Board {
 public:
  Board() = default;
  explicit Board(std::span<const Card> cards);
  Board(std::initializer_list<Card> cards);

  // Parses a concatenation such as "AsKd7c2h".
  static Board parse(std::string_view text);

  std::size_t size() const { return size_; }
  Card operator[](std::size_t i) const { return cards_[i]; }
  std::span<const Card> cards() const { return {cards_.data(), size_}; }
  CardMask mask() const { return mask_; }
  bool contains(Card c) const { return (mask_ & c.mask()) != 0; }
  bool collides(HandIndex hand) const { return (mask_ & hand_mask(hand)) != 0; }

  // Returns a copy with one more card appended.
  Board with(Card c) const;
  std::string str() const;

  friend bool operator==(const Board& a, const Board& b) { return a.size_ == b.size_ && a.cards_ == b.cards_; }

 private:
  std::array<Card, 5> cards_{};
  std::size_t size_ = 0;
  CardMask mask_ = 0;
};

// The set of cards in play. The full deck has 52 cards; a short deck keeps
// only ranks >= min_rank (min_rank = 8 gives the 20-card T..A deck).
class Deck {
 public:
  static Deck full() { return Deck(0); }
  static Deck short_deck(int min_rank) { return Deck(min_rank); }
  // "full", "short20", "short24", ...
  static Deck parse(std::string_view name);

  int min_rank() const { return min_rank_; }
  int size() const { return static_cast<int>(cards_.size()); }
  CardMask mask() const { return mask_; }
  bool contains(Card c) const { return (mask_ & c.mask()) != 0; }
  std::span<const Card> cards() const { return cards_; }
  std::string name() const;

  friend bool operator==(const Deck& a, const Deck& b) { return a.min_rank_ == b.min_rank_; }

 private:
  explicit Deck(int min_rank);
  int min_rank_ = 0;
  CardMask mask_ = 0;
  std::vector<Card> cards_;
};

enum class HandCategory : std::uint8_t {
  kHighCard = 0,
  kPair,
  kTwoPair,
  kTrips,
  kStraight,
  kFlush,
  kFullHouse,
  kQuads,
  kStraightFlush,
};

// Totally ordered strength of the best five-card hand. Layout: category in
// bits 20..23, then up to five 4-bit tie-break ranks.
struct HandRank {
  std::uint32_t value = 0;
  HandCategory category() const { return static_cast<HandCategory>(value >> 20); }
  friend constexpr auto operator<=>(HandRank, HandRank) = default;
};

// Best five-card rank among 5..7 cards given as a mask.
HandRank evaluate(CardMask cards);
// Board must hold five cards disjoint from the hand.
HandRank evaluate7(const Board& board, HandIndex hand);

// Hands whose cards are in the deck and disjoint from the board, in index order.
std::vector<HandIndex> valid_hands(const Board& board, const Deck& deck = Deck::full());

}  // namespace cfvn
