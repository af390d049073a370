#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "cfvn/cards.hpp"
#include "cfvn/kmeans.hpp"
#include "cfvn/strength.hpp"

namespace cfvn {

inline constexpr std::uint16_t kSentinelBucket = 0xFFFF;

enum class AbstractionKind : std::uint8_t { kEhs2 = 0, kNested = 1, kPotentialAware = 2 };

const char* to_string(AbstractionKind kind);

// Board-specific many-to-one map from private hands to buckets. Hands that
// collide with the board (or use cards outside the deck) hold kSentinelBucket.
struct BucketMapping {
  AbstractionKind kind = AbstractionKind::kEhs2;
  Board board;
  std::uint32_t num_buckets = 0;
  std::array<std::uint16_t, kNumHands> bucket_of{};

  bool live(HandIndex h) const { return bucket_of[h.value] != kSentinelBucket; }
  // Reverse mapping: the hands of every bucket, in hand-index order.
  std::vector<std::vector<HandIndex>> members() const;
  // Buckets holding at least one hand.
  std::vector<bool> occupied() const;

  friend bool operator==(const BucketMapping&, const BucketMapping&) = default;
};

// Equal-width E[HS^2] regions [b/K, (b+1)/K), the top region closed.
BucketMapping build_ehs2_mapping(const TurnStrength& strength, int num_buckets);
BucketMapping build_ehs2_mapping(const Board& board4, int num_buckets, const Deck& deck = Deck::full());

struct PublicFeatures {
  // Count of (river card, live hand) pairs where the hand makes a straight,
  // flush or straight flush.
  std::int64_t draw_value = 0;
  // Sum of board ranks, deuce = 0 ... ace = 12.
  int highcard_value = 0;
};

PublicFeatures public_features(const Board& board4, const Deck& deck = Deck::full());

struct PotentialAwareOptions {
  int num_buckets = 1000;
  int bins = 50;
  std::uint64_t seed = 0;
  int max_iters = 30;
};

// Clusters the river-HS histograms of the board's hands under EMD. When there
// are no more distinct histograms than buckets, each distinct histogram is its
// own cluster. Bucket labels follow the clusters' mean HS order, spread over
// [0, K) so that a label means the same relative strength on every board.
BucketMapping build_potential_aware_mapping(const TurnStrength& strength, const PotentialAwareOptions& options);

// Two-level abstraction: boards clustered on z-scored public features, then
// each public cluster split into k_sub equal-width E[HS^2] regions.
class PublicNestedAbstraction {
 public:
  struct Options {
    int k_public = 10;
    int k_sub = 100;
    std::uint64_t seed = 0;
    int max_iters = 100;
  };

  static PublicNestedAbstraction fit(std::span<const Board> boards, const Options& options,
                                     const Deck& deck = Deck::full());

  int k_public() const { return static_cast<int>(centroids_.size()); }
  int k_sub() const { return k_sub_; }
  int num_buckets() const { return k_public() * k_sub_; }
  const Deck& deck() const { return deck_; }

  // Nearest public centroid in z-scored feature space.
  int cluster_of(const Board& board4) const;
  int cluster_of(const PublicFeatures& features) const;
  BucketMapping mapping(const TurnStrength& strength) const;

  const std::array<double, 2>& feature_mean() const { return mean_; }
  const std::array<double, 2>& feature_scale() const { return scale_; }
  const std::vector<std::array<double, 2>>& centroids() const { return centroids_; }

  void write(std::ostream& os) const;
  static PublicNestedAbstraction read(std::istream& is);

  friend bool operator==(const PublicNestedAbstraction&, const PublicNestedAbstraction&) = default;

 private:
  std::array<double, 2> normalize(const PublicFeatures& f) const;

  Deck deck_ = Deck::full();
  int k_sub_ = 0;
  std::array<double, 2> mean_{};
  std::array<double, 2> scale_{1.0, 1.0};
  std::vector<std::array<double, 2>> centroids_;
};

BucketMapping build_public_nested_mapping(const PublicNestedAbstraction& model, const TurnStrength& strength);

// "CABS" block: magic, version u16, kind u8, num_buckets u32, 4 board card
// bytes, 1326 u16 bucket ids (0xFFFF = sentinel). Files hold one or more blocks.
void write_mapping(std::ostream& os, const BucketMapping& mapping);
BucketMapping read_mapping(std::istream& is);
std::vector<BucketMapping> read_mappings(std::istream& is);

}  // namespace cfvn
