#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "cfvn/abstraction.hpp"
#include "cfvn/datagen.hpp"
#include "cfvn/subgame.hpp"

namespace cfvn {

enum class EncodingKind : std::uint8_t { kEhs2 = 0, kNested = 1, kPotentialAware = 2, kDirect = 3 };

const char* to_string(EncodingKind kind);
// Accepts "ehs2", "nested", "pa" and "direct".
EncodingKind parse_encoding(std::string_view name);
AbstractionKind abstraction_of(EncodingKind kind);

// How hand CVs inside a bucket are averaged.
enum class CvWeighting : std::uint8_t {
  kRange,    // weighted by the player's range, plain mean where that mass is 0
  kUniform,  // plain mean over the bucket's hands
};

std::vector<double> encode_range(const Range& range, const BucketMapping& mapping);
std::vector<double> encode_cv(std::span<const double> cv, const Range& range, const BucketMapping& mapping,
                              CvWeighting weighting = CvWeighting::kRange);
// Hand CVs from bucket CVs; 0 for hands without a bucket.
std::vector<double> decode_cv(std::span<const double> bucket_cvs, const BucketMapping& mapping);

inline constexpr std::size_t kDirectInputs = 2 * kNumHands + kNumCards + 1;

// Pot as a fraction of the total chips in play (pot plus both stacks).
double normalized_pot(const SubgameSpec& spec);

// [range1, range2, board one-hot, normalized pot].
std::vector<double> encode_direct(const SubgameSpec& spec);

// Network-ready example. For bucketed encodings the inputs are both bucket
// distributions and the pot, the targets both players' bucket CVs; the direct
// encoding uses hands as buckets. mask marks targets that enter the loss.
struct EncodedExample {
  std::vector<float> inputs;
  std::vector<float> targets;
  std::vector<std::uint8_t> mask;
};

// Supplies the mapping for a board; the direct encoding needs none.
using MappingLookup = std::function<const BucketMapping&(const Board&)>;

// The deck decides which hands are live under the direct encoding.
EncodedExample encode_example(const TrainingExample& example, EncodingKind kind, const MappingLookup& lookup,
                              CvWeighting weighting = CvWeighting::kRange, const Deck& deck = Deck::full());

struct EncodedDataset {
  EncodingKind kind = EncodingKind::kDirect;
  // Buckets per player; 1326 for the direct encoding.
  std::uint32_t num_buckets = kNumHands;
  std::vector<EncodedExample> examples;

  std::size_t input_dim() const;
  std::size_t target_dim() const { return 2 * static_cast<std::size_t>(num_buckets); }
};

std::size_t input_dim(EncodingKind kind, std::uint32_t num_buckets);

EncodedDataset encode_dataset(std::span<const TrainingExample> examples, EncodingKind kind, std::uint32_t num_buckets,
                              const MappingLookup& lookup, CvWeighting weighting = CvWeighting::kRange,
                              const Deck& deck = Deck::full(), int threads = 1);

// "CENC": magic, version u16, kind u8, K u32, count u64, then per record the
// f32 inputs and targets, a u16 live-target count and the live target indices.
void write_encoded(const std::filesystem::path& path, const EncodedDataset& data);
EncodedDataset read_encoded(const std::filesystem::path& path);
void write_encoded_csv(const std::filesystem::path& path, const EncodedDataset& data);

// Board-keyed mapping store, filled up front and read-only afterwards.
class MappingTable {
 public:
  void add(BucketMapping mapping);
  bool contains(const Board& board) const;
  // Throws InvalidInput naming the board when missing.
  const BucketMapping& at(const Board& board) const;
  std::size_t size() const { return mappings_.size(); }
  const std::vector<BucketMapping>& all() const { return mappings_; }
  MappingLookup lookup() const;

 private:
  std::vector<BucketMapping> mappings_;
  std::unordered_map<CardMask, std::size_t> index_;
};

// How to build one encoding's mapping for a board.
struct AbstractionSettings {
  EncodingKind kind = EncodingKind::kEhs2;
  Deck deck = Deck::full();
  int ehs2_buckets = kNumHands;
  PotentialAwareOptions potential_aware;
  std::shared_ptr<const PublicNestedAbstraction> nested;

  std::uint32_t num_buckets() const;
};

BucketMapping build_mapping(const AbstractionSettings& settings, const Board& board4);

// Mappings for every distinct board (by card set) in order of first
// appearance. Parallel over boards; the result does not depend on threads.
MappingTable build_mappings(const AbstractionSettings& settings, std::span<const Board> boards, int threads = 1);

struct EncodingError {
  double huber = 0.0;
  double mse = 0.0;
  std::size_t examples = 0;
  // (example, player, dealable hand) triples averaged over.
  std::size_t hands = 0;
};

// Loss between each hand's CV and its encode-decode round trip, pooled over
// both players and all dealable hands. The direct encoding is lossless.
EncodingError encoding_error(std::span<const TrainingExample> examples, EncodingKind kind, const MappingLookup& lookup,
                             CvWeighting weighting = CvWeighting::kRange, const Deck& deck = Deck::full());

}  // namespace cfvn
