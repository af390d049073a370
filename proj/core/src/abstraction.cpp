#include "cfvn/abstraction.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <ostream>

#include "cfvn/binary_io.hpp"
#include "cfvn/error.hpp"

namespace cfvn {
namespace {

constexpr std::uint16_t kMappingVersion = 1;
constexpr std::uint16_t kPublicModelVersion = 1;

std::uint16_t equal_width_bucket(double value, int num_buckets) {
  const int b = static_cast<int>(value * num_buckets);
  return static_cast<std::uint16_t>(std::clamp(b, 0, num_buckets - 1));
}

BucketMapping empty_mapping(AbstractionKind kind, const Board& board, int num_buckets) {
  if (num_buckets < 1) throw InvalidInput("abstraction needs at least one bucket");
  if (num_buckets >= kSentinelBucket) throw InvalidInput("too many buckets for a u16 bucket id");
  BucketMapping m;
  m.kind = kind;
  m.board = board;
  m.num_buckets = static_cast<std::uint32_t>(num_buckets);
  m.bucket_of.fill(kSentinelBucket);
  return m;
}

}  // namespace

const char* to_string(AbstractionKind kind) {
  switch (kind) {
    case AbstractionKind::kEhs2:
      return "ehs2";
    case AbstractionKind::kNested:
      return "nested";
    case AbstractionKind::kPotentialAware:
      return "pa";
  }
  return "?";
}

std::vector<std::vector<HandIndex>> BucketMapping::members() const {
  std::vector<std::vector<HandIndex>> out(num_buckets);
  for (std::uint16_t h = 0; h < kNumHands; ++h) {
    if (bucket_of[h] != kSentinelBucket) out[bucket_of[h]].push_back(HandIndex{h});
  }
  return out;
}

std::vector<bool> BucketMapping::occupied() const {
  std::vector<bool> out(num_buckets, false);
  for (std::uint16_t b : bucket_of) {
    if (b != kSentinelBucket) out[b] = true;
  }
  return out;
}

BucketMapping build_ehs2_mapping(const TurnStrength& strength, int num_buckets) {
  BucketMapping m = empty_mapping(AbstractionKind::kEhs2, strength.board(), num_buckets);
  for (HandIndex h : strength.hands()) m.bucket_of[h.value] = equal_width_bucket(strength.ehs2(h), num_buckets);
  return m;
}

BucketMapping build_ehs2_mapping(const Board& board4, int num_buckets, const Deck& deck) {
  return build_ehs2_mapping(TurnStrength(board4, deck), num_buckets);
}

PublicFeatures public_features(const Board& board4, const Deck& deck) {
  if (board4.size() != 4) throw InvalidInput("public features need a four-card board");
  if (board4.mask() & ~deck.mask())
    throw InvalidInput("board " + board4.str() + " uses cards outside the " + deck.name() + " deck");
  PublicFeatures f;
  for (Card c : board4.cards()) f.highcard_value += c.rank();
  for (Card river : deck.cards()) {
    if (board4.contains(river)) continue;
    const Board board5 = board4.with(river);
    for (HandIndex h : valid_hands(board5, deck)) {
      const HandCategory cat = evaluate(board5.mask() | hand_mask(h)).category();
      if (cat == HandCategory::kStraight || cat == HandCategory::kFlush || cat == HandCategory::kStraightFlush) {
        ++f.draw_value;
      }
    }
  }
  return f;
}

BucketMapping build_potential_aware_mapping(const TurnStrength& strength, const PotentialAwareOptions& options) {
  const int k = options.num_buckets;
  BucketMapping m = empty_mapping(AbstractionKind::kPotentialAware, strength.board(), k);
  const auto& hands = strength.hands();
  if (k < 1) throw InvalidInput("potential-aware abstraction needs at least one bucket");

  // Identical histograms always share a cluster, so cluster the distinct ones
  // weighted by multiplicity.
  std::map<Point, std::vector<HandIndex>> groups;
  for (HandIndex h : hands) groups[strength.histogram(h, options.bins).bins].push_back(h);
  std::vector<Point> points;
  std::vector<double> weights;
  for (const auto& [hist, members] : groups) {
    points.push_back(hist);
    weights.push_back(static_cast<double>(members.size()));
  }

  std::vector<int> cluster(points.size());
  std::vector<Point> centroids;
  if (points.size() <= static_cast<std::size_t>(k)) {
    for (std::size_t i = 0; i < points.size(); ++i) cluster[i] = static_cast<int>(i);
    centroids = points;
  } else {
    ClusterModel model = kmeans(
        points, {.k = k, .distance = Distance::kEmd, .seed = options.seed, .max_iters = options.max_iters}, weights);
    cluster = model.assignment;
    centroids = std::move(model.centroids);
  }

  // Order non-empty clusters by centroid mean HS (then CDF order for ties).
  std::vector<bool> used(centroids.size(), false);
  for (int c : cluster) used[static_cast<std::size_t>(c)] = true;
  std::vector<int> order;
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    if (used[c]) order.push_back(static_cast<int>(c));
  }
  auto mean_of = [&](int c) { return HsHistogram{centroids[static_cast<std::size_t>(c)]}.mean(); };
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    const double ma = mean_of(a), mb = mean_of(b);
    if (ma != mb) return ma < mb;
    return centroids[static_cast<std::size_t>(a)] > centroids[static_cast<std::size_t>(b)];
  });
  std::vector<std::uint16_t> label(centroids.size(), kSentinelBucket);
  const auto used_count = static_cast<std::int64_t>(order.size());
  for (std::int64_t r = 0; r < used_count; ++r) {
    label[static_cast<std::size_t>(order[static_cast<std::size_t>(r)])] =
        static_cast<std::uint16_t>(r * k / used_count);
  }

  std::size_t i = 0;
  for (const auto& [hist, members] : groups) {
    for (HandIndex h : members) m.bucket_of[h.value] = label[static_cast<std::size_t>(cluster[i])];
    ++i;
  }
  return m;
}

PublicNestedAbstraction PublicNestedAbstraction::fit(std::span<const Board> boards, const Options& options,
                                                     const Deck& deck) {
  if (options.k_public < 1 || options.k_sub < 1) throw InvalidInput("nested abstraction needs k >= 1");
  if (boards.empty()) throw InvalidInput("nested abstraction needs a board sample");
  PublicNestedAbstraction model;
  model.deck_ = deck;
  model.k_sub_ = options.k_sub;

  std::vector<std::array<double, 2>> raw;
  raw.reserve(boards.size());
  for (const Board& b : boards) {
    const PublicFeatures f = public_features(b, deck);
    raw.push_back({static_cast<double>(f.draw_value), static_cast<double>(f.highcard_value)});
  }
  for (int d = 0; d < 2; ++d) {
    double mean = 0.0, sq = 0.0;
    for (const auto& r : raw) mean += r[d];
    mean /= static_cast<double>(raw.size());
    for (const auto& r : raw) sq += (r[d] - mean) * (r[d] - mean);
    const double sd = std::sqrt(sq / static_cast<double>(raw.size()));
    model.mean_[d] = mean;
    model.scale_[d] = sd > 0.0 ? sd : 1.0;
  }
  std::vector<Point> points;
  points.reserve(raw.size());
  for (const auto& r : raw) {
    points.push_back({(r[0] - model.mean_[0]) / model.scale_[0], (r[1] - model.mean_[1]) / model.scale_[1]});
  }
  const ClusterModel cm = kmeans(
      points,
      {.k = options.k_public, .distance = Distance::kEuclidean, .seed = options.seed, .max_iters = options.max_iters});
  for (const Point& c : cm.centroids) model.centroids_.push_back({c[0], c[1]});
  std::sort(model.centroids_.begin(), model.centroids_.end());
  return model;
}

std::array<double, 2> PublicNestedAbstraction::normalize(const PublicFeatures& f) const {
  return {(static_cast<double>(f.draw_value) - mean_[0]) / scale_[0],
          (static_cast<double>(f.highcard_value) - mean_[1]) / scale_[1]};
}

int PublicNestedAbstraction::cluster_of(const PublicFeatures& features) const {
  const auto z = normalize(features);
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids_.size(); ++c) {
    const double d0 = z[0] - centroids_[c][0], d1 = z[1] - centroids_[c][1];
    const double d = d0 * d0 + d1 * d1;
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  return best;
}

int PublicNestedAbstraction::cluster_of(const Board& board4) const {
  return cluster_of(public_features(board4, deck_));
}

BucketMapping PublicNestedAbstraction::mapping(const TurnStrength& strength) const {
  if (!(strength.deck() == deck_)) throw InvalidInput("nested abstraction was fit on a different deck");
  BucketMapping m = empty_mapping(AbstractionKind::kNested, strength.board(), num_buckets());
  const int base = cluster_of(strength.board()) * k_sub_;
  for (HandIndex h : strength.hands()) {
    m.bucket_of[h.value] = static_cast<std::uint16_t>(base + equal_width_bucket(strength.ehs2(h), k_sub_));
  }
  return m;
}

BucketMapping build_public_nested_mapping(const PublicNestedAbstraction& model, const TurnStrength& strength) {
  return model.mapping(strength);
}

void PublicNestedAbstraction::write(std::ostream& os) const {
  bin::put_magic(os, "CPUB");
  bin::put<std::uint16_t>(os, kPublicModelVersion);
  bin::put<std::uint8_t>(os, static_cast<std::uint8_t>(deck_.min_rank()));
  bin::put<std::uint32_t>(os, static_cast<std::uint32_t>(centroids_.size()));
  bin::put<std::uint32_t>(os, static_cast<std::uint32_t>(k_sub_));
  for (int d = 0; d < 2; ++d) bin::put<double>(os, mean_[d]);
  for (int d = 0; d < 2; ++d) bin::put<double>(os, scale_[d]);
  for (const auto& c : centroids_) {
    bin::put<double>(os, c[0]);
    bin::put<double>(os, c[1]);
  }
  if (!os) throw IoError("failed writing public cluster model");
}

PublicNestedAbstraction PublicNestedAbstraction::read(std::istream& is) {
  bin::expect_magic(is, "CPUB");
  if (bin::get<std::uint16_t>(is) != kPublicModelVersion) throw IoError("unsupported public model version");
  PublicNestedAbstraction m;
  m.deck_ = Deck::short_deck(bin::get<std::uint8_t>(is));
  const auto k = bin::get<std::uint32_t>(is);
  m.k_sub_ = static_cast<int>(bin::get<std::uint32_t>(is));
  for (int d = 0; d < 2; ++d) m.mean_[d] = bin::get<double>(is);
  for (int d = 0; d < 2; ++d) m.scale_[d] = bin::get<double>(is);
  m.centroids_.resize(k);
  for (auto& c : m.centroids_) {
    c[0] = bin::get<double>(is);
    c[1] = bin::get<double>(is);
  }
  return m;
}

void write_mapping(std::ostream& os, const BucketMapping& mapping) {
  if (mapping.board.size() != 4) throw InvalidInput("mapping board must have four cards");
  bin::put_magic(os, "CABS");
  bin::put<std::uint16_t>(os, kMappingVersion);
  bin::put<std::uint8_t>(os, static_cast<std::uint8_t>(mapping.kind));
  bin::put<std::uint32_t>(os, mapping.num_buckets);
  for (Card c : mapping.board.cards()) bin::put<std::uint8_t>(os, static_cast<std::uint8_t>(c.index()));
  bin::put_span<std::uint16_t>(os, mapping.bucket_of);
  if (!os) throw IoError("failed writing abstraction");
}

BucketMapping read_mapping(std::istream& is) {
  bin::expect_magic(is, "CABS");
  if (bin::get<std::uint16_t>(is) != kMappingVersion) throw IoError("unsupported abstraction version");
  BucketMapping m;
  const auto kind = bin::get<std::uint8_t>(is);
  if (kind > 2) throw IoError("unknown abstraction kind " + std::to_string(kind));
  m.kind = static_cast<AbstractionKind>(kind);
  m.num_buckets = bin::get<std::uint32_t>(is);
  std::array<Card, 4> cards;
  for (Card& c : cards) {
    const auto idx = bin::get<std::uint8_t>(is);
    if (idx >= kNumCards) throw IoError("bad card index in abstraction");
    c = Card(idx);
  }
  m.board = Board(cards);
  bin::get_span<std::uint16_t>(is, m.bucket_of);
  for (std::uint16_t b : m.bucket_of) {
    if (b != kSentinelBucket && b >= m.num_buckets) throw IoError("bucket id out of range in abstraction");
  }
  return m;
}

std::vector<BucketMapping> read_mappings(std::istream& is) {
  std::vector<BucketMapping> out;
  while (is.peek() != std::char_traits<char>::eof()) out.push_back(read_mapping(is));
  return out;
}

}  // namespace cfvn
