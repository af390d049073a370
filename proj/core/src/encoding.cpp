#include "cfvn/encoding.hpp"

#include <charconv>
#include <fstream>

#include "cfvn/binary_io.hpp"
#include "cfvn/error.hpp"
#include "cfvn/metrics.hpp"
#include "parallel.hpp"

namespace cfvn {
namespace {

constexpr std::string_view kMagic = "CENC";
constexpr std::uint16_t kVersion = 1;

void check_mapping(const BucketMapping& m, const Board& board) {
  if ((m.board.mask() != board.mask())) {
    throw InvalidInput("mapping for board " + m.board.str() + " used with board " + board.str());
  }
}

}  // namespace

const char* to_string(EncodingKind kind) {
  switch (kind) {
    case EncodingKind::kEhs2:
      return "ehs2";
    case EncodingKind::kNested:
      return "nested";
    case EncodingKind::kPotentialAware:
      return "pa";
    case EncodingKind::kDirect:
      return "direct";
  }
  return "?";
}

EncodingKind parse_encoding(std::string_view name) {
  for (auto k : {EncodingKind::kEhs2, EncodingKind::kNested, EncodingKind::kPotentialAware, EncodingKind::kDirect}) {
    if (name == to_string(k)) return k;
  }
  throw InvalidInput("unknown encoding '" + std::string(name) + "' (expected ehs2, nested, pa or direct)");
}

AbstractionKind abstraction_of(EncodingKind kind) {
  switch (kind) {
    case EncodingKind::kEhs2:
      return AbstractionKind::kEhs2;
    case EncodingKind::kNested:
      return AbstractionKind::kNested;
    case EncodingKind::kPotentialAware:
      return AbstractionKind::kPotentialAware;
    case EncodingKind::kDirect:
      break;
  }
  throw InvalidInput("the direct encoding has no card abstraction");
}

std::vector<double> encode_range(const Range& range, const BucketMapping& mapping) {
  std::vector<double> out(mapping.num_buckets, 0.0);
  for (int h = 0; h < kNumHands; ++h) {
    const auto b = mapping.bucket_of[static_cast<std::size_t>(h)];
    if (b != kSentinelBucket) out[b] += range.probs[static_cast<std::size_t>(h)];
  }
  return out;
}

std::vector<double> encode_cv(std::span<const double> cv, const Range& range, const BucketMapping& mapping,
                              CvWeighting weighting) {
  if (cv.size() != kNumHands) throw InvalidInput("cv vector must have 1326 entries");
  const std::size_t k = mapping.num_buckets;
  std::vector<double> wsum(k, 0.0), wcv(k, 0.0), plain(k, 0.0), count(k, 0.0);
  for (std::size_t h = 0; h < kNumHands; ++h) {
    const auto b = mapping.bucket_of[h];
    if (b == kSentinelBucket) continue;
    const double w = range.probs[h];
    wsum[b] += w;
    wcv[b] += w * cv[h];
    plain[b] += cv[h];
    count[b] += 1.0;
  }
  std::vector<double> out(k, 0.0);
  for (std::size_t b = 0; b < k; ++b) {
    if (count[b] == 0.0) continue;
    if (weighting == CvWeighting::kRange && wsum[b] > 0.0) {
      out[b] = wcv[b] / wsum[b];
    } else {
      out[b] = plain[b] / count[b];
    }
  }
  return out;
}

std::vector<double> decode_cv(std::span<const double> bucket_cvs, const BucketMapping& mapping) {
  if (bucket_cvs.size() != mapping.num_buckets) throw InvalidInput("bucket cv length differs from bucket count");
  std::vector<double> out(kNumHands, 0.0);
  for (std::size_t h = 0; h < kNumHands; ++h) {
    const auto b = mapping.bucket_of[h];
    if (b != kSentinelBucket) out[h] = bucket_cvs[b];
  }
  return out;
}

double normalized_pot(const SubgameSpec& spec) {
  const double total = spec.pot + 2.0 * spec.stack;
  return total > 0.0 ? spec.pot / total : 0.0;
}

std::vector<double> encode_direct(const SubgameSpec& spec) {
  std::vector<double> out;
  out.reserve(kDirectInputs);
  out.insert(out.end(), spec.range1.probs.begin(), spec.range1.probs.end());
  out.insert(out.end(), spec.range2.probs.begin(), spec.range2.probs.end());
  const std::size_t board_at = out.size();
  out.resize(board_at + kNumCards, 0.0);
  for (Card c : spec.board.cards()) out[board_at + static_cast<std::size_t>(c.index())] = 1.0;
  out.push_back(normalized_pot(spec));
  return out;
}

std::size_t input_dim(EncodingKind kind, std::uint32_t num_buckets) {
  return kind == EncodingKind::kDirect ? kDirectInputs : 2 * static_cast<std::size_t>(num_buckets) + 1;
}

std::size_t EncodedDataset::input_dim() const { return cfvn::input_dim(kind, num_buckets); }

EncodedExample encode_example(const TrainingExample& ex, EncodingKind kind, const MappingLookup& lookup,
                              CvWeighting weighting, const Deck& deck) {
  EncodedExample out;
  auto to_float = [](const std::vector<double>& v, std::vector<float>& dst) {
    for (double x : v) dst.push_back(static_cast<float>(x));
  };
  if (kind == EncodingKind::kDirect) {
    to_float(encode_direct(ex.spec), out.inputs);
    to_float(ex.cvs.v1, out.targets);
    to_float(ex.cvs.v2, out.targets);
    std::vector<std::uint8_t> live(kNumHands, 0);
    for (HandIndex h : valid_hands(ex.spec.board, deck)) live[h.value] = 1;
    out.mask = live;
    out.mask.insert(out.mask.end(), live.begin(), live.end());
    return out;
  }
  const BucketMapping& m = lookup(ex.spec.board);
  check_mapping(m, ex.spec.board);
  if (m.kind != abstraction_of(kind)) {
    throw InvalidInput(std::string("mapping kind ") + to_string(m.kind) + " does not match encoding " +
                       to_string(kind));
  }
  to_float(encode_range(ex.spec.range1, m), out.inputs);
  to_float(encode_range(ex.spec.range2, m), out.inputs);
  out.inputs.push_back(static_cast<float>(normalized_pot(ex.spec)));
  to_float(encode_cv(ex.cvs.v1, ex.spec.range1, m, weighting), out.targets);
  to_float(encode_cv(ex.cvs.v2, ex.spec.range2, m, weighting), out.targets);
  std::vector<bool> occupied = m.occupied();
  out.mask.reserve(2 * occupied.size());
  for (int p = 0; p < 2; ++p) {
    for (bool o : occupied) out.mask.push_back(o ? 1 : 0);
  }
  return out;
}

EncodedDataset encode_dataset(std::span<const TrainingExample> examples, EncodingKind kind, std::uint32_t num_buckets,
                              const MappingLookup& lookup, CvWeighting weighting, const Deck& deck, int threads) {
  EncodedDataset out;
  out.kind = kind;
  out.num_buckets = kind == EncodingKind::kDirect ? kNumHands : num_buckets;
  out.examples.resize(examples.size());
  detail::parallel_for(examples.size(), threads, [&](std::size_t i) {
    out.examples[i] = encode_example(examples[i], kind, lookup, weighting, deck);
    if (out.examples[i].targets.size() != out.target_dim()) {
      throw InvalidInput("mapping bucket count does not match the dataset's K");
    }
  });
  return out;
}

void write_encoded(const std::filesystem::path& path, const EncodedDataset& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  bin::put_magic(out, kMagic);
  bin::put<std::uint16_t>(out, kVersion);
  bin::put<std::uint8_t>(out, static_cast<std::uint8_t>(data.kind));
  bin::put<std::uint32_t>(out, data.num_buckets);
  bin::put<std::uint64_t>(out, data.examples.size());
  const std::size_t in_dim = data.input_dim(), out_dim = data.target_dim();
  std::vector<std::uint16_t> live;
  for (const auto& ex : data.examples) {
    if (ex.inputs.size() != in_dim || ex.targets.size() != out_dim || ex.mask.size() != out_dim) {
      throw InvalidInput("encoded example has the wrong shape");
    }
    bin::put_span<float>(out, ex.inputs);
    bin::put_span<float>(out, ex.targets);
    live.clear();
    for (std::size_t t = 0; t < out_dim; ++t) {
      if (ex.mask[t]) live.push_back(static_cast<std::uint16_t>(t));
    }
    bin::put<std::uint16_t>(out, static_cast<std::uint16_t>(live.size()));
    bin::put_span<std::uint16_t>(out, live);
  }
  out.close();
  if (!out) throw IoError("write failed on " + path.string());
}

EncodedDataset read_encoded(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open encoded dataset " + path.string());
  try {
    bin::expect_magic(in, kMagic);
    if (bin::get<std::uint16_t>(in) != kVersion) throw IoError("unsupported encoded dataset version");
    EncodedDataset data;
    const auto kind = bin::get<std::uint8_t>(in);
    if (kind > 3) throw IoError("unknown encoding kind " + std::to_string(kind));
    data.kind = static_cast<EncodingKind>(kind);
    data.num_buckets = bin::get<std::uint32_t>(in);
    const auto count = bin::get<std::uint64_t>(in);
    const std::size_t in_dim = data.input_dim(), out_dim = data.target_dim();
    data.examples.resize(count);
    std::vector<std::uint16_t> live;
    for (auto& ex : data.examples) {
      ex.inputs.resize(in_dim);
      ex.targets.resize(out_dim);
      bin::get_span<float>(in, ex.inputs);
      bin::get_span<float>(in, ex.targets);
      live.resize(bin::get<std::uint16_t>(in));
      bin::get_span<std::uint16_t>(in, live);
      ex.mask.assign(out_dim, 0);
      for (auto t : live) {
        if (t >= out_dim) throw IoError("live target index out of range");
        ex.mask[t] = 1;
      }
    }
    return data;
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

void write_encoded_csv(const std::filesystem::path& path, const EncodedDataset& data) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  const std::size_t in_dim = data.input_dim(), out_dim = data.target_dim();
  out << "example";
  for (std::size_t i = 0; i < in_dim; ++i) out << ",x" << i;
  for (std::size_t t = 0; t < out_dim; ++t) out << ",y" << t;
  for (std::size_t t = 0; t < out_dim; ++t) out << ",m" << t;
  out << '\n';
  char buf[32];
  for (std::size_t e = 0; e < data.examples.size(); ++e) {
    const auto& ex = data.examples[e];
    out << e;
    for (const auto* v : {&ex.inputs, &ex.targets}) {
      for (float x : *v) {
        const auto res = std::to_chars(buf, buf + sizeof buf, x);
        out << ',';
        out.write(buf, res.ptr - buf);
      }
    }
    for (auto m : ex.mask) out << ',' << static_cast<int>(m);
    out << '\n';
  }
  if (!out) throw IoError("write failed on " + path.string());
}

void MappingTable::add(BucketMapping mapping) {
  const CardMask key = mapping.board.mask();
  if (auto it = index_.find(key); it != index_.end()) {
    mappings_[it->second] = std::move(mapping);
    return;
  }
  index_.emplace(key, mappings_.size());
  mappings_.push_back(std::move(mapping));
}

bool MappingTable::contains(const Board& board) const { return index_.contains(board.mask()); }

const BucketMapping& MappingTable::at(const Board& board) const {
  auto it = index_.find(board.mask());
  if (it == index_.end()) throw InvalidInput("no abstraction mapping for board " + board.str());
  return mappings_[it->second];
}

MappingLookup MappingTable::lookup() const {
  return [this](const Board& b) -> const BucketMapping& { return at(b); };
}

std::uint32_t AbstractionSettings::num_buckets() const {
  switch (kind) {
    case EncodingKind::kEhs2:
      return static_cast<std::uint32_t>(ehs2_buckets);
    case EncodingKind::kNested:
      if (!nested) throw InvalidInput("nested abstraction needs a fitted public model");
      return static_cast<std::uint32_t>(nested->num_buckets());
    case EncodingKind::kPotentialAware:
      return static_cast<std::uint32_t>(potential_aware.num_buckets);
    case EncodingKind::kDirect:
      return kNumHands;
  }
  return 0;
}

BucketMapping build_mapping(const AbstractionSettings& settings, const Board& board4) {
  const TurnStrength strength(board4, settings.deck);
  switch (settings.kind) {
    case EncodingKind::kEhs2:
      return build_ehs2_mapping(strength, settings.ehs2_buckets);
    case EncodingKind::kNested:
      if (!settings.nested) throw InvalidInput("nested abstraction needs a fitted public model");
      return build_public_nested_mapping(*settings.nested, strength);
    case EncodingKind::kPotentialAware:
      return build_potential_aware_mapping(strength, settings.potential_aware);
    case EncodingKind::kDirect:
      break;
  }
  throw InvalidInput("the direct encoding has no card abstraction");
}

MappingTable build_mappings(const AbstractionSettings& settings, std::span<const Board> boards, int threads) {
  std::vector<Board> distinct;
  std::unordered_map<CardMask, std::size_t> seen;
  for (const Board& b : boards) {
    if (seen.emplace(b.mask(), distinct.size()).second) distinct.push_back(b);
  }
  std::vector<BucketMapping> built(distinct.size());
  detail::parallel_for(distinct.size(), threads,
                       [&](std::size_t i) { built[i] = build_mapping(settings, distinct[i]); });
  MappingTable table;
  for (auto& m : built) table.add(std::move(m));
  return table;
}

EncodingError encoding_error(std::span<const TrainingExample> examples, EncodingKind kind, const MappingLookup& lookup,
                             CvWeighting weighting, const Deck& deck) {
  if (examples.empty()) throw InvalidInput("encoding error needs a non-empty dataset");
  LossAccumulator acc;
  for (const auto& ex : examples) {
    if (kind == EncodingKind::kDirect) {
      // the round trip is the identity on every hand
      const std::size_t live = valid_hands(ex.spec.board, deck).size();
      for (std::size_t i = 0; i < 2 * live; ++i) acc.add(0.0);
      continue;
    }
    const BucketMapping& m = lookup(ex.spec.board);
    check_mapping(m, ex.spec.board);
    for (int p = 0; p < 2; ++p) {
      const auto& cv = p == 0 ? ex.cvs.v1 : ex.cvs.v2;
      const auto& range = p == 0 ? ex.spec.range1 : ex.spec.range2;
      const std::vector<double> round = decode_cv(encode_cv(cv, range, m, weighting), m);
      for (std::size_t h = 0; h < kNumHands; ++h) {
        if (m.bucket_of[h] != kSentinelBucket) acc.add(round[h] - cv[h]);
      }
    }
  }
  return {acc.mean_huber(), acc.mean_mse(), examples.size(), acc.count};
}

}  // namespace cfvn
