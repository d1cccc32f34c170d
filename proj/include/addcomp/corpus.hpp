#pragma once

// Corpus ingestion, vocabulary, target enumeration and context counting.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace addcomp {

using WordId = std::uint32_t;

using Sentence = std::vector<std::string>;
using TokenizedCorpus = std::vector<Sentence>;

struct ReaderOptions {
  // A token made only of '.', '!' or '?' closes the current sentence.
  bool split_on_terminal = true;
  // Tokens made only of ASCII punctuation are removed from the stream and do
  // not occupy window positions.
  bool drop_punctuation = true;
};

// One sentence per line, tokens separated by spaces. Throws Decode on
// invalid UTF-8.
TokenizedCorpus read_corpus(std::istream& in, const ReaderOptions& options = {});
TokenizedCorpus read_corpus_file(const std::string& path,
                                 const ReaderOptions& options = {});
TokenizedCorpus parse_corpus(std::string_view text,
                             const ReaderOptions& options = {});

bool is_valid_utf8(std::string_view bytes);

// Rank-ordered lexicon: counts are non-increasing, ties broken by token.
class Vocabulary {
 public:
  Vocabulary() = default;
  Vocabulary(std::vector<std::string> tokens, std::vector<std::uint64_t> counts);

  std::size_t size() const { return tokens_.size(); }
  bool empty() const { return tokens_.empty(); }
  std::uint64_t total() const { return total_; }

  const std::string& token(WordId id) const;
  std::uint64_t count(WordId id) const;
  double probability(WordId id) const;

  std::optional<WordId> find(std::string_view token) const;
  WordId id(std::string_view token) const;  // throws Lookup

  std::span<const std::string> tokens() const { return tokens_; }
  std::span<const std::uint64_t> counts() const { return counts_; }

 private:
  std::vector<std::string> tokens_;
  std::vector<std::uint64_t> counts_;
  std::unordered_map<std::string, WordId> index_;
  std::uint64_t total_ = 0;
};

Vocabulary build_vocabulary(const TokenizedCorpus& corpus,
                            std::uint64_t min_count);

void write_vocabulary(std::ostream& out, const Vocabulary& vocab);
Vocabulary read_vocabulary(std::istream& in);

enum class TargetKind : std::uint8_t {
  Unigram,           // t
  OrderedBigram,     // s t
  UnorderedBigram,   // {s t}
  ExclusionWord,     // s/t\s : a token of t not next to s
  AdjacentWord,      // a token of t next to s
  NearfarLeft,       // s.  (left-hand-side word)
  NearfarRight,      // .t  (right-hand-side word)
  NearfarExclLeft,   // s.\t : s. not at the left of t
  NearfarExclRight,  // s/.t : .t not at the right of s
};

const char* target_tag(TargetKind kind);
bool is_phrase_kind(TargetKind kind);

// Word ids of a target. For single-word kinds `second` equals `first`. For the
// exclusion and adjacency kinds `first` is the partner word s and `second` the
// token word t.
struct TargetKey {
  TargetKind kind = TargetKind::Unigram;
  WordId first = 0;
  WordId second = 0;

  static TargetKey unigram(WordId t) { return {TargetKind::Unigram, t, t}; }
  static TargetKey ordered(WordId s, WordId t) {
    return {TargetKind::OrderedBigram, s, t};
  }
  static TargetKey unordered(WordId s, WordId t) {
    return s <= t ? TargetKey{TargetKind::UnorderedBigram, s, t}
                  : TargetKey{TargetKind::UnorderedBigram, t, s};
  }
  static TargetKey exclusion(WordId s, WordId t) {
    return {TargetKind::ExclusionWord, s, t};
  }
  static TargetKey adjacent(WordId s, WordId t) {
    return {TargetKind::AdjacentWord, s, t};
  }
  static TargetKey nearfar_left(WordId s) {
    return {TargetKind::NearfarLeft, s, s};
  }
  static TargetKey nearfar_right(WordId t) {
    return {TargetKind::NearfarRight, t, t};
  }
  static TargetKey nearfar_excl_left(WordId s, WordId t) {
    return {TargetKind::NearfarExclLeft, s, t};
  }
  static TargetKey nearfar_excl_right(WordId s, WordId t) {
    return {TargetKind::NearfarExclRight, s, t};
  }

  bool single_word() const {
    return kind == TargetKind::Unigram || kind == TargetKind::NearfarLeft ||
           kind == TargetKind::NearfarRight;
  }

  auto operator<=>(const TargetKey&) const = default;
};

// Text form: a kind tag followed by the words, space separated, e.g.
// "W tax", "O tax rate", "U rate tax", "X s t", "L s", "XR s t".
std::string format_target(const TargetKey& key, const Vocabulary& vocab);
TargetKey parse_target(std::string_view text, const Vocabulary& vocab);

struct ContextConfig {
  int word_window = 5;
  int phrase_window = 4;
  bool nearfar = false;
  bool sentence_bounded = true;

  void validate() const;
};

// Near-far windows: two Near and two Far positions per side.
inline constexpr int kNearWidth = 2;
inline constexpr int kFarWidth = 2;

inline std::uint32_t near_context(WordId i) { return 2 * i; }
inline std::uint32_t far_context(WordId i) { return 2 * i + 1; }

struct TargetSet {
  std::vector<WordId> unigrams;
  std::map<std::pair<WordId, WordId>, std::uint64_t> ordered;
  std::map<std::pair<WordId, WordId>, std::uint64_t> unordered;  // s <= t
};

TargetSet extract_targets(const TokenizedCorpus& corpus, const Vocabulary& vocab,
                          std::uint64_t min_count);

struct SparseCounts {
  std::vector<std::pair<std::uint32_t, std::uint64_t>> entries;  // ascending id
  std::uint64_t total = 0;        // sum of entry counts, C(target)
  std::uint64_t occurrences = 0;  // number of target tokens in the corpus

  std::uint64_t at(std::uint32_t context) const;
  bool operator==(const SparseCounts&) const = default;
};

SparseCounts make_counts(std::span<const std::uint64_t> dense,
                         std::uint64_t occurrences);

class CoocTable {
 public:
  CoocTable(std::shared_ptr<const Vocabulary> vocab, ContextConfig config);

  const Vocabulary& vocab() const { return *vocab_; }
  const std::shared_ptr<const Vocabulary>& vocab_ptr() const { return vocab_; }
  const ContextConfig& config() const { return config_; }
  // n for ordinary contexts, 2n for Near-far labeled contexts.
  std::size_t context_size() const;

  bool contains(const TargetKey& key) const;
  const SparseCounts& counts(const TargetKey& key) const;  // throws Lookup
  double probability(const TargetKey& key, std::uint32_t context) const;
  std::vector<double> probabilities(const TargetKey& key) const;

  const std::map<TargetKey, SparseCounts>& targets() const { return targets_; }
  std::vector<TargetKey> keys_of(TargetKind kind) const;

  void insert(const TargetKey& key, SparseCounts counts);
  // Adds counts target by target. Both tables must share the configuration
  // and lexicon size.
  void merge(const CoocTable& other);

  void write(std::ostream& out) const;
  static CoocTable read(std::istream& in, std::shared_ptr<const Vocabulary> vocab);

  bool operator==(const CoocTable& other) const;

 private:
  std::shared_ptr<const Vocabulary> vocab_;
  ContextConfig config_;
  std::map<TargetKey, SparseCounts> targets_;
};

// Ids of a sentence under `vocab`; -1 marks out-of-vocabulary tokens.
std::vector<std::int32_t> encode(const Sentence& sentence, const Vocabulary& vocab);

// Counts contexts for every target in `targets`. Ordinary mode emits unigram,
// ordered and unordered bigram targets plus, for every unordered bigram {s t},
// the exclusion and adjacency targets of both words. Near-far mode emits s.,
// .t, ordered bigrams and the two Near-far exclusion targets per ordered
// bigram. Sentences are split into `shards` contiguous blocks counted on
// separate threads and merged in order.
CoocTable count_contexts(const TokenizedCorpus& corpus,
                         std::shared_ptr<const Vocabulary> vocab,
                         const TargetSet& targets, const ContextConfig& config,
                         unsigned shards = 1);

struct PartitionCounts {
  const SparseCounts* exclusion = nullptr;  // C^{s/t\s}
  const SparseCounts* adjacent = nullptr;   // C^{t next to s}
  double pi = 0.0;                          // C(s/t\s) / C(t), by occurrences
};

PartitionCounts partition_counts(const CoocTable& cooc, WordId s, WordId t);

// True when C_i^t == C_i^{s/t\s} + C_i^{t next to s} for every i and every
// counted (s, t); in Near-far tables checks C^{s.} = C^{s.\t} + C^{st} and
// C^{.t} = C^{s/.t} + C^{st}. `checked` receives the number of identities.
bool verify_partition(const CoocTable& cooc, std::size_t* checked = nullptr);

}  // namespace addcomp
