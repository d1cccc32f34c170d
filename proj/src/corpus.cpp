#include "addcomp/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "addcomp/error.hpp"

namespace addcomp {

namespace {

bool is_terminal_token(std::string_view tok) {
  if (tok.empty()) return false;
  return std::all_of(tok.begin(), tok.end(),
                     [](char c) { return c == '.' || c == '!' || c == '?'; });
}

bool is_punctuation_token(std::string_view tok) {
  if (tok.empty()) return false;
  return std::all_of(tok.begin(), tok.end(), [](char c) {
    const auto u = static_cast<unsigned char>(c);
    return u < 0x80 && std::ispunct(u);
  });
}

void split_line(std::string_view line, const ReaderOptions& options,
                TokenizedCorpus& out) {
  Sentence current;
  std::size_t pos = 0;
  while (pos < line.size()) {
    while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
    std::size_t end = pos;
    while (end < line.size() && line[end] != ' ' && line[end] != '\t') ++end;
    if (end > pos) {
      std::string_view tok = line.substr(pos, end - pos);
      if (options.split_on_terminal && is_terminal_token(tok)) {
        if (!current.empty()) out.push_back(std::move(current));
        current.clear();
      } else if (!(options.drop_punctuation && is_punctuation_token(tok))) {
        current.emplace_back(tok);
      }
    }
    pos = end;
  }
  if (!current.empty()) out.push_back(std::move(current));
}

std::uint64_t parse_u64(std::string_view text, const char* what) {
  std::uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    fail(ErrorKind::Decode, std::string("malformed ") + what + ": '" +
                                std::string(text) + "'");
  }
  return value;
}

std::vector<std::string_view> split_on(std::string_view text, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  for (;;) {
    const std::size_t p = text.find(sep, start);
    if (p == std::string_view::npos) {
      parts.push_back(text.substr(start));
      return parts;
    }
    parts.push_back(text.substr(start, p - start));
    start = p + 1;
  }
}

}  // namespace

bool is_valid_utf8(std::string_view bytes) {
  std::size_t i = 0;
  const std::size_t n = bytes.size();
  while (i < n) {
    const auto c = static_cast<unsigned char>(bytes[i]);
    std::size_t len = 0;
    std::uint32_t cp = 0;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      len = 2;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + len > n) return false;
    for (std::size_t k = 1; k < len; ++k) {
      const auto cc = static_cast<unsigned char>(bytes[i + k]);
      if ((cc & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    // Overlong forms, surrogates and out-of-range code points.
    if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) ||
        (len == 4 && cp < 0x10000) || cp > 0x10FFFF ||
        (cp >= 0xD800 && cp <= 0xDFFF)) {
      return false;
    }
    i += len;
  }
  return true;
}

TokenizedCorpus read_corpus(std::istream& in, const ReaderOptions& options) {
  TokenizedCorpus out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!is_valid_utf8(line)) {
      fail(ErrorKind::Decode,
           "invalid UTF-8 on line " + std::to_string(line_no));
    }
    split_line(line, options, out);
  }
  return out;
}

TokenizedCorpus read_corpus_file(const std::string& path,
                                 const ReaderOptions& options) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorKind::Io, "cannot open corpus: " + path);
  return read_corpus(in, options);
}

TokenizedCorpus parse_corpus(std::string_view text, const ReaderOptions& options) {
  std::istringstream in{std::string(text)};
  return read_corpus(in, options);
}

// ---------------------------------------------------------------------------
// Vocabulary

Vocabulary::Vocabulary(std::vector<std::string> tokens,
                       std::vector<std::uint64_t> counts)
    : tokens_(std::move(tokens)), counts_(std::move(counts)) {
  require(tokens_.size() == counts_.size(), ErrorKind::Parameter,
          "vocabulary tokens and counts differ in length");
  index_.reserve(tokens_.size());
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    require(!tokens_[i].empty(), ErrorKind::Parameter, "empty token");
    if (i > 0) {
      require(counts_[i] <= counts_[i - 1], ErrorKind::Parameter,
              "vocabulary counts must be non-increasing");
    }
    const bool fresh =
        index_.emplace(tokens_[i], static_cast<WordId>(i)).second;
    require(fresh, ErrorKind::Parameter, "duplicate token: " + tokens_[i]);
    total_ += counts_[i];
  }
}

const std::string& Vocabulary::token(WordId id) const {
  require(id < tokens_.size(), ErrorKind::Lookup,
          "word id out of range: " + std::to_string(id));
  return tokens_[id];
}

std::uint64_t Vocabulary::count(WordId id) const {
  require(id < counts_.size(), ErrorKind::Lookup,
          "word id out of range: " + std::to_string(id));
  return counts_[id];
}

double Vocabulary::probability(WordId id) const {
  return total_ == 0 ? 0.0
                     : static_cast<double>(count(id)) / static_cast<double>(total_);
}

std::optional<WordId> Vocabulary::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

WordId Vocabulary::id(std::string_view token) const {
  auto found = find(token);
  require(found.has_value(), ErrorKind::Lookup,
          "unknown word: " + std::string(token));
  return *found;
}

Vocabulary build_vocabulary(const TokenizedCorpus& corpus,
                            std::uint64_t min_count) {
  require(min_count >= 1, ErrorKind::Parameter, "min_count must be >= 1");
  std::unordered_map<std::string, std::uint64_t> counts;
  for (const auto& sentence : corpus) {
    for (const auto& tok : sentence) {
      require(!tok.empty(), ErrorKind::Decode, "empty token");
      ++counts[tok];
    }
  }
  std::vector<std::pair<std::string, std::uint64_t>> kept;
  for (auto& [tok, c] : counts) {
    if (c >= min_count) kept.emplace_back(tok, c);
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<std::string> tokens;
  std::vector<std::uint64_t> values;
  tokens.reserve(kept.size());
  values.reserve(kept.size());
  for (auto& [tok, c] : kept) {
    tokens.push_back(std::move(tok));
    values.push_back(c);
  }
  return Vocabulary(std::move(tokens), std::move(values));
}

void write_vocabulary(std::ostream& out, const Vocabulary& vocab) {
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    out << vocab.tokens()[i] << '\t' << vocab.counts()[i] << '\n';
  }
}

Vocabulary read_vocabulary(std::istream& in) {
  std::vector<std::string> tokens;
  std::vector<std::uint64_t> counts;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto tab = line.find('\t');
    require(tab != std::string::npos, ErrorKind::Decode,
            "vocabulary line without tab: " + line);
    tokens.push_back(line.substr(0, tab));
    counts.push_back(parse_u64(std::string_view(line).substr(tab + 1), "count"));
  }
  return Vocabulary(std::move(tokens), std::move(counts));
}

// ---------------------------------------------------------------------------
// Target keys

const char* target_tag(TargetKind kind) {
  switch (kind) {
    case TargetKind::Unigram: return "W";
    case TargetKind::OrderedBigram: return "O";
    case TargetKind::UnorderedBigram: return "U";
    case TargetKind::ExclusionWord: return "X";
    case TargetKind::AdjacentWord: return "A";
    case TargetKind::NearfarLeft: return "L";
    case TargetKind::NearfarRight: return "R";
    case TargetKind::NearfarExclLeft: return "XL";
    case TargetKind::NearfarExclRight: return "XR";
  }
  return "?";
}

bool is_phrase_kind(TargetKind kind) {
  return kind == TargetKind::OrderedBigram ||
         kind == TargetKind::UnorderedBigram;
}

std::string format_target(const TargetKey& key, const Vocabulary& vocab) {
  std::string out = target_tag(key.kind);
  out += ' ';
  out += vocab.token(key.first);
  if (!key.single_word()) {
    out += ' ';
    out += vocab.token(key.second);
  }
  return out;
}

TargetKey parse_target(std::string_view text, const Vocabulary& vocab) {
  auto parts = split_on(text, ' ');
  require(parts.size() == 2 || parts.size() == 3, ErrorKind::Decode,
          "malformed target key: '" + std::string(text) + "'");
  static const TargetKind kinds[] = {
      TargetKind::Unigram,         TargetKind::OrderedBigram,
      TargetKind::UnorderedBigram, TargetKind::ExclusionWord,
      TargetKind::AdjacentWord,    TargetKind::NearfarLeft,
      TargetKind::NearfarRight,    TargetKind::NearfarExclLeft,
      TargetKind::NearfarExclRight};
  for (TargetKind kind : kinds) {
    if (parts[0] != target_tag(kind)) continue;
    TargetKey key{kind, vocab.id(parts[1]), 0};
    if (key.single_word()) {
      require(parts.size() == 2, ErrorKind::Decode,
              "single-word target with two words: '" + std::string(text) + "'");
      key.second = key.first;
    } else {
      require(parts.size() == 3, ErrorKind::Decode,
              "two-word target with one word: '" + std::string(text) + "'");
      key.second = vocab.id(parts[2]);
      if (kind == TargetKind::UnorderedBigram) {
        key = TargetKey::unordered(key.first, key.second);
      }
    }
    return key;
  }
  fail(ErrorKind::Decode, "unknown target tag in '" + std::string(text) + "'");
}

void ContextConfig::validate() const {
  require(word_window >= 1, ErrorKind::Parameter, "word_window must be >= 1");
  require(phrase_window >= 1, ErrorKind::Parameter, "phrase_window must be >= 1");
  require(sentence_bounded, ErrorKind::Parameter,
          "only sentence-bounded windows are supported");
}

// ---------------------------------------------------------------------------
// Targets

std::vector<std::int32_t> encode(const Sentence& sentence, const Vocabulary& vocab) {
  std::vector<std::int32_t> ids(sentence.size());
  for (std::size_t j = 0; j < sentence.size(); ++j) {
    auto id = vocab.find(sentence[j]);
    ids[j] = id ? static_cast<std::int32_t>(*id) : -1;
  }
  return ids;
}

TargetSet extract_targets(const TokenizedCorpus& corpus, const Vocabulary& vocab,
                          std::uint64_t min_count) {
  require(min_count >= 1, ErrorKind::Parameter, "min_count must be >= 1");
  TargetSet out;
  for (WordId i = 0; i < vocab.size(); ++i) {
    if (vocab.count(i) >= min_count) out.unigrams.push_back(i);
  }
  std::map<std::pair<WordId, WordId>, std::uint64_t> ordered;
  for (const auto& sentence : corpus) {
    auto ids = encode(sentence, vocab);
    for (std::size_t j = 0; j + 1 < ids.size(); ++j) {
      if (ids[j] < 0 || ids[j + 1] < 0) continue;
      ++ordered[{static_cast<WordId>(ids[j]), static_cast<WordId>(ids[j + 1])}];
    }
  }
  std::map<std::pair<WordId, WordId>, std::uint64_t> unordered;
  for (const auto& [pair, c] : ordered) {
    auto [s, t] = pair;
    unordered[{std::min(s, t), std::max(s, t)}] += c;
  }
  for (const auto& [pair, c] : ordered) {
    if (c >= min_count) out.ordered.emplace(pair, c);
  }
  for (const auto& [pair, c] : unordered) {
    if (c >= min_count) out.unordered.emplace(pair, c);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sparse counts and tables

std::uint64_t SparseCounts::at(std::uint32_t context) const {
  auto it = std::lower_bound(
      entries.begin(), entries.end(), context,
      [](const auto& e, std::uint32_t c) { return e.first < c; });
  return (it != entries.end() && it->first == context) ? it->second : 0;
}

SparseCounts make_counts(std::span<const std::uint64_t> dense,
                         std::uint64_t occurrences) {
  SparseCounts out;
  out.occurrences = occurrences;
  for (std::size_t i = 0; i < dense.size(); ++i) {
    if (dense[i] == 0) continue;
    out.entries.emplace_back(static_cast<std::uint32_t>(i), dense[i]);
    out.total += dense[i];
  }
  return out;
}

CoocTable::CoocTable(std::shared_ptr<const Vocabulary> vocab, ContextConfig config)
    : vocab_(std::move(vocab)), config_(config) {
  require(vocab_ != nullptr, ErrorKind::Parameter, "table needs a vocabulary");
  config_.validate();
}

std::size_t CoocTable::context_size() const {
  return config_.nearfar ? 2 * vocab_->size() : vocab_->size();
}

bool CoocTable::contains(const TargetKey& key) const {
  return targets_.count(key) != 0;
}

const SparseCounts& CoocTable::counts(const TargetKey& key) const {
  auto it = targets_.find(key);
  if (it == targets_.end()) {
    std::string name;
    try {
      name = format_target(key, *vocab_);
    } catch (const Error&) {
      name = "<invalid ids>";
    }
    fail(ErrorKind::Lookup, "target not in table: " + name);
  }
  return it->second;
}

double CoocTable::probability(const TargetKey& key, std::uint32_t context) const {
  const auto& c = counts(key);
  return c.total == 0 ? 0.0
                      : static_cast<double>(c.at(context)) /
                            static_cast<double>(c.total);
}

std::vector<double> CoocTable::probabilities(const TargetKey& key) const {
  const auto& c = counts(key);
  std::vector<double> p(context_size(), 0.0);
  if (c.total == 0) return p;
  for (const auto& [i, v] : c.entries) {
    p[i] = static_cast<double>(v) / static_cast<double>(c.total);
  }
  return p;
}

std::vector<TargetKey> CoocTable::keys_of(TargetKind kind) const {
  std::vector<TargetKey> out;
  for (const auto& [key, _] : targets_) {
    if (key.kind == kind) out.push_back(key);
  }
  return out;
}

void CoocTable::insert(const TargetKey& key, SparseCounts counts) {
  std::uint64_t sum = 0;
  for (std::size_t k = 0; k < counts.entries.size(); ++k) {
    require(counts.entries[k].first < context_size(), ErrorKind::Parameter,
            "context id out of range");
    require(k == 0 || counts.entries[k - 1].first < counts.entries[k].first,
            ErrorKind::Parameter, "context ids must be strictly ascending");
    sum += counts.entries[k].second;
  }
  require(sum == counts.total, ErrorKind::Parameter,
          "target total does not match its context counts");
  targets_[key] = std::move(counts);
}

void CoocTable::merge(const CoocTable& other) {
  require(other.context_size() == context_size() &&
              other.config_.nearfar == config_.nearfar &&
              other.config_.word_window == config_.word_window &&
              other.config_.phrase_window == config_.phrase_window,
          ErrorKind::Parameter, "cannot merge tables with different layouts");
  for (const auto& [key, theirs] : other.targets_) {
    auto& mine = targets_[key];
    std::vector<std::pair<std::uint32_t, std::uint64_t>> merged;
    merged.reserve(mine.entries.size() + theirs.entries.size());
    auto a = mine.entries.begin();
    auto b = theirs.entries.begin();
    while (a != mine.entries.end() || b != theirs.entries.end()) {
      if (b == theirs.entries.end() ||
          (a != mine.entries.end() && a->first < b->first)) {
        merged.push_back(*a++);
      } else if (a == mine.entries.end() || b->first < a->first) {
        merged.push_back(*b++);
      } else {
        merged.emplace_back(a->first, a->second + b->second);
        ++a;
        ++b;
      }
    }
    mine.entries = std::move(merged);
    mine.total += theirs.total;
    mine.occurrences += theirs.occurrences;
  }
}

void CoocTable::write(std::ostream& out) const {
  out << vocab_->size() << '\t' << (config_.nearfar ? 1 : 0) << '\t'
      << config_.word_window << '\t' << config_.phrase_window << '\n';
  for (const auto& [key, c] : targets_) {
    out << format_target(key, *vocab_) << '\t' << c.total << '\t';
    for (std::size_t k = 0; k < c.entries.size(); ++k) {
      if (k) out << ',';
      out << c.entries[k].first << ':' << c.entries[k].second;
    }
    out << '\t' << c.occurrences << '\n';
  }
}

CoocTable CoocTable::read(std::istream& in, std::shared_ptr<const Vocabulary> vocab) {
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorKind::Decode,
          "empty table file");
  auto header = split_on(line, '\t');
  require(header.size() == 4, ErrorKind::Decode, "malformed table header");
  const auto n = parse_u64(header[0], "lexicon size");
  require(vocab && n == vocab->size(), ErrorKind::Decode,
          "table lexicon size does not match the vocabulary");
  ContextConfig config;
  config.nearfar = parse_u64(header[1], "nearfar flag") != 0;
  config.word_window = static_cast<int>(parse_u64(header[2], "word window"));
  config.phrase_window = static_cast<int>(parse_u64(header[3], "phrase window"));
  CoocTable table(std::move(vocab), config);
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_on(line, '\t');
    require(fields.size() == 3 || fields.size() == 4, ErrorKind::Decode,
            "malformed table line: " + line);
    SparseCounts c;
    c.total = parse_u64(fields[1], "target total");
    if (!fields[2].empty()) {
      for (auto item : split_on(fields[2], ',')) {
        auto colon = item.find(':');
        require(colon != std::string_view::npos, ErrorKind::Decode,
                "malformed context entry: " + std::string(item));
        c.entries.emplace_back(
            static_cast<std::uint32_t>(parse_u64(item.substr(0, colon), "context id")),
            parse_u64(item.substr(colon + 1), "context count"));
      }
    }
    c.occurrences = fields.size() == 4 ? parse_u64(fields[3], "occurrences") : 0;
    TargetKey key = parse_target(fields[0], table.vocab());
    try {
      table.insert(key, std::move(c));
    } catch (const Error& e) {
      fail(ErrorKind::Decode, std::string(e.what()) + " in line: " + line);
    }
  }
  return table;
}

bool CoocTable::operator==(const CoocTable& other) const {
  return context_size() == other.context_size() &&
         config_.nearfar == other.config_.nearfar &&
         config_.word_window == other.config_.word_window &&
         config_.phrase_window == other.config_.phrase_window &&
         targets_ == other.targets_;
}

// ---------------------------------------------------------------------------
// Counting

namespace {

struct Slot {
  int offset;
  bool far;
};

// Window patterns relative to the anchor position (the token, or the first
// token of a bigram).
struct Windows {
  std::vector<Slot> word;
  std::vector<Slot> phrase;
  std::vector<Slot> left_word;   // s.
  std::vector<Slot> right_word;  // .t
};

Windows make_windows(const ContextConfig& config) {
  Windows w;
  if (!config.nearfar) {
    for (int k = 1; k <= config.word_window; ++k) {
      w.word.push_back({-k, false});
      w.word.push_back({k, false});
    }
    for (int k = 1; k <= config.phrase_window; ++k) {
      w.phrase.push_back({-k, false});
      w.phrase.push_back({1 + k, false});
    }
    return w;
  }
  // Near-far: nearer two words per side are N, the farther two are F. The
  // left-hand word skips its right neighbour, the right-hand word its left.
  for (int k = 1; k <= kNearWidth + kFarWidth; ++k) {
    const bool far = k > kNearWidth;
    w.phrase.push_back({-k, far});
    w.phrase.push_back({1 + k, far});
    w.left_word.push_back({-k, far});
    w.left_word.push_back({1 + k, far});
    w.right_word.push_back({-1 - k, far});
    w.right_word.push_back({k, far});
  }
  return w;
}

struct Accumulator {
  std::unordered_map<std::uint32_t, std::uint64_t> counts;
  std::uint64_t occurrences = 0;
};

struct Partner {
  WordId other;
  std::size_t excl;
  std::size_t adj;
};

struct Plan {
  std::vector<TargetKey> keys;
  std::vector<std::int64_t> unigram;   // ordinary W or Near-far L, by word
  std::vector<std::int64_t> right;     // Near-far R, by word
  std::unordered_map<std::uint64_t, std::size_t> ordered;
  std::unordered_map<std::uint64_t, std::size_t> unordered;
  std::vector<std::vector<Partner>> partners;        // ordinary X/A, by t
  std::vector<std::vector<Partner>> left_partners;   // Near-far XL, by s
  std::vector<std::vector<Partner>> right_partners;  // Near-far XR, by t
};

std::uint64_t pair_code(WordId a, WordId b) {
  return (static_cast<std::uint64_t>(a) << 32) | b;
}

Plan make_plan(const Vocabulary& vocab, const TargetSet& targets,
               const ContextConfig& config) {
  Plan plan;
  const std::size_t n = vocab.size();
  plan.unigram.assign(n, -1);
  plan.right.assign(n, -1);
  auto add = [&plan](const TargetKey& key) {
    plan.keys.push_back(key);
    return plan.keys.size() - 1;
  };

  std::set<WordId> words(targets.unigrams.begin(), targets.unigrams.end());
  // Bigram constituents always get their own word targets.
  const auto& pairs = config.nearfar ? targets.ordered : targets.unordered;
  for (const auto& [pair, _] : pairs) {
    words.insert(pair.first);
    words.insert(pair.second);
  }
  for (WordId w : words) {
    require(w < n, ErrorKind::Parameter, "target word id out of range");
    if (config.nearfar) {
      plan.unigram[w] = static_cast<std::int64_t>(add(TargetKey::nearfar_left(w)));
      plan.right[w] = static_cast<std::int64_t>(add(TargetKey::nearfar_right(w)));
    } else {
      plan.unigram[w] = static_cast<std::int64_t>(add(TargetKey::unigram(w)));
    }
  }

  if (config.nearfar) {
    plan.left_partners.resize(n);
    plan.right_partners.resize(n);
    for (const auto& [pair, _] : targets.ordered) {
      auto [s, t] = pair;
      plan.ordered[pair_code(s, t)] = add(TargetKey::ordered(s, t));
      plan.left_partners[s].push_back(
          {t, add(TargetKey::nearfar_excl_left(s, t)), 0});
      plan.right_partners[t].push_back(
          {s, add(TargetKey::nearfar_excl_right(s, t)), 0});
    }
    return plan;
  }

  plan.partners.resize(n);
  for (const auto& [pair, _] : targets.ordered) {
    plan.ordered[pair_code(pair.first, pair.second)] =
        add(TargetKey::ordered(pair.first, pair.second));
  }
  for (const auto& [pair, _] : targets.unordered) {
    auto [s, t] = pair;
    plan.unordered[pair_code(s, t)] = add(TargetKey::unordered(s, t));
    plan.partners[t].push_back(
        {s, add(TargetKey::exclusion(s, t)), add(TargetKey::adjacent(s, t))});
    if (s != t) {
      plan.partners[s].push_back(
          {t, add(TargetKey::exclusion(t, s)), add(TargetKey::adjacent(t, s))});
    }
  }
  return plan;
}

void add_window(Accumulator& acc, const std::vector<std::int32_t>& ids,
                std::size_t anchor, const std::vector<Slot>& slots,
                bool nearfar) {
  ++acc.occurrences;
  const auto len = static_cast<std::int64_t>(ids.size());
  for (const Slot& slot : slots) {
    const std::int64_t pos = static_cast<std::int64_t>(anchor) + slot.offset;
    if (pos < 0 || pos >= len) continue;
    const std::int32_t id = ids[static_cast<std::size_t>(pos)];
    if (id < 0) continue;  // out of vocabulary, still occupies the slot
    const auto w = static_cast<WordId>(id);
    ++acc.counts[nearfar ? (slot.far ? far_context(w) : near_context(w)) : w];
  }
}

void count_sentence(const Plan& plan, const Windows& win, bool nearfar,
                    const std::vector<std::int32_t>& ids,
                    std::vector<Accumulator>& acc) {
  const std::size_t len = ids.size();
  for (std::size_t j = 0; j < len; ++j) {
    if (ids[j] < 0) continue;
    const auto w = static_cast<WordId>(ids[j]);
    const std::int32_t prev = j > 0 ? ids[j - 1] : -1;
    const std::int32_t next = j + 1 < len ? ids[j + 1] : -1;

    if (!nearfar) {
      if (plan.unigram[w] >= 0) {
        add_window(acc[static_cast<std::size_t>(plan.unigram[w])], ids, j,
                   win.word, false);
      }
      for (const Partner& p : plan.partners[w]) {
        const auto s = static_cast<std::int32_t>(p.other);
        const bool next_to = prev == s || next == s;
        add_window(acc[next_to ? p.adj : p.excl], ids, j, win.word, false);
      }
      if (next >= 0) {
        const auto t = static_cast<WordId>(next);
        auto o = plan.ordered.find(pair_code(w, t));
        if (o != plan.ordered.end()) {
          add_window(acc[o->second], ids, j, win.phrase, false);
        }
        auto u = plan.unordered.find(pair_code(std::min(w, t), std::max(w, t)));
        if (u != plan.unordered.end()) {
          add_window(acc[u->second], ids, j, win.phrase, false);
        }
      }
      continue;
    }

    if (plan.unigram[w] >= 0) {
      add_window(acc[static_cast<std::size_t>(plan.unigram[w])], ids, j,
                 win.left_word, true);
    }
    if (plan.right[w] >= 0) {
      add_window(acc[static_cast<std::size_t>(plan.right[w])], ids, j,
                 win.right_word, true);
    }
    for (const Partner& p : plan.left_partners[w]) {
      if (next != static_cast<std::int32_t>(p.other)) {
        add_window(acc[p.excl], ids, j, win.left_word, true);
      }
    }
    for (const Partner& p : plan.right_partners[w]) {
      if (prev != static_cast<std::int32_t>(p.other)) {
        add_window(acc[p.excl], ids, j, win.right_word, true);
      }
    }
    if (next >= 0) {
      auto o = plan.ordered.find(pair_code(w, static_cast<WordId>(next)));
      if (o != plan.ordered.end()) {
        add_window(acc[o->second], ids, j, win.phrase, true);
      }
    }
  }
}

CoocTable count_block(const TokenizedCorpus& corpus, std::size_t begin,
                      std::size_t end, const std::shared_ptr<const Vocabulary>& vocab,
                      const Plan& plan, const ContextConfig& config) {
  const Windows win = make_windows(config);
  std::vector<Accumulator> acc(plan.keys.size());
  for (std::size_t k = begin; k < end; ++k) {
    count_sentence(plan, win, config.nearfar, encode(corpus[k], *vocab), acc);
  }
  CoocTable table(vocab, config);
  for (std::size_t k = 0; k < plan.keys.size(); ++k) {
    SparseCounts c;
    c.occurrences = acc[k].occurrences;
    c.entries.assign(acc[k].counts.begin(), acc[k].counts.end());
    std::sort(c.entries.begin(), c.entries.end());
    for (const auto& e : c.entries) c.total += e.second;
    table.insert(plan.keys[k], std::move(c));
  }
  return table;
}

}  // namespace

CoocTable count_contexts(const TokenizedCorpus& corpus,
                         std::shared_ptr<const Vocabulary> vocab,
                         const TargetSet& targets, const ContextConfig& config,
                         unsigned shards) {
  config.validate();
  require(vocab != nullptr, ErrorKind::Parameter, "counting needs a vocabulary");
  const Plan plan = make_plan(*vocab, targets, config);
  shards = std::max(1u, std::min<unsigned>(
                            shards, static_cast<unsigned>(std::max<std::size_t>(
                                        1, corpus.size()))));
  if (shards == 1) return count_block(corpus, 0, corpus.size(), vocab, plan, config);

  std::vector<std::optional<CoocTable>> parts(shards);
  std::vector<std::thread> workers;
  const std::size_t per = (corpus.size() + shards - 1) / shards;
  for (unsigned s = 0; s < shards; ++s) {
    const std::size_t begin = std::min(corpus.size(), s * per);
    const std::size_t end = std::min(corpus.size(), begin + per);
    workers.emplace_back([&, s, begin, end] {
      parts[s].emplace(count_block(corpus, begin, end, vocab, plan, config));
    });
  }
  for (auto& w : workers) w.join();
  CoocTable table = std::move(*parts[0]);
  for (unsigned s = 1; s < shards; ++s) table.merge(*parts[s]);
  return table;
}

PartitionCounts partition_counts(const CoocTable& cooc, WordId s, WordId t) {
  require(s < cooc.vocab().size() && t < cooc.vocab().size(), ErrorKind::Lookup,
          "unknown word id in partition");
  const auto& whole = cooc.counts(TargetKey::unigram(t));
  PartitionCounts out;
  out.exclusion = &cooc.counts(TargetKey::exclusion(s, t));
  out.adjacent = &cooc.counts(TargetKey::adjacent(s, t));
  require(whole.occurrences > 0, ErrorKind::Domain,
          "word never occurs: " + cooc.vocab().token(t));
  out.pi = static_cast<double>(out.exclusion->occurrences) /
           static_cast<double>(whole.occurrences);
  return out;
}

namespace {

bool sums_to(const SparseCounts& whole, const SparseCounts& a,
             const SparseCounts& b) {
  if (whole.total != a.total + b.total) return false;
  if (whole.occurrences != a.occurrences + b.occurrences) return false;
  for (const auto& [i, c] : whole.entries) {
    if (c != a.at(i) + b.at(i)) return false;
  }
  // Entries present in a part but absent from the whole.
  for (const auto& [i, c] : a.entries) {
    if (whole.at(i) < c) return false;
  }
  for (const auto& [i, c] : b.entries) {
    if (whole.at(i) < c) return false;
  }
  return true;
}

}  // namespace

bool verify_partition(const CoocTable& cooc, std::size_t* checked) {
  std::size_t n = 0;
  bool ok = true;
  for (const auto& [key, c] : cooc.targets()) {
    if (key.kind == TargetKind::ExclusionWord) {
      const auto& whole = cooc.counts(TargetKey::unigram(key.second));
      const auto& adj = cooc.counts(TargetKey::adjacent(key.first, key.second));
      ok = ok && sums_to(whole, c, adj);
      ++n;
    } else if (key.kind == TargetKind::NearfarExclLeft) {
      const auto& whole = cooc.counts(TargetKey::nearfar_left(key.first));
      const auto& phrase = cooc.counts(TargetKey::ordered(key.first, key.second));
      ok = ok && sums_to(whole, c, phrase);
      ++n;
    } else if (key.kind == TargetKind::NearfarExclRight) {
      const auto& whole = cooc.counts(TargetKey::nearfar_right(key.second));
      const auto& phrase = cooc.counts(TargetKey::ordered(key.first, key.second));
      ok = ok && sums_to(whole, c, phrase);
      ++n;
    }
  }
  if (checked) *checked = n;
  return ok;
}

}  // namespace addcomp
