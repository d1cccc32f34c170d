#pragma once

// Additive composition of word vectors, its bias against the phrase vector,
// and the collocation-based bound on that bias.

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "addcomp/corpus.hpp"
#include "addcomp/vectors.hpp"

namespace addcomp {

// Vector of a target; lets reports run on natural vectors or embeddings.
using VectorLookup = std::function<std::vector<double>(const TargetKey&)>;

VectorLookup natural_lookup(const VectorSpace& space);
// Rows of `set` keyed by format_target(key, vocab).
VectorLookup embedding_lookup(const EmbeddingSet& set, const Vocabulary& vocab);

// Keys of the two word vectors composed for phrase (s, t): s and t, or s. and
// .t in Near-far mode.
std::pair<TargetKey, TargetKey> constituent_keys(WordId s, WordId t, bool nearfar);
// {st} in ordinary mode, st in Near-far mode.
TargetKey phrase_key(WordId s, WordId t, bool nearfar);

// 0.5 * (w^s + w^t)
std::vector<double> compose_additive(const VectorLookup& lookup, WordId s, WordId t,
                                     bool nearfar);
std::vector<double> compose_additive(const VectorSpace& space, WordId s, WordId t);

// (pi1, pi2) from occurrence counts, clamped to [0, 1]. Throws Domain when a
// word count is zero.
std::pair<double, double> collocation_pi(const CoocTable& cooc, WordId s, WordId t);

// ||w^phrase - 0.5 (w^s + w^t)||
double bias(const VectorLookup& lookup, WordId s, WordId t, bool nearfar);
double bias(const VectorSpace& space, WordId s, WordId t);

// sqrt(0.5 (pi1^2 + pi2^2 + pi1 pi2)); throws Domain outside [0, 1].
double bias_bound(double pi1, double pi2);

struct BiasRecord {
  TargetKey phrase;
  double pi1 = 0.0, pi2 = 0.0;
  double bound = 0.0;
  double bias = 0.0;
  std::optional<double> bias_reversed;  // Near-far: w^{ts} against s. + .t
};

struct BiasReport {
  std::vector<BiasRecord> records;
  bool nearfar = false;
  double epsilon = 0.0;
  double violation_fraction = 0.0;  // fraction with bias > bound + epsilon
  double mean_bias = 0.0;
  std::optional<double> mean_bias_reversed;  // over records that have one
};

// `phrases` are unordered (ordinary) or ordered (Near-far) bigram keys.
// Throws Evaluation when the list is empty.
BiasReport bias_report(const VectorLookup& lookup, const CoocTable& cooc,
                       const std::vector<TargetKey>& phrases, double epsilon = 0.0);
BiasReport bias_report(const VectorSpace& space, const std::vector<TargetKey>& phrases,
                       double epsilon = 0.0);

// phrase<TAB>pi1<TAB>pi2<TAB>bound<TAB>bias[<TAB>bias_reversed]
void write_scatter(std::ostream& out, const BiasReport& report, const Vocabulary& vocab);

struct Neighbor {
  std::string key;
  double cosine = 0.0;
};

// Top-k rows of `set` by cosine to `query`, ties broken by key. Zero rows are
// skipped and counted in `skipped`. Throws Domain for a zero query.
std::vector<Neighbor> nearest_neighbors(const EmbeddingSet& set,
                                        std::span<const double> query, std::size_t k,
                                        std::size_t* skipped = nullptr);

}  // namespace addcomp
