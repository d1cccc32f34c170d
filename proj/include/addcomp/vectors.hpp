#pragma once

// Natural vectors: w_i = c * (F(p_i + 1/n) - a - b_i).

#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "addcomp/corpus.hpp"

namespace addcomp {

// x^lambda / lambda, or ln x at lambda = 0. Throws Domain for x <= 0.
double f_transform(double x, double lambda);

enum class OffsetMode {
  Computed,  // a chosen so every vector's entries average to 0
  Zero,      // a frozen at 0
};

// Unordered bigrams for ordinary tables, ordered bigrams for Near-far ones.
std::vector<TargetKey> default_phrase_set(const CoocTable& cooc);

class VectorSpace {
 public:
  // Three passes: a per target with b = 0, then b as the mean over the phrase
  // set, then c so that the mean phrase norm is 1.
  static VectorSpace build(std::shared_ptr<const CoocTable> cooc, double lambda,
                           std::vector<TargetKey> phrases,
                           OffsetMode mode = OffsetMode::Computed);

  double lambda() const { return lambda_; }
  std::size_t dim() const { return n_; }
  double scale() const { return c_; }
  OffsetMode offset_mode() const { return mode_; }
  std::span<const double> dimension_offsets() const { return b_; }
  double target_offset(const TargetKey& key) const;  // a, throws Lookup
  const CoocTable& table() const { return *cooc_; }
  const std::vector<TargetKey>& phrases() const { return phrases_; }
  bool contains(const TargetKey& key) const { return a_.count(key) != 0; }

  // Dense natural vector, recomputed from the sparse counts on each call.
  std::vector<double> vector(const TargetKey& key) const;

 private:
  VectorSpace() = default;
  // F(p_i + 1/n) - a without b and c.
  std::vector<double> centered(const TargetKey& key) const;

  std::shared_ptr<const CoocTable> cooc_;
  double lambda_ = 0.0;
  std::size_t n_ = 0;
  double c_ = 1.0;
  OffsetMode mode_ = OffsetMode::Computed;
  std::vector<double> b_;
  std::map<TargetKey, double> a_;
  std::vector<TargetKey> phrases_;
};

std::vector<double> natural_vector(const VectorSpace& space, const TargetKey& key);

struct HistogramBin {
  double lo = 0.0, hi = 0.0;
  std::uint64_t count = 0;
};

struct NormStatistics {
  std::size_t count = 0;
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
  std::vector<HistogramBin> histogram;
};

// Throws Statistics for fewer than two targets.
NormStatistics norm_statistics(const VectorSpace& space, TargetKind kind,
                               std::size_t bins = 20);
NormStatistics norm_statistics(const VectorSpace& space,
                               std::span<const TargetKey> keys,
                               std::size_t bins = 20);

// Equal-width bins over [lo, hi]; the last bin is closed.
std::vector<HistogramBin> histogram(std::span<const double> values, double lo,
                                    double hi, std::size_t bins);

// Keyed dense rows of a common dimension, e.g. exported natural vectors or
// reduced embeddings.
class EmbeddingSet {
 public:
  EmbeddingSet() = default;
  explicit EmbeddingSet(std::size_t dim) : dim_(dim) {}

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return keys_.size(); }
  bool normalized() const { return normalized_; }

  void add(const std::string& key, std::span<const double> row);
  const std::string& key(std::size_t i) const { return keys_[i]; }
  std::span<const double> row(std::size_t i) const;
  const std::vector<std::string>& keys() const { return keys_; }
  std::optional<std::size_t> find(const std::string& key) const;
  std::span<const double> at(const std::string& key) const;  // throws Lookup

  // Rescales every non-zero row to unit norm; returns the number of zero
  // rows left unchanged.
  std::size_t normalize();

  // One line per row: key<TAB>e1 e2 ... with 9 significant digits.
  void write(std::ostream& out) const;
  static EmbeddingSet read(std::istream& in);

 private:
  std::size_t dim_ = 0;
  bool normalized_ = false;
  std::vector<std::string> keys_;
  std::vector<double> data_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Natural vectors of `keys`, labeled by their target text.
EmbeddingSet export_vectors(const VectorSpace& space, std::span<const TargetKey> keys);

// "%.9g"
std::string format_real(double x);

}  // namespace addcomp
