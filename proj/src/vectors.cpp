#include "addcomp/vectors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "addcomp/error.hpp"
#include "addcomp/numeric.hpp"

namespace addcomp {

double f_transform(double x, double lambda) {
  require(x > 0.0 && std::isfinite(x), ErrorKind::Domain,
          "F is defined for positive x only");
  if (lambda == 0.0) return std::log(x);
  return std::pow(x, lambda) / lambda;
}

std::vector<TargetKey> default_phrase_set(const CoocTable& cooc) {
  return cooc.keys_of(cooc.config().nearfar ? TargetKind::OrderedBigram
                                            : TargetKind::UnorderedBigram);
}

namespace {

// Mean of F(p_i + 1/n) over all n coordinates, visiting only non-zero counts.
double mean_transform(const SparseCounts& counts, std::size_t n, double lambda) {
  const double smooth = 1.0 / static_cast<double>(n);
  const double f_zero = f_transform(smooth, lambda);
  if (counts.total == 0) return f_zero;
  CompensatedSum sum;
  const double total = static_cast<double>(counts.total);
  for (const auto& [i, c] : counts.entries) {
    sum += f_transform(static_cast<double>(c) / total + smooth, lambda);
  }
  sum += static_cast<long double>(n - counts.entries.size()) * f_zero;
  return static_cast<double>(sum.value() / static_cast<long double>(n));
}

}  // namespace

VectorSpace VectorSpace::build(std::shared_ptr<const CoocTable> cooc, double lambda,
                               std::vector<TargetKey> phrases, OffsetMode mode) {
  require(cooc != nullptr, ErrorKind::Parameter, "vector space needs a table");
  require(std::isfinite(lambda), ErrorKind::Parameter, "lambda must be finite");
  require(!phrases.empty(), ErrorKind::Normalization,
          "the phrase set for normalization is empty");
  VectorSpace space;
  space.cooc_ = std::move(cooc);
  space.lambda_ = lambda;
  space.mode_ = mode;
  space.n_ = space.cooc_->context_size();
  require(space.n_ > 0, ErrorKind::Normalization, "empty context lexicon");
  space.phrases_ = std::move(phrases);

  // Pass 1: a per target.
  for (const auto& [key, counts] : space.cooc_->targets()) {
    space.a_[key] =
        mode == OffsetMode::Computed ? mean_transform(counts, space.n_, lambda) : 0.0;
  }
  for (const auto& key : space.phrases_) {
    require(space.contains(key), ErrorKind::Lookup,
            "phrase not in table: " + format_target(key, space.cooc_->vocab()));
  }

  // Pass 2: b as the centroid of the phrase set.
  space.b_.assign(space.n_, 0.0);
  {
    std::vector<CompensatedSum> acc(space.n_);
    for (const auto& key : space.phrases_) {
      const auto x = space.centered(key);
      for (std::size_t i = 0; i < space.n_; ++i) acc[i] += x[i];
    }
    const auto m = static_cast<long double>(space.phrases_.size());
    for (std::size_t i = 0; i < space.n_; ++i) {
      space.b_[i] = static_cast<double>(acc[i].value() / m);
    }
  }

  // Pass 3: c from the mean phrase norm.
  CompensatedSum norm_sum;
  for (const auto& key : space.phrases_) {
    auto x = space.centered(key);
    for (std::size_t i = 0; i < space.n_; ++i) x[i] -= space.b_[i];
    norm_sum += norm(x);
  }
  const double mean_norm =
      static_cast<double>(norm_sum.value() / static_cast<long double>(space.phrases_.size()));
  require(mean_norm > 0.0 && std::isfinite(mean_norm), ErrorKind::Normalization,
          "phrase vectors coincide with their centroid; the scale is undefined");
  space.c_ = 1.0 / mean_norm;
  return space;
}

double VectorSpace::target_offset(const TargetKey& key) const {
  auto it = a_.find(key);
  if (it == a_.end()) {
    fail(ErrorKind::Lookup, "target not in vector space: " +
                                format_target(key, cooc_->vocab()));
  }
  return it->second;
}

std::vector<double> VectorSpace::centered(const TargetKey& key) const {
  const double a = target_offset(key);
  const auto& counts = cooc_->counts(key);
  const double smooth = 1.0 / static_cast<double>(n_);
  std::vector<double> x(n_, f_transform(smooth, lambda_) - a);
  if (counts.total == 0) return x;
  const double total = static_cast<double>(counts.total);
  for (const auto& [i, c] : counts.entries) {
    x[i] = f_transform(static_cast<double>(c) / total + smooth, lambda_) - a;
  }
  return x;
}

std::vector<double> VectorSpace::vector(const TargetKey& key) const {
  auto x = centered(key);
  for (std::size_t i = 0; i < n_; ++i) x[i] = c_ * (x[i] - b_[i]);
  return x;
}

std::vector<double> natural_vector(const VectorSpace& space, const TargetKey& key) {
  return space.vector(key);
}

// ---------------------------------------------------------------------------
// Norm statistics

std::vector<HistogramBin> histogram(std::span<const double> values, double lo,
                                    double hi, std::size_t bins) {
  require(bins >= 1, ErrorKind::Parameter, "histogram needs at least one bin");
  require(hi > lo, ErrorKind::Parameter, "histogram range is empty");
  std::vector<HistogramBin> out(bins);
  const double width = (hi - lo) / static_cast<double>(bins);
  for (std::size_t k = 0; k < bins; ++k) {
    out[k].lo = lo + width * static_cast<double>(k);
    out[k].hi = k + 1 == bins ? hi : lo + width * static_cast<double>(k + 1);
  }
  for (double v : values) {
    if (!(v >= lo && v <= hi)) continue;
    auto k = static_cast<std::size_t>((v - lo) / width);
    ++out[std::min(k, bins - 1)].count;
  }
  return out;
}

NormStatistics norm_statistics(const VectorSpace& space, std::span<const TargetKey> keys,
                               std::size_t bins) {
  require(keys.size() >= 2, ErrorKind::Statistics,
          "norm statistics need at least two targets");
  std::vector<double> norms;
  norms.reserve(keys.size());
  CompensatedSum sum;
  for (const auto& key : keys) {
    norms.push_back(norm(space.vector(key)));
    sum += norms.back();
  }
  NormStatistics out;
  out.count = norms.size();
  const auto m = static_cast<long double>(norms.size());
  out.mean = static_cast<double>(sum.value() / m);
  CompensatedSum sq;
  for (double x : norms) sq += (x - out.mean) * (x - out.mean);
  out.std = std::sqrt(static_cast<double>(sq.value() / m));
  const auto [lo, hi] = std::minmax_element(norms.begin(), norms.end());
  const double top = *hi > *lo ? *hi : *lo + 1.0;
  out.histogram = histogram(norms, *lo, top, bins);
  return out;
}

NormStatistics norm_statistics(const VectorSpace& space, TargetKind kind,
                               std::size_t bins) {
  const auto keys = space.table().keys_of(kind);
  return norm_statistics(space, keys, bins);
}

// ---------------------------------------------------------------------------
// Keyed rows

void EmbeddingSet::add(const std::string& key, std::span<const double> row) {
  if (keys_.empty() && dim_ == 0) dim_ = row.size();
  require(row.size() == dim_, ErrorKind::Parameter,
          "row dimension does not match the set");
  require(!key.empty() && key.find('\t') == std::string::npos &&
              key.find('\n') == std::string::npos,
          ErrorKind::Parameter, "row keys must be non-empty without tabs");
  const bool fresh = index_.emplace(key, keys_.size()).second;
  require(fresh, ErrorKind::Parameter, "duplicate row key: " + key);
  keys_.push_back(key);
  data_.insert(data_.end(), row.begin(), row.end());
  normalized_ = false;
}

std::span<const double> EmbeddingSet::row(std::size_t i) const {
  require(i < keys_.size(), ErrorKind::Lookup, "row index out of range");
  return std::span<const double>(data_).subspan(i * dim_, dim_);
}

std::optional<std::size_t> EmbeddingSet::find(const std::string& key) const {
  auto it = index_.find(key);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::span<const double> EmbeddingSet::at(const std::string& key) const {
  auto i = find(key);
  require(i.has_value(), ErrorKind::Lookup, "unknown key: " + key);
  return row(*i);
}

std::size_t EmbeddingSet::normalize() {
  std::size_t zero = 0;
  for (std::size_t r = 0; r < keys_.size(); ++r) {
    std::span<double> x(data_.data() + r * dim_, dim_);
    const double len = norm(x);
    if (len == 0.0) {
      ++zero;
      continue;
    }
    for (double& v : x) v /= len;
  }
  normalized_ = true;
  return zero;
}

std::string format_real(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

void EmbeddingSet::write(std::ostream& out) const {
  for (std::size_t r = 0; r < keys_.size(); ++r) {
    out << keys_[r] << '\t';
    for (std::size_t k = 0; k < dim_; ++k) {
      if (k) out << ' ';
      out << format_real(data_[r * dim_ + k]);
    }
    out << '\n';
  }
}

EmbeddingSet EmbeddingSet::read(std::istream& in) {
  EmbeddingSet set;
  std::string line;
  std::vector<double> row;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    require(tab != std::string::npos, ErrorKind::Decode,
            "vector line without tab: " + line.substr(0, 40));
    row.clear();
    std::istringstream values(line.substr(tab + 1));
    std::string tok;
    while (values >> tok) {
      char* end = nullptr;
      const double v = std::strtod(tok.c_str(), &end);
      require(end && *end == '\0', ErrorKind::Decode, "malformed number: " + tok);
      row.push_back(v);
    }
    try {
      set.add(line.substr(0, tab), row);
    } catch (const Error& e) {
      fail(ErrorKind::Decode, e.what());
    }
  }
  return set;
}

EmbeddingSet export_vectors(const VectorSpace& space, std::span<const TargetKey> keys) {
  EmbeddingSet set(space.dim());
  for (const auto& key : keys) {
    set.add(format_target(key, space.table().vocab()), space.vector(key));
  }
  return set;
}

}  // namespace addcomp
