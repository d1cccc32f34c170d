#include "addcomp/composition.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "addcomp/error.hpp"
#include "addcomp/numeric.hpp"

namespace addcomp {

VectorLookup natural_lookup(const VectorSpace& space) {
  return [&space](const TargetKey& key) { return space.vector(key); };
}

VectorLookup embedding_lookup(const EmbeddingSet& set, const Vocabulary& vocab) {
  return [&set, &vocab](const TargetKey& key) {
    auto row = set.at(format_target(key, vocab));
    return std::vector<double>(row.begin(), row.end());
  };
}

std::pair<TargetKey, TargetKey> constituent_keys(WordId s, WordId t, bool nearfar) {
  if (nearfar) return {TargetKey::nearfar_left(s), TargetKey::nearfar_right(t)};
  return {TargetKey::unigram(s), TargetKey::unigram(t)};
}

TargetKey phrase_key(WordId s, WordId t, bool nearfar) {
  return nearfar ? TargetKey::ordered(s, t) : TargetKey::unordered(s, t);
}

std::vector<double> compose_additive(const VectorLookup& lookup, WordId s, WordId t,
                                     bool nearfar) {
  const auto [ks, kt] = constituent_keys(s, t, nearfar);
  return midpoint(lookup(ks), lookup(kt));
}

std::vector<double> compose_additive(const VectorSpace& space, WordId s, WordId t) {
  return compose_additive(natural_lookup(space), s, t, space.table().config().nearfar);
}

namespace {

double ratio_complement(std::uint64_t part, std::uint64_t whole) {
  require(whole > 0, ErrorKind::Domain, "collocation ratio with a zero count");
  const double pi = 1.0 - static_cast<double>(part) / static_cast<double>(whole);
  return std::clamp(pi, 0.0, 1.0);
}

}  // namespace

std::pair<double, double> collocation_pi(const CoocTable& cooc, WordId s, WordId t) {
  if (cooc.config().nearfar) {
    const auto phrase = cooc.counts(TargetKey::ordered(s, t)).occurrences;
    return {ratio_complement(phrase, cooc.counts(TargetKey::nearfar_left(s)).occurrences),
            ratio_complement(phrase, cooc.counts(TargetKey::nearfar_right(t)).occurrences)};
  }
  const auto phrase = cooc.counts(TargetKey::unordered(s, t)).occurrences;
  return {ratio_complement(phrase, cooc.counts(TargetKey::unigram(t)).occurrences),
          ratio_complement(phrase, cooc.counts(TargetKey::unigram(s)).occurrences)};
}

double bias(const VectorLookup& lookup, WordId s, WordId t, bool nearfar) {
  return distance(lookup(phrase_key(s, t, nearfar)),
                  compose_additive(lookup, s, t, nearfar));
}

double bias(const VectorSpace& space, WordId s, WordId t) {
  return bias(natural_lookup(space), s, t, space.table().config().nearfar);
}

double bias_bound(double pi1, double pi2) {
  require(pi1 >= 0.0 && pi1 <= 1.0 && pi2 >= 0.0 && pi2 <= 1.0, ErrorKind::Domain,
          "collocation probabilities must lie in [0, 1]");
  return std::sqrt(0.5 * (pi1 * pi1 + pi2 * pi2 + pi1 * pi2));
}

BiasReport bias_report(const VectorLookup& lookup, const CoocTable& cooc,
                       const std::vector<TargetKey>& phrases, double epsilon) {
  require(!phrases.empty(), ErrorKind::Evaluation, "no phrases");
  require(epsilon >= 0.0 && std::isfinite(epsilon), ErrorKind::Parameter,
          "epsilon must be a non-negative number");
  const bool nearfar = cooc.config().nearfar;
  const TargetKind kind = nearfar ? TargetKind::OrderedBigram : TargetKind::UnorderedBigram;
  BiasReport report;
  report.nearfar = nearfar;
  report.epsilon = epsilon;
  CompensatedSum total, total_reversed;
  std::size_t violations = 0, reversed = 0;
  for (const auto& key : phrases) {
    require(key.kind == kind, ErrorKind::Parameter,
            std::string("bias reports take ") + target_tag(kind) + " phrase keys");
    const WordId s = key.first, t = key.second;
    BiasRecord rec;
    rec.phrase = key;
    std::tie(rec.pi1, rec.pi2) = collocation_pi(cooc, s, t);
    rec.bound = bias_bound(rec.pi1, rec.pi2);
    const auto composed = compose_additive(lookup, s, t, nearfar);
    rec.bias = distance(lookup(key), composed);
    if (nearfar && cooc.contains(TargetKey::ordered(t, s))) {
      rec.bias_reversed = distance(lookup(TargetKey::ordered(t, s)), composed);
      total_reversed += *rec.bias_reversed;
      ++reversed;
    }
    total += rec.bias;
    if (rec.bias > rec.bound + epsilon) ++violations;
    report.records.push_back(rec);
  }
  const auto count = static_cast<long double>(report.records.size());
  report.violation_fraction = static_cast<double>(violations / count);
  report.mean_bias = static_cast<double>(total.value() / count);
  if (reversed > 0) {
    report.mean_bias_reversed =
        static_cast<double>(total_reversed.value() / static_cast<long double>(reversed));
  }
  return report;
}

BiasReport bias_report(const VectorSpace& space, const std::vector<TargetKey>& phrases,
                       double epsilon) {
  return bias_report(natural_lookup(space), space.table(), phrases, epsilon);
}

void write_scatter(std::ostream& out, const BiasReport& report, const Vocabulary& vocab) {
  for (const auto& rec : report.records) {
    const std::string name = vocab.token(rec.phrase.first) + "_" + vocab.token(rec.phrase.second);
    out << name << '\t' << format_real(rec.pi1) << '\t' << format_real(rec.pi2) << '\t'
        << format_real(rec.bound) << '\t' << format_real(rec.bias);
    if (report.nearfar) {
      out << '\t' << (rec.bias_reversed ? format_real(*rec.bias_reversed) : "nan");
    }
    out << '\n';
  }
}

std::vector<Neighbor> nearest_neighbors(const EmbeddingSet& set,
                                        std::span<const double> query, std::size_t k,
                                        std::size_t* skipped) {
  require(k >= 1, ErrorKind::Parameter, "k must be >= 1");
  require(query.size() == set.dim(), ErrorKind::Parameter,
          "query dimension does not match the vectors");
  const double qn = norm(query);
  require(qn > 0.0, ErrorKind::Domain, "zero-norm query vector");
  std::vector<Neighbor> all;
  std::size_t zero = 0;
  for (std::size_t r = 0; r < set.size(); ++r) {
    const auto row = set.row(r);
    const double rn = norm(row);
    if (rn == 0.0) {
      ++zero;
      continue;
    }
    all.push_back({set.key(r), dot(row, query) / (rn * qn)});
  }
  if (skipped) *skipped = zero;
  const std::size_t keep = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep), all.end(),
                    [](const Neighbor& a, const Neighbor& b) {
                      if (a.cosine != b.cosine) return a.cosine > b.cosine;
                      return a.key < b.key;
                    });
  all.resize(keep);
  return all;
}

}  // namespace addcomp
