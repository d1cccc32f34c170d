#include "addcomp/genmodel.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <thread>

#include "addcomp/error.hpp"
#include "addcomp/numeric.hpp"

namespace addcomp {

namespace {

std::uint64_t substream_seed(std::uint64_t seed, std::string_view label,
                             std::uint64_t index = 0) {
  return Rng(seed).split(label, index).next();
}

// Prefix sums over non-negative weights with sampling by descent.
class Fenwick {
 public:
  explicit Fenwick(std::size_t n) : tree_(n + 1, 0.0), weights_(n, 0.0) {
    step_ = 1;
    while (step_ * 2 <= n) step_ *= 2;
  }

  void set(std::size_t i, double w) {
    add(i, w - weights_[i]);
  }

  void add(std::size_t i, double delta) {
    weights_[i] += delta;
    total_ += delta;
    for (std::size_t k = i + 1; k < tree_.size(); k += k & (~k + 1)) {
      tree_[k] += delta;
    }
  }

  void rebuild() {
    std::fill(tree_.begin(), tree_.end(), 0.0);
    for (std::size_t i = 0; i < weights_.size(); ++i) {
      const std::size_t k = i + 1;
      tree_[k] += weights_[i];
      const std::size_t parent = k + (k & (~k + 1));
      if (parent < tree_.size()) tree_[parent] += tree_[k];
    }
    total_ = 0.0;
    for (std::size_t k = weights_.size(); k > 0; k -= k & (~k + 1)) total_ += tree_[k];
  }

  double total() const { return total_; }

  // Smallest index whose inclusive prefix sum exceeds r.
  std::size_t find(double r) const {
    std::size_t pos = 0;
    for (std::size_t step = step_; step > 0; step >>= 1) {
      const std::size_t next = pos + step;
      if (next < tree_.size() && tree_[next] <= r) {
        pos = next;
        r -= tree_[next];
      }
    }
    return std::min(pos, weights_.size() - 1);
  }

  double weight(std::size_t i) const { return weights_[i]; }

 private:
  std::vector<double> tree_;
  std::vector<double> weights_;
  double total_ = 0.0;
  std::size_t step_ = 1;
};

}  // namespace

void PYParams::validate() const {
  require(alpha > 0.0 && alpha < 1.0, ErrorKind::Parameter,
          "PY discount must lie in (0, 1)");
  require(theta > -alpha, ErrorKind::Parameter,
          "PY concentration must exceed -alpha");
}

void MHPYParams::validate() const {
  PYParams{alpha1, theta1}.validate();
  PYParams{alpha2, theta2}.validate();
}

// ---------------------------------------------------------------------------
// Chinese restaurant process

CrpSeater::CrpSeater(PYParams params) : params_(params) { params_.validate(); }

std::size_t CrpSeater::draw(Rng& rng) {
  const double c = static_cast<double>(total_);
  const double n = static_cast<double>(counts_.size());
  bool fresh = total_ == 0;
  if (!fresh) {
    fresh = rng.uniform() * (params_.theta + c) < params_.theta + params_.alpha * n;
  }
  std::size_t w;
  if (fresh) {
    w = counts_.size();
    counts_.push_back(1);
  } else {
    const double r = rng.uniform() * (c - params_.alpha * n);
    if (r < static_cast<double>(repeats_.size())) {
      w = repeats_[rng.below(repeats_.size())];
    } else {
      w = rng.below(counts_.size());
    }
    ++counts_[w];
    repeats_.push_back(static_cast<std::uint32_t>(w));
  }
  ++total_;
  return w;
}

CRPState sample_pitman_yor(PYParams params, std::uint64_t steps, std::uint64_t seed,
                           const PYSampleOptions& options) {
  params.validate();
  require(steps >= 1, ErrorKind::Parameter, "steps must be >= 1");
  require(options.checkpoints_per_decade >= 1, ErrorKind::Parameter,
          "checkpoints_per_decade must be >= 1");
  CrpSeater seater(params);
  Rng rng(seed);
  CRPState state;
  state.params = params;
  state.seed = seed;
  if (options.record_sequence) state.sequence.reserve(steps);

  const double factor = std::pow(10.0, 1.0 / options.checkpoints_per_decade);
  double next_checkpoint = 1.0;
  for (std::uint64_t step = 1; step <= steps; ++step) {
    const std::size_t w = seater.draw(rng);
    if (options.record_sequence) state.sequence.push_back(static_cast<std::uint32_t>(w));
    if (static_cast<double>(step) >= next_checkpoint || step == steps) {
      const double ratio =
          static_cast<double>(step) /
          std::pow(static_cast<double>(seater.distinct()), 1.0 / params.alpha);
      state.ratio_series.emplace_back(step, ratio);
      while (next_checkpoint <= static_cast<double>(step)) {
        next_checkpoint = std::ceil(next_checkpoint * factor);
      }
    }
  }
  state.counts = seater.counts();
  state.total = seater.total();
  return state;
}

// ---------------------------------------------------------------------------
// Modified hierarchical process

std::vector<double> MHPYState::conditional() const {
  std::vector<double> p(word_counts.size(), 0.0);
  if (total == 0) return p;
  for (std::size_t w = 0; w < p.size(); ++w) {
    p[w] = static_cast<double>(word_counts[w]) / static_cast<double>(total);
  }
  return p;
}

namespace {

double reference_factor(const MHPYParams& p, std::uint64_t nr) {
  const double n = static_cast<double>(nr);
  return (n - p.alpha2) / (p.theta1 + p.alpha1 * n);
}

// Contribution of one word to D.
double normalizer_term(const MHPYParams& p, std::uint64_t c, std::uint64_t nr) {
  if (nr == 0) return 0.0;
  return reference_factor(p, nr) * (static_cast<double>(c) + p.theta1);
}

// Weight of copying any existing reference of a word.
double copy_weight(const MHPYParams& p, std::uint64_t c, std::uint64_t nr) {
  if (nr == 0) return 0.0;
  return reference_factor(p, nr) *
         (static_cast<double>(c) - p.alpha1 * static_cast<double>(nr));
}

}  // namespace

double mhpy_normalizer(const MHPYState& state) {
  const auto& p = state.params;
  CompensatedSum sum;
  sum += p.theta2;
  sum += p.alpha2 * static_cast<double>(state.distinct_words);
  for (std::size_t w = 0; w < state.word_counts.size(); ++w) {
    sum += normalizer_term(p, state.word_counts[w], state.reference_counts[w]);
  }
  return static_cast<double>(sum.value());
}

double StepProbabilities::sum() const {
  CompensatedSum s;
  s += new_word;
  for (double x : existing_word) s += x;
  for (double x : copy_reference) s += x;
  return static_cast<double>(s.value());
}

StepProbabilities step_probabilities(const MHPYState& state) {
  require(state.total > 0, ErrorKind::Parameter,
          "step probabilities need at least one step");
  require(state.ref_counts.size() == state.total_references, ErrorKind::Parameter,
          "step probabilities need tracked references");
  const auto& p = state.params;
  const double d = mhpy_normalizer(state);
  StepProbabilities out;
  out.new_word = (p.theta2 + p.alpha2 * static_cast<double>(state.distinct_words)) / d;
  out.existing_word.assign(state.word_counts.size(), 0.0);
  for (std::size_t w = 0; w < state.word_counts.size(); ++w) {
    if (state.reference_counts[w] == 0) continue;
    out.existing_word[w] = (static_cast<double>(state.reference_counts[w]) - p.alpha2) / d;
  }
  out.copy_reference.resize(state.ref_counts.size());
  for (std::size_t r = 0; r < state.ref_counts.size(); ++r) {
    const std::uint32_t w = state.ref_word[r];
    out.copy_reference[r] = reference_factor(p, state.reference_counts[w]) *
                            (static_cast<double>(state.ref_counts[r]) - p.alpha1) / d;
  }
  return out;
}

MHPYState sample_mhpy(MHPYParams params, std::uint64_t steps, std::uint64_t seed,
                      const MHPYOptions& options) {
  params.validate();
  require(steps >= 1, ErrorKind::Parameter, "steps must be >= 1");
  require(options.recompute_every >= 1, ErrorKind::Parameter,
          "recompute_every must be >= 1");
  const bool with_base = !options.base.empty();

  MHPYState state;
  state.params = params;
  state.seed = seed;
  state.reference_seed = substream_seed(seed, "reference");
  Rng rng = Rng(seed).split("decision");
  Rng ref_rng(state.reference_seed);

  AliasTable base;
  CrpSeater seater(PYParams{params.alpha2, params.theta2});
  std::size_t capacity = 0;
  if (with_base) {
    base = AliasTable(options.base);
    capacity = base.size();
  } else {
    // Worst case every step opens a new word.
    capacity = static_cast<std::size_t>(std::min<std::uint64_t>(steps, 1u << 24));
  }
  state.word_counts.assign(with_base ? capacity : 0, 0);
  state.reference_counts.assign(with_base ? capacity : 0, 0);

  Fenwick weights(std::max<std::size_t>(capacity, 1));
  std::vector<std::vector<std::uint32_t>> refs_of(with_base ? capacity : 0);
  std::vector<std::vector<std::uint32_t>> repeats_of(with_base ? capacity : 0);

  const bool track = options.track_references;
  double d = params.theta2;

  auto update_word = [&](std::size_t w, std::uint64_t old_c, std::uint64_t old_nr) {
    d += normalizer_term(params, state.word_counts[w], state.reference_counts[w]) -
         normalizer_term(params, old_c, old_nr);
    if (w >= capacity) {
      fail(ErrorKind::Parameter, "MHPY word capacity exceeded");
    }
    weights.set(w, copy_weight(params, state.word_counts[w], state.reference_counts[w]));
  };

  for (std::uint64_t step = 1; step <= steps; ++step) {
    const bool new_reference =
        state.total == 0 ||
        rng.uniform() * d < params.theta2 + static_cast<double>(state.total_references);
    std::size_t w;
    if (new_reference) {
      if (with_base) {
        w = base.draw(ref_rng);
      } else {
        w = seater.draw(ref_rng);
        if (w == state.word_counts.size()) {
          state.word_counts.push_back(0);
          state.reference_counts.push_back(0);
          refs_of.emplace_back();
          repeats_of.emplace_back();
        }
      }
      const std::uint64_t old_c = state.word_counts[w];
      const std::uint64_t old_nr = state.reference_counts[w];
      if (old_nr == 0) {
        ++state.distinct_words;
        d += params.alpha2;
      }
      ++state.word_counts[w];
      ++state.reference_counts[w];
      ++state.total_references;
      if (track) {
        refs_of[w].push_back(static_cast<std::uint32_t>(state.ref_counts.size()));
        state.ref_counts.push_back(1);
        state.ref_word.push_back(static_cast<std::uint32_t>(w));
      }
      update_word(w, old_c, old_nr);
    } else {
      do {
        w = weights.find(rng.uniform() * weights.total());
      } while (state.reference_counts[w] == 0);
      if (track) {
        const double c = static_cast<double>(state.word_counts[w]);
        const double nr = static_cast<double>(state.reference_counts[w]);
        const auto& reps = repeats_of[w];
        std::uint32_t r;
        if (rng.uniform() * (c - params.alpha1 * nr) < static_cast<double>(reps.size())) {
          r = reps[rng.below(reps.size())];
        } else {
          r = refs_of[w][rng.below(refs_of[w].size())];
        }
        ++state.ref_counts[r];
        repeats_of[w].push_back(r);
      }
      // Only C(w) moves, so D and the copy weight both grow by g(w).
      const double g = reference_factor(params, state.reference_counts[w]);
      ++state.word_counts[w];
      d += g;
      weights.add(w, g);
    }
    ++state.total;

    if (step % options.recompute_every == 0) {
      d = mhpy_normalizer(state);
      weights.rebuild();
    }
  }
  state.D = d;
  return state;
}

// ---------------------------------------------------------------------------
// Alias table

AliasTable::AliasTable(std::span<const double> weights) {
  const std::size_t n = weights.size();
  require(n > 0, ErrorKind::Parameter, "alias table needs weights");
  require(n < (std::size_t{1} << 32), ErrorKind::Parameter, "alias table too large");
  CompensatedSum total;
  for (double w : weights) {
    require(std::isfinite(w) && w >= 0.0, ErrorKind::Parameter,
            "alias weights must be finite and non-negative");
    total += w;
  }
  const double sum = static_cast<double>(total.value());
  require(sum > 0.0, ErrorKind::Parameter, "alias weights sum to zero");

  prob_.assign(n, 0.0);
  alias_.assign(n, 0);
  std::vector<double> scaled(n);
  std::vector<std::uint32_t> small, large;
  for (std::size_t i = 0; i < n; ++i) {
    scaled[i] = weights[i] * static_cast<double>(n) / sum;
    (scaled[i] < 1.0 ? small : large).push_back(static_cast<std::uint32_t>(i));
  }
  while (!small.empty() && !large.empty()) {
    const std::uint32_t s = small.back();
    small.pop_back();
    const std::uint32_t l = large.back();
    prob_[s] = scaled[s];
    alias_[s] = l;
    scaled[l] = (scaled[l] + scaled[s]) - 1.0;
    if (scaled[l] < 1.0) {
      large.pop_back();
      small.push_back(l);
    }
  }
  for (std::uint32_t i : large) prob_[i] = 1.0, alias_[i] = i;
  for (std::uint32_t i : small) prob_[i] = 1.0, alias_[i] = i;
}

std::size_t AliasTable::draw(Rng& rng) const {
  const std::size_t i = rng.below(prob_.size());
  return rng.uniform() < prob_[i] ? i : alias_[i];
}

// ---------------------------------------------------------------------------
// Zipf diagnostic

DiagnosticSeries zipf_diagnostic(std::span<const std::uint64_t> counts,
                                 std::size_t band_lo, std::size_t band_hi) {
  std::vector<std::uint64_t> ranked;
  for (auto c : counts) {
    if (c > 0) ranked.push_back(c);
  }
  require(ranked.size() >= 10, ErrorKind::Statistics,
          "zipf diagnostic needs at least 10 observed words");
  std::sort(ranked.begin(), ranked.end(), std::greater<>());
  CompensatedSum total_sum;
  for (auto c : ranked) total_sum += static_cast<long double>(c);
  const double total = static_cast<double>(total_sum.value());
  const double n = static_cast<double>(ranked.size());
  const double ln_n = std::log(n);

  DiagnosticSeries out;
  out.points.reserve(ranked.size());
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    const double rank = static_cast<double>(i + 1);
    out.points.emplace_back(rank, static_cast<double>(ranked[i]) / total * rank * ln_n);
  }

  out.band_lo = std::max<std::size_t>(1, band_lo);
  out.band_hi = std::min(band_hi, ranked.size());
  require(out.band_hi > out.band_lo, ErrorKind::Statistics,
          "regression band holds fewer than two ranks");
  CompensatedSum sx, sy;
  const double m = static_cast<double>(out.band_hi - out.band_lo + 1);
  for (std::size_t r = out.band_lo; r <= out.band_hi; ++r) {
    sx += std::log(static_cast<double>(r));
    sy += std::log(static_cast<double>(ranked[r - 1]) / total);
  }
  const double mx = static_cast<double>(sx.value()) / m;
  const double my = static_cast<double>(sy.value()) / m;
  CompensatedSum sxy, sxx;
  for (std::size_t r = out.band_lo; r <= out.band_hi; ++r) {
    const double dx = std::log(static_cast<double>(r)) - mx;
    const double dy = std::log(static_cast<double>(ranked[r - 1]) / total) - my;
    sxy += dx * dy;
    sxx += dx * dx;
  }
  out.slope = static_cast<double>(sxy.value() / sxx.value());
  out.zipfian = out.slope >= -1.5 && out.slope <= -0.5;
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic co-occurrence tables

void SynthConfig::validate() const {
  target_process.validate();
  context_process.validate();
  require(n_targets >= 2, ErrorKind::Parameter, "n_targets must be >= 2");
  require(n_contexts >= n_targets, ErrorKind::Parameter,
          "n_contexts must be at least n_targets");
  require(tokens_per_target >= 1, ErrorKind::Parameter,
          "tokens_per_target must be >= 1");
  require(phrase_fraction >= 0.0 && phrase_fraction <= 1.0, ErrorKind::Parameter,
          "phrase_fraction must lie in [0, 1]");
  require(max_pi >= 0.0 && max_pi < 1.0, ErrorKind::Parameter,
          "max_pi must lie in [0, 1)");
  if (fixed_pi) {
    require(*fixed_pi >= 0.0 && *fixed_pi < 1.0, ErrorKind::Parameter,
            "fixed_pi must lie in [0, 1)");
  }
}

namespace {

std::vector<std::uint64_t> mhpy_counts(const MHPYParams& params, std::uint64_t steps,
                                       std::uint64_t seed, std::span<const double> base) {
  if (steps == 0) return std::vector<std::uint64_t>(base.size(), 0);
  MHPYOptions options;
  options.base = base;
  options.track_references = false;
  return sample_mhpy(params, steps, seed, options).word_counts;
}

SparseCounts sparse(const std::vector<std::uint64_t>& dense) {
  std::uint64_t total = 0;
  for (auto c : dense) total += c;
  // One context token per occurrence.
  return make_counts(dense, total);
}

}  // namespace

SynthResult synth_cooc(const SynthConfig& config, std::uint64_t seed) {
  config.validate();
  const CRPState contexts =
      sample_pitman_yor(config.context_process, config.context_steps,
                        substream_seed(seed, "context"));
  require(contexts.distinct() >= config.n_contexts, ErrorKind::Parameter,
          "context_steps too small to produce n_contexts distinct words");

  std::vector<std::uint64_t> ranked = contexts.counts;
  std::sort(ranked.begin(), ranked.end(), std::greater<>());
  ranked.resize(config.n_contexts);
  std::vector<std::string> tokens(config.n_contexts);
  for (std::size_t i = 0; i < tokens.size(); ++i) tokens[i] = "w" + std::to_string(i);
  auto vocab = std::make_shared<const Vocabulary>(std::move(tokens), ranked);
  std::vector<double> base(ranked.begin(), ranked.end());

  const MHPYParams params{config.target_process.alpha, config.target_process.theta,
                          config.context_process.alpha, config.context_process.theta};
  SynthResult out{vocab, CoocTable(vocab, ContextConfig{}), {}};
  const std::uint64_t tpt = config.tokens_per_target;
  const auto n_phrases = static_cast<std::size_t>(
      std::floor(config.phrase_fraction * static_cast<double>(config.n_targets) / 2.0));

  auto plant = [&](std::size_t k, const char* side) {
    if (config.fixed_pi) return *config.fixed_pi;
    return Rng(seed).split(side, k).uniform() * config.max_pi;
  };
  auto extra_tokens = [&](double pi) {
    return static_cast<std::uint64_t>(
        std::llround(static_cast<double>(tpt) * pi / (1.0 - pi)));
  };

  struct Drawn {
    SparseCounts phrase, word_s, word_t, extra_s, extra_t;
  };
  // Every run has its own seed, so runs can go in parallel and the table is
  // assembled in target order afterwards.
  std::vector<PlantedPhrase> planted(n_phrases);
  std::vector<Drawn> drawn(n_phrases);
  std::vector<SparseCounts> singles(config.n_targets - 2 * n_phrases);
  const std::size_t jobs = n_phrases + singles.size();
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t j = next++; j < jobs; j = next++) {
      if (j >= n_phrases) {
        const std::size_t w = 2 * n_phrases + (j - n_phrases);
        singles[j - n_phrases] =
            sparse(mhpy_counts(params, tpt, substream_seed(seed, "word", w), base));
        continue;
      }
      const std::size_t k = j;
      PlantedPhrase& ph = planted[k];
      ph.s = static_cast<WordId>(2 * k);
      ph.t = static_cast<WordId>(2 * k + 1);
      ph.pi_s = plant(k, "pi-s");
      ph.pi_t = plant(k, "pi-t");
      const auto phrase = mhpy_counts(params, tpt, substream_seed(seed, "phrase", k), base);
      const auto extra_s = mhpy_counts(params, extra_tokens(ph.pi_s),
                                       substream_seed(seed, "extra-s", k), base);
      const auto extra_t = mhpy_counts(params, extra_tokens(ph.pi_t),
                                       substream_seed(seed, "extra-t", k), base);
      std::vector<std::uint64_t> word_s(phrase), word_t(phrase);
      for (std::size_t i = 0; i < phrase.size(); ++i) {
        word_s[i] += extra_s[i];
        word_t[i] += extra_t[i];
      }
      drawn[k] = {sparse(phrase), sparse(word_s), sparse(word_t), sparse(extra_s),
                  sparse(extra_t)};
    }
  };
  const std::size_t n_threads =
      std::clamp<std::size_t>(config.threads ? config.threads : std::thread::hardware_concurrency(),
                              1, std::max<std::size_t>(jobs, 1));
  std::vector<std::thread> pool;
  for (std::size_t i = 1; i < n_threads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  for (std::size_t k = 0; k < n_phrases; ++k) {
    const PlantedPhrase& ph = planted[k];
    Drawn& d = drawn[k];
    out.table.insert(TargetKey::unordered(ph.s, ph.t), d.phrase);
    out.table.insert(TargetKey::ordered(ph.s, ph.t), d.phrase);
    out.table.insert(TargetKey::unigram(ph.s), std::move(d.word_s));
    out.table.insert(TargetKey::unigram(ph.t), std::move(d.word_t));
    out.table.insert(TargetKey::adjacent(ph.s, ph.t), d.phrase);
    out.table.insert(TargetKey::exclusion(ph.s, ph.t), std::move(d.extra_t));
    out.table.insert(TargetKey::adjacent(ph.t, ph.s), d.phrase);
    out.table.insert(TargetKey::exclusion(ph.t, ph.s), std::move(d.extra_s));
    out.phrases.push_back(ph);
  }
  for (std::size_t j = 0; j < singles.size(); ++j) {
    out.table.insert(TargetKey::unigram(static_cast<WordId>(2 * n_phrases + j)),
                     std::move(singles[j]));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Planted token corpus

void PlantedCorpusConfig::validate() const {
  require(n_pairs >= 1, ErrorKind::Parameter, "n_pairs must be >= 1");
  require(n_fillers >= 1 && topic_size >= 1 && topic_size <= n_fillers,
          ErrorKind::Parameter, "topic_size must lie in [1, n_fillers]");
  require(forward_count >= 1, ErrorKind::Parameter, "forward_count must be >= 1");
  require(filler_per_side >= 0, ErrorKind::Parameter,
          "filler_per_side must be >= 0");
  require(topic_share >= 0.0 && topic_share <= 1.0, ErrorKind::Parameter,
          "topic_share must lie in [0, 1]");
}

PlantedCorpus emit_planted_corpus(const PlantedCorpusConfig& config,
                                  std::uint64_t seed) {
  config.validate();
  std::vector<double> zipf(config.n_fillers);
  for (std::size_t i = 0; i < zipf.size(); ++i) zipf[i] = 1.0 / static_cast<double>(i + 1);
  const AliasTable base(zipf);

  PlantedCorpus out;
  auto filler = [&](Rng& rng, const std::vector<std::size_t>& topic) {
    const std::size_t i = rng.uniform() < config.topic_share
                              ? topic[rng.below(topic.size())]
                              : base.draw(rng);
    return "f" + std::to_string(i);
  };
  auto sentence = [&](Rng& rng, const std::vector<std::size_t>& topic,
                      std::initializer_list<std::string> middle) {
    Sentence s;
    for (int k = 0; k < config.filler_per_side; ++k) s.push_back(filler(rng, topic));
    for (const auto& w : middle) s.push_back(w);
    for (int k = 0; k < config.filler_per_side; ++k) s.push_back(filler(rng, topic));
    out.sentences.push_back(std::move(s));
  };

  for (std::size_t k = 0; k < config.n_pairs; ++k) {
    const std::string s = "s" + std::to_string(k);
    const std::string t = "t" + std::to_string(k);
    out.pairs.emplace_back(s, t);
    Rng rng = Rng(seed).split("pair", k);
    std::vector<std::size_t> forward(config.topic_size), reverse(config.topic_size);
    for (auto& i : forward) i = rng.below(config.n_fillers);
    for (auto& i : reverse) i = rng.below(config.n_fillers);
    for (std::uint64_t r = 0; r < config.forward_count; ++r) sentence(rng, forward, {s, t});
    for (std::uint64_t r = 0; r < config.reverse_count; ++r) sentence(rng, reverse, {t, s});
    for (std::uint64_t r = 0; r < config.solo_count; ++r) {
      sentence(rng, forward, {s});
      sentence(rng, forward, {t});
    }
  }
  return out;
}

}  // namespace addcomp
