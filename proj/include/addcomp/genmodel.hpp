#pragma once

// Pitman-Yor style samplers for Zipfian word and context distributions, and
// synthetic co-occurrence tables assembled from them.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "addcomp/corpus.hpp"
#include "addcomp/rng.hpp"

namespace addcomp {

struct PYParams {
  double alpha = 0.95;  // discount, in (0, 1)
  double theta = 1.0;   // concentration, > -alpha

  void validate() const;
};

// Sequential seating of a Chinese restaurant process. Each draw costs O(1):
// an existing word is picked with weight (C(w) - 1) + (1 - alpha), which is
// sampled as a mixture of "one of the repeat tokens" and "one of the words".
class CrpSeater {
 public:
  explicit CrpSeater(PYParams params);

  // Returns the index of the drawn word; equal to distinct() - 1 when new.
  std::size_t draw(Rng& rng);

  const std::vector<std::uint64_t>& counts() const { return counts_; }
  std::uint64_t total() const { return total_; }
  std::size_t distinct() const { return counts_.size(); }

 private:
  PYParams params_;
  std::vector<std::uint64_t> counts_;
  std::vector<std::uint32_t> repeats_;  // one entry per token beyond the first
  std::uint64_t total_ = 0;
};

struct CRPState {
  PYParams params;
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> counts;  // C(w) in order of creation
  std::uint64_t total = 0;
  std::vector<std::uint32_t> sequence;  // word per step, when recorded
  // (step, C / N^{1/alpha}) at roughly log-spaced checkpoints.
  std::vector<std::pair<std::uint64_t, double>> ratio_series;

  std::size_t distinct() const { return counts.size(); }
};

struct PYSampleOptions {
  bool record_sequence = false;
  int checkpoints_per_decade = 10;
};

CRPState sample_pitman_yor(PYParams params, std::uint64_t steps, std::uint64_t seed,
                           const PYSampleOptions& options = {});

struct MHPYParams {
  double alpha1 = 0.95, theta1 = 1.0;  // per-word reference copying
  double alpha2 = 0.95, theta2 = 1.0;  // distinct references

  void validate() const;
};

struct MHPYState {
  MHPYParams params;
  std::uint64_t seed = 0;
  // Seed of the stream that places new references on words. Running
  // sample_pitman_yor({alpha2, theta2}, total_references(), reference_seed)
  // reproduces reference_counts in original mode.
  std::uint64_t reference_seed = 0;
  std::vector<std::uint64_t> word_counts;       // C(w)
  std::vector<std::uint64_t> reference_counts;  // N_r(w)
  std::vector<std::uint64_t> ref_counts;        // C(r), per reference
  std::vector<std::uint32_t> ref_word;          // word of each reference
  std::uint64_t total = 0;                      // C
  std::uint64_t total_references = 0;           // N_r
  std::size_t distinct_words = 0;               // N_w (words with C >= 1)
  double D = 0.0;

  // p^Y(w) = C(w) / C over all word slots.
  std::vector<double> conditional() const;
};

// D recomputed from scratch with compensated summation.
double mhpy_normalizer(const MHPYState& state);

struct StepProbabilities {
  double new_word = 0.0;                 // open a new word
  std::vector<double> existing_word;     // new reference to an existing word, per slot
  std::vector<double> copy_reference;    // repeat an existing reference

  double sum() const;
};

StepProbabilities step_probabilities(const MHPYState& state);

struct MHPYOptions {
  // When non-empty, words are the indices of this distribution and every new
  // reference is placed on a word drawn i.i.d. from it instead of through the
  // PY(alpha2, theta2) seating. Weights need not be normalized.
  std::span<const double> base;
  // Full recomputation period of D, in steps.
  std::uint64_t recompute_every = std::uint64_t{1} << 16;
  bool track_references = true;
};

MHPYState sample_mhpy(MHPYParams params, std::uint64_t steps, std::uint64_t seed,
                      const MHPYOptions& options = {});

// Walker alias table for O(1) draws from a fixed discrete distribution.
class AliasTable {
 public:
  AliasTable() = default;
  explicit AliasTable(std::span<const double> weights);

  std::size_t draw(Rng& rng) const;
  std::size_t size() const { return prob_.size(); }

 private:
  std::vector<double> prob_;
  std::vector<std::uint32_t> alias_;
};

struct DiagnosticSeries {
  std::vector<std::pair<double, double>> points;  // (rank, p_i * i * ln n)
  double slope = 0.0;      // least-squares slope of ln p_i on ln i over the band
  std::size_t band_lo = 0, band_hi = 0;  // 1-based ranks, inclusive
  bool zipfian = false;    // slope within [-1.5, -0.5]
};

// `counts` in any order; they are ranked internally. The regression band is
// clipped to [1, n].
DiagnosticSeries zipf_diagnostic(std::span<const std::uint64_t> counts,
                                 std::size_t band_lo = 10,
                                 std::size_t band_hi = 1000);

struct SynthConfig {
  PYParams target_process{0.95, 1.0};   // alpha1, theta1 of each target's run
  PYParams context_process{0.95, 1.0};  // shared base distribution
  std::size_t n_contexts = 5000;        // context lexicon size
  std::uint64_t context_steps = 2000000;
  std::size_t n_targets = 4000;
  std::uint64_t tokens_per_target = 20000;
  double phrase_fraction = 1.0;  // fraction of word targets paired into phrases
  double max_pi = 0.8;           // planted pi ~ U[0, max_pi]
  std::optional<double> fixed_pi;  // plant this pi for every word instead
  std::size_t threads = 0;         // 0: one per hardware thread; output is the same

  void validate() const;
};

struct PlantedPhrase {
  WordId s = 0, t = 0;
  double pi_s = 0.0, pi_t = 0.0;  // planted non-adjacency probabilities
};

struct SynthResult {
  std::shared_ptr<const Vocabulary> vocab;
  CoocTable table;
  std::vector<PlantedPhrase> phrases;
};

// Word targets are the first n_targets lexicon entries; words 2k and 2k+1
// form phrase k. A phrase's counts P come from one MHPY run over the shared
// base; each constituent t receives P plus an independent run E_t sized so
// that C(E_t) / C(t) is the planted pi. Exclusion and adjacency targets are
// emitted so the partition identity holds exactly.
SynthResult synth_cooc(const SynthConfig& config, std::uint64_t seed);

struct PlantedCorpusConfig {
  std::size_t n_pairs = 40;
  std::size_t n_fillers = 400;
  std::uint64_t forward_count = 40;  // sentences with "s t"
  std::uint64_t reverse_count = 10;  // sentences with "t s"
  std::uint64_t solo_count = 10;     // sentences with s or t alone, each
  int filler_per_side = 5;
  double topic_share = 0.6;  // fraction of filler drawn from the sentence topic
  std::size_t topic_size = 12;

  void validate() const;
};

struct PlantedCorpus {
  TokenizedCorpus sentences;
  std::vector<std::pair<std::string, std::string>> pairs;  // (s, t)
};

// Token-level corpus with asymmetric word order: every pair occurs mostly as
// "s t" and occasionally as "t s", each order with its own topical filler.
PlantedCorpus emit_planted_corpus(const PlantedCorpusConfig& config,
                                  std::uint64_t seed);

}  // namespace addcomp
