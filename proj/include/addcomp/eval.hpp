#pragma once

// Phrase-similarity and word-analogy evaluation of embedding sets. Words are
// looked up under their formatted target keys: "W word", or "L w1" / "R w2"
// for Near-far constituents.

#include <array>
#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "addcomp/vectors.hpp"

namespace addcomp {

struct PhraseSimRow {
  std::string category;
  std::array<std::string, 4> words;  // phrase1 = (w1, w2), phrase2 = (w3, w4)
  double score = 0.0;                // human judgment in [1, 7]
};

struct PhraseSimDataset {
  std::vector<PhraseSimRow> rows;
};

// category<TAB>w1<TAB>w2<TAB>w3<TAB>w4<TAB>score; blank lines and '#' lines skipped.
PhraseSimDataset read_phrase_dataset(std::istream& in);
PhraseSimDataset read_phrase_dataset_file(const std::string& path);

enum class Composer { Additive, TensorProduct };

const char* composer_name(Composer c);
Composer parse_composer(std::string_view name);

std::string word_key(const std::string& word);
std::string left_key(const std::string& word, bool nearfar);
std::string right_key(const std::string& word, bool nearfar);

// nullopt when a constituent is missing from the set.
std::optional<double> model_similarity(const EmbeddingSet& set, const PhraseSimRow& row,
                                       Composer composer, bool nearfar);

struct CategoryResult {
  std::string category;
  double rho = 0.0;  // NaN with fewer than 3 usable rows
  double p_value = 1.0;
  std::size_t n_used = 0;
  std::size_t n_dropped = 0;
};

struct PhraseSimResult {
  std::vector<CategoryResult> categories;  // in first-seen order
  std::size_t n_used = 0;
  std::size_t n_dropped = 0;
};

// Throws Evaluation when no row is usable.
PhraseSimResult phrase_similarity_eval(const EmbeddingSet& set, const PhraseSimDataset& data,
                                       Composer composer, bool nearfar = false);

struct AnalogyRow {
  std::array<std::string, 4> words;  // a is to b as c is to d
};

struct AnalogyDataset {
  std::vector<AnalogyRow> rows;
};

// a<TAB>b<TAB>c<TAB>d (spaces also accepted); ':' section headers, '#' lines
// and blank lines skipped.
AnalogyDataset read_analogy_dataset(std::istream& in);
AnalogyDataset read_analogy_dataset_file(const std::string& path);

// Word-target candidates of a set, unit-normalized once for repeated queries.
class AnalogySolver {
 public:
  explicit AnalogySolver(const EmbeddingSet& set);

  bool contains(const std::string& word) const;
  // argmax cosine(v, v^b - v^a + v^c); ties go to the smaller key. Throws
  // Lookup for unknown words and Domain for a zero query.
  std::string solve(const std::string& a, const std::string& b, const std::string& c,
                    bool exclude_inputs = true) const;

 private:
  const EmbeddingSet& set_;
  std::vector<std::size_t> rows_;  // set rows holding non-zero word targets
  std::vector<std::string> words_;
  std::vector<double> unit_;       // rows_.size() x dim
};

std::string analogy_solve(const EmbeddingSet& set, const std::string& a, const std::string& b,
                          const std::string& c, bool exclude_inputs = true);

struct AnalogyResult {
  double accuracy = 0.0;
  std::size_t n_correct = 0;
  std::size_t n_used = 0;
  std::size_t n_dropped = 0;  // rows with an out-of-vocabulary word
};

// Throws Evaluation when no row is usable.
AnalogyResult analogy_eval(const EmbeddingSet& set, const AnalogyDataset& data);

struct PlantedLexicon {
  EmbeddingSet vectors;  // word "c<i>_a<j>" = concept i + aspect j
  AnalogyDataset tuples;  // every (c_i a_j, c_i a_k, c_l a_j, c_l a_k), i != l, j != k
};

PlantedLexicon planted_lexicon(std::size_t concepts, std::size_t aspects, std::size_t dim,
                               std::uint64_t seed);

}  // namespace addcomp
