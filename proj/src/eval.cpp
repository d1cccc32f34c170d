#include "addcomp/eval.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_map>

#include "addcomp/error.hpp"
#include "addcomp/numeric.hpp"
#include "addcomp/rng.hpp"
#include "addcomp/stats.hpp"

namespace addcomp {

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find('\t', start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

bool skip_line(const std::string& line) {
  return line.empty() || line.front() == '#' ||
         line.find_first_not_of(" \t\r") == std::string::npos;
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

std::ifstream open_file(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::Io, "cannot open " + path);
  return in;
}

std::span<const double> lookup(const EmbeddingSet& set, const std::string& key) {
  const auto i = set.find(key);
  if (!i) return {};
  return set.row(*i);
}

}  // namespace

PhraseSimDataset read_phrase_dataset(std::istream& in) {
  PhraseSimDataset out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(std::move(line));
    if (skip_line(line)) continue;
    const auto f = split_tabs(line);
    const std::string where = "phrase dataset line " + std::to_string(lineno);
    require(f.size() == 6, ErrorKind::Decode, where + ": expected 6 tab-separated fields");
    PhraseSimRow row;
    row.category = f[0];
    require(!row.category.empty(), ErrorKind::Decode, where + ": empty category");
    for (std::size_t i = 0; i < 4; ++i) {
      require(!f[i + 1].empty(), ErrorKind::Decode, where + ": empty word");
      row.words[i] = f[i + 1];
    }
    std::size_t used = 0;
    try {
      row.score = std::stod(f[5], &used);
    } catch (const std::exception&) {
      used = 0;
    }
    require(used == f[5].size() && used > 0, ErrorKind::Decode, where + ": bad score");
    require(row.score >= 1.0 && row.score <= 7.0, ErrorKind::Decode,
            where + ": score outside [1, 7]");
    out.rows.push_back(std::move(row));
  }
  return out;
}

PhraseSimDataset read_phrase_dataset_file(const std::string& path) {
  auto in = open_file(path);
  return read_phrase_dataset(in);
}

const char* composer_name(Composer c) {
  return c == Composer::Additive ? "additive" : "tensor-product";
}

Composer parse_composer(std::string_view name) {
  if (name == "additive") return Composer::Additive;
  if (name == "tensor-product") return Composer::TensorProduct;
  fail(ErrorKind::Config, "unknown composer: " + std::string(name));
}

std::string word_key(const std::string& word) { return "W " + word; }
std::string left_key(const std::string& word, bool nearfar) {
  return nearfar ? "L " + word : word_key(word);
}
std::string right_key(const std::string& word, bool nearfar) {
  return nearfar ? "R " + word : word_key(word);
}

std::optional<double> model_similarity(const EmbeddingSet& set, const PhraseSimRow& row,
                                       Composer composer, bool nearfar) {
  const auto& w = row.words;
  const auto v1 = lookup(set, left_key(w[0], nearfar));
  const auto v2 = lookup(set, right_key(w[1], nearfar));
  const auto v3 = lookup(set, left_key(w[2], nearfar));
  const auto v4 = lookup(set, right_key(w[3], nearfar));
  if (v1.empty() || v2.empty() || v3.empty() || v4.empty()) return std::nullopt;
  if (composer == Composer::TensorProduct) return cosine(v1, v3) * cosine(v2, v4);
  return cosine(midpoint(v1, v2), midpoint(v3, v4));
}

PhraseSimResult phrase_similarity_eval(const EmbeddingSet& set, const PhraseSimDataset& data,
                                       Composer composer, bool nearfar) {
  struct Series {
    std::vector<double> model, human;
    std::size_t dropped = 0;
  };
  std::vector<std::string> order;
  std::unordered_map<std::string, Series> by_cat;
  PhraseSimResult out;
  for (const auto& row : data.rows) {
    auto [it, fresh] = by_cat.try_emplace(row.category);
    if (fresh) order.push_back(row.category);
    const auto sim = model_similarity(set, row, composer, nearfar);
    if (!sim) {
      ++it->second.dropped;
      ++out.n_dropped;
      continue;
    }
    it->second.model.push_back(*sim);
    it->second.human.push_back(row.score);
    ++out.n_used;
  }
  require(out.n_used > 0, ErrorKind::Evaluation, "no usable phrase-similarity rows");
  for (const auto& cat : order) {
    const auto& s = by_cat.at(cat);
    CategoryResult r;
    r.category = cat;
    r.n_used = s.model.size();
    r.n_dropped = s.dropped;
    if (r.n_used < 3) {
      r.rho = std::numeric_limits<double>::quiet_NaN();
      r.p_value = std::numeric_limits<double>::quiet_NaN();
    } else {
      const auto c = spearman_rho(s.model, s.human);
      r.rho = c.rho;
      r.p_value = c.p_value;
    }
    out.categories.push_back(std::move(r));
  }
  return out;
}

AnalogyDataset read_analogy_dataset(std::istream& in) {
  AnalogyDataset out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(std::move(line));
    if (skip_line(line) || line.front() == ':') continue;
    std::istringstream fields(line);
    std::vector<std::string> words;
    for (std::string w; fields >> w;) words.push_back(w);
    require(words.size() == 4, ErrorKind::Decode,
            "analogy dataset line " + std::to_string(lineno) + ": expected 4 words");
    out.rows.push_back({{words[0], words[1], words[2], words[3]}});
  }
  return out;
}

AnalogyDataset read_analogy_dataset_file(const std::string& path) {
  auto in = open_file(path);
  return read_analogy_dataset(in);
}

AnalogySolver::AnalogySolver(const EmbeddingSet& set) : set_(set) {
  const std::size_t d = set.dim();
  for (std::size_t r = 0; r < set.size(); ++r) {
    const auto& key = set.key(r);
    if (key.size() < 3 || key[0] != 'W' || key[1] != ' ') continue;
    const auto row = set.row(r);
    const double n = norm(row);
    if (n == 0.0) continue;  // no direction, never a candidate
    rows_.push_back(r);
    words_.push_back(key.substr(2));
    for (std::size_t j = 0; j < d; ++j) unit_.push_back(row[j] / n);
  }
}

bool AnalogySolver::contains(const std::string& word) const {
  return set_.find(word_key(word)).has_value();
}

std::string AnalogySolver::solve(const std::string& a, const std::string& b, const std::string& c,
                                 bool exclude_inputs) const {
  const auto va = set_.at(word_key(a)), vb = set_.at(word_key(b)), vc = set_.at(word_key(c));
  const std::size_t d = set_.dim();
  std::vector<double> q(d);
  for (std::size_t j = 0; j < d; ++j) q[j] = vb[j] - va[j] + vc[j];
  require(norm(q) > 0.0, ErrorKind::Domain, "zero analogy query vector");
  std::size_t best = rows_.size();
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    const auto& w = words_[i];
    if (exclude_inputs && (w == a || w == b || w == c)) continue;
    // Cosine up to the common factor 1/|q|.
    const double s = dot(std::span<const double>(unit_.data() + i * d, d), q);
    if (s > best_score || (s == best_score && best < rows_.size() && w < words_[best])) {
      best = i;
      best_score = s;
    }
  }
  require(best < rows_.size(), ErrorKind::Evaluation, "no analogy candidates left");
  return words_[best];
}

std::string analogy_solve(const EmbeddingSet& set, const std::string& a, const std::string& b,
                          const std::string& c, bool exclude_inputs) {
  return AnalogySolver(set).solve(a, b, c, exclude_inputs);
}

AnalogyResult analogy_eval(const EmbeddingSet& set, const AnalogyDataset& data) {
  const AnalogySolver solver(set);
  AnalogyResult out;
  for (const auto& row : data.rows) {
    const auto& w = row.words;
    if (!solver.contains(w[0]) || !solver.contains(w[1]) || !solver.contains(w[2]) ||
        !solver.contains(w[3])) {
      ++out.n_dropped;
      continue;
    }
    ++out.n_used;
    if (solver.solve(w[0], w[1], w[2]) == w[3]) ++out.n_correct;
  }
  require(out.n_used > 0, ErrorKind::Evaluation, "no usable analogy rows");
  out.accuracy = static_cast<double>(out.n_correct) / static_cast<double>(out.n_used);
  return out;
}

PlantedLexicon planted_lexicon(std::size_t concepts, std::size_t aspects, std::size_t dim,
                               std::uint64_t seed) {
  require(concepts >= 2 && aspects >= 2, ErrorKind::Parameter,
          "planted lexicon needs at least 2 concepts and 2 aspects");
  require(dim >= 1, ErrorKind::Parameter, "dimension must be >= 1");
  Rng root(seed);
  auto draw = [&](const char* label, std::size_t n) {
    std::vector<std::vector<double>> out(n, std::vector<double>(dim));
    for (std::size_t i = 0; i < n; ++i) {
      Rng rng = root.split(label, i);
      for (double& x : out[i]) x = rng.normal();
    }
    return out;
  };
  const auto cv = draw("concept", concepts), av = draw("aspect", aspects);
  auto name = [](std::size_t i, std::size_t j) {
    return "c" + std::to_string(i) + "_a" + std::to_string(j);
  };
  PlantedLexicon out;
  out.vectors = EmbeddingSet(dim);
  std::vector<double> row(dim);
  for (std::size_t i = 0; i < concepts; ++i) {
    for (std::size_t j = 0; j < aspects; ++j) {
      for (std::size_t x = 0; x < dim; ++x) row[x] = cv[i][x] + av[j][x];
      out.vectors.add(word_key(name(i, j)), row);
    }
  }
  for (std::size_t i = 0; i < concepts; ++i)
    for (std::size_t l = 0; l < concepts; ++l)
      for (std::size_t j = 0; j < aspects; ++j)
        for (std::size_t k = 0; k < aspects; ++k)
          if (i != l && j != k)
            out.tuples.rows.push_back({{name(i, j), name(i, k), name(l, j), name(l, k)}});
  return out;
}

}  // namespace addcomp
