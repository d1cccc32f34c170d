#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "addcomp/composition.hpp"
#include "addcomp/error.hpp"
#include "addcomp/genmodel.hpp"
#include "addcomp/numeric.hpp"
#include "oracles.hpp"

using namespace addcomp;

namespace {

std::shared_ptr<const CoocTable> count_text(const std::string& text, bool nearfar = false) {
  auto corpus = parse_corpus(text);
  auto vocab = std::make_shared<const Vocabulary>(build_vocabulary(corpus, 1));
  ContextConfig cfg;
  cfg.nearfar = nearfar;
  return std::make_shared<const CoocTable>(
      count_contexts(corpus, vocab, extract_targets(corpus, *vocab, 1), cfg));
}

std::shared_ptr<const CoocTable> fixture_table(bool nearfar = false) {
  auto corpus = read_corpus_file("data/fixture_corpus.txt");
  auto vocab = std::make_shared<const Vocabulary>(build_vocabulary(corpus, 1));
  ContextConfig cfg;
  cfg.nearfar = nearfar;
  return std::make_shared<const CoocTable>(
      count_contexts(corpus, vocab, extract_targets(corpus, *vocab, 1), cfg));
}

}  // namespace

TEST_CASE("bias bound values and shape") {
  CHECK(bias_bound(0, 0) == 0.0);
  CHECK(bias_bound(1, 1) == doctest::Approx(1.224745).epsilon(1e-6));
  CHECK(bias_bound(1, 0) == doctest::Approx(0.707107).epsilon(1e-6));
  CHECK_THROWS_AS(bias_bound(-0.1, 0.5), Error);
  CHECK_THROWS_AS(bias_bound(0.5, 1.1), Error);
  for (double x = 0; x <= 1.0; x += 0.05) {
    for (double y = 0; y <= 1.0; y += 0.05) {
      CHECK(bias_bound(x, y) == bias_bound(y, x));
      CHECK(bias_bound(x, y) <= std::sqrt(1.5) + 1e-15);
      if (x + 0.05 <= 1.0) CHECK(bias_bound(x + 0.05, y) >= bias_bound(x, y));
      if (x > 0 || y > 0) CHECK(bias_bound(x, y) > 0.0);
    }
  }
}

TEST_CASE("collocation pi by hand counts") {
  auto table = count_text("a b . a c . a b");
  const auto& v = table->vocab();
  auto [p1, p2] = collocation_pi(*table, v.id("a"), v.id("b"));
  CHECK(p1 == doctest::Approx(0.0));
  CHECK(p2 == doctest::Approx(1.0 / 3.0));

  auto exclusive = count_text("x s t y . s t z . q s t");
  const auto& e = exclusive->vocab();
  auto [q1, q2] = collocation_pi(*exclusive, e.id("s"), e.id("t"));
  CHECK(q1 == 0.0);
  CHECK(q2 == 0.0);

  // A phrase target that never occurs: both words are never adjacent.
  auto vocab = std::make_shared<const Vocabulary>(std::vector<std::string>{"s", "t"},
                                                  std::vector<std::uint64_t>{2, 2});
  CoocTable manual(vocab, ContextConfig{});
  manual.insert(TargetKey::unigram(0), make_counts(std::vector<std::uint64_t>{0, 3}, 2));
  manual.insert(TargetKey::unigram(1), make_counts(std::vector<std::uint64_t>{3, 0}, 2));
  manual.insert(TargetKey::unordered(0, 1), make_counts(std::vector<std::uint64_t>{0, 0}, 0));
  auto [r1, r2] = collocation_pi(manual, 0, 1);
  CHECK(r1 == 1.0);
  CHECK(r2 == 1.0);

  CoocTable empty(vocab, ContextConfig{});
  empty.insert(TargetKey::unigram(0), make_counts(std::vector<std::uint64_t>{0, 0}, 0));
  empty.insert(TargetKey::unigram(1), make_counts(std::vector<std::uint64_t>{0, 0}, 0));
  empty.insert(TargetKey::unordered(0, 1), make_counts(std::vector<std::uint64_t>{0, 0}, 0));
  CHECK_THROWS_AS(collocation_pi(empty, 0, 1), Error);
}

TEST_CASE("near-far collocation pi") {
  auto table = count_text("s t . s t . s x . y t . t s", true);
  const auto& v = table->vocab();
  auto [p1, p2] = collocation_pi(*table, v.id("s"), v.id("t"));
  CHECK(p1 == doctest::Approx(1.0 - 2.0 / 4.0));
  CHECK(p2 == doctest::Approx(1.0 - 2.0 / 4.0));
}

TEST_CASE("composition on planted vectors") {
  auto vocab = std::make_shared<const Vocabulary>(std::vector<std::string>{"s", "t"},
                                                  std::vector<std::uint64_t>{2, 1});
  CoocTable table(vocab, ContextConfig{});
  EmbeddingSet set;
  const std::vector<double> v{0.3, -1.2, 2.5};
  set.add("W s", v);
  set.add("W t", v);
  set.add("U s t", v);
  auto lookup = embedding_lookup(set, *vocab);
  CHECK(compose_additive(lookup, 0, 1, false) == v);
  CHECK(bias(lookup, 0, 1, false) == 0.0);

  EmbeddingSet other;
  other.add("W s", std::vector<double>{1.0, 2.0, 3.0});
  other.add("W t", std::vector<double>{-0.7, 0.1, 9.0});
  auto l2 = embedding_lookup(other, *vocab);
  CHECK(compose_additive(l2, 0, 1, false) == compose_additive(l2, 1, 0, false));
  CHECK_THROWS_AS(compose_additive(l2, 0, 1, true), Error);
}

TEST_CASE("bias matches a coordinate-wise oracle on the three-context fixture") {
  auto vocab = std::make_shared<const Vocabulary>(std::vector<std::string>{"a", "b", "c"},
                                                  std::vector<std::uint64_t>{9, 6, 5});
  auto table = std::make_shared<CoocTable>(vocab, ContextConfig{});
  const std::vector<std::vector<double>> dense{{0, 3, 1}, {2, 0, 2}, {1, 1, 2}, {3, 0, 1}, {1, 2, 0}};
  const std::vector<TargetKey> keys{TargetKey::unigram(0), TargetKey::unigram(1),
                                    TargetKey::unordered(0, 1), TargetKey::unordered(0, 2),
                                    TargetKey::unigram(2)};
  for (std::size_t k = 0; k < keys.size(); ++k) {
    std::vector<std::uint64_t> row(dense[k].begin(), dense[k].end());
    table->insert(keys[k], make_counts(row, 1));
  }
  for (double lambda : {0.0, 0.5}) {
    auto space = VectorSpace::build(table, lambda, {keys[2], keys[3]});
    auto ref = oracle::natural_space(dense, {2, 3}, lambda);
    long double sq = 0;
    for (std::size_t i = 0; i < 3; ++i) {
      const long double d = ref.w[2][i] - (ref.w[0][i] + ref.w[1][i]) / 2;
      sq += d * d;
    }
    CHECK(bias(space, 0, 1) == doctest::Approx(static_cast<double>(std::sqrt(sq))).epsilon(1e-12));
  }
}

TEST_CASE("bias properties on the fixture corpus") {
  for (bool nearfar : {false, true}) {
    auto table = fixture_table(nearfar);
    auto phrases = default_phrase_set(*table);
    auto space = VectorSpace::build(table, 0.0, phrases);
    auto lookup = natural_lookup(space);
    std::vector<double> shift(space.dim());
    for (std::size_t i = 0; i < shift.size(); ++i) shift[i] = std::sin(3.0 * i) * 5.0;
    VectorLookup shifted = [&](const TargetKey& key) {
      auto w = space.vector(key);
      for (std::size_t i = 0; i < w.size(); ++i) w[i] += shift[i];
      return w;
    };
    for (const auto& key : phrases) {
      const WordId s = key.first, t = key.second;
      const auto [ks, kt] = constituent_keys(s, t, nearfar);
      const double b = bias(lookup, s, t, nearfar);
      CHECK(b >= 0.0);
      // Triangle inequality.
      CHECK(b <= norm(space.vector(key)) +
                     0.5 * (norm(space.vector(ks)) + norm(space.vector(kt))) + 1e-12);
      // Per-dimension offsets cancel.
      CHECK(std::fabs(bias(shifted, s, t, nearfar) - b) <= 1e-9);
      // Moving a uniform offset away from the constructed value never helps.
      auto diff = space.vector(key);
      const auto composed = compose_additive(lookup, s, t, nearfar);
      for (std::size_t i = 0; i < diff.size(); ++i) diff[i] -= composed[i];
      for (double delta : {-0.1, -1e-3, 1e-3, 0.1}) {
        auto moved = diff;
        for (double& x : moved) x += delta;
        CHECK(norm(moved) >= b - 1e-12);
      }
    }
  }
}

TEST_CASE("bias report") {
  auto table = fixture_table();
  auto space = VectorSpace::build(table, 0.0, default_phrase_set(*table));
  try {
    bias_report(space, {});
    FAIL("expected an evaluation error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Evaluation);
    CHECK(std::string(e.what()) == "no phrases");
  }
  auto report = bias_report(space, default_phrase_set(*table), 0.05);
  CHECK(report.records.size() == default_phrase_set(*table).size());
  CHECK(report.epsilon == 0.05);
  std::size_t violations = 0;
  double sum = 0.0;
  for (const auto& r : report.records) {
    CHECK(r.bound == bias_bound(r.pi1, r.pi2));
    violations += r.bias > r.bound + 0.05;
    sum += r.bias;
  }
  CHECK(report.violation_fraction == doctest::Approx(double(violations) / report.records.size()));
  CHECK(report.mean_bias == doctest::Approx(sum / report.records.size()));
  std::ostringstream out;
  write_scatter(out, report, table->vocab());
  std::istringstream lines(out.str());
  std::string line;
  std::getline(lines, line);
  CHECK(std::count(line.begin(), line.end(), '\t') == 4);

  auto nf_table = fixture_table(true);
  auto nf_space = VectorSpace::build(nf_table, 0.0, default_phrase_set(*nf_table));
  auto nf = bias_report(nf_space, default_phrase_set(*nf_table));
  CHECK(nf.nearfar);
  std::ostringstream nf_out;
  write_scatter(nf_out, nf, nf_table->vocab());
  std::getline(std::istringstream(nf_out.str()) >> std::ws, line);
  CHECK(std::count(line.begin(), line.end(), '\t') == 5);
  // Wrong key kind for the table mode.
  CHECK_THROWS_AS(bias_report(nf_space, default_phrase_set(*table)), Error);
}

TEST_CASE("zero-bias phrases have no violations") {
  auto vocab = std::make_shared<const Vocabulary>(std::vector<std::string>{"s", "t", "u"},
                                                  std::vector<std::uint64_t>{3, 2, 1});
  CoocTable table(vocab, ContextConfig{});
  for (WordId w : {0u, 1u, 2u}) {
    table.insert(TargetKey::unigram(w), make_counts(std::vector<std::uint64_t>{1, 1, 1}, 3));
  }
  table.insert(TargetKey::unordered(0, 1), make_counts(std::vector<std::uint64_t>{1, 1, 1}, 3));
  table.insert(TargetKey::unordered(1, 2), make_counts(std::vector<std::uint64_t>{1, 1, 1}, 3));
  EmbeddingSet set;
  const std::vector<double> v{1.0, 2.0};
  for (const auto& [key, _] : table.targets()) set.add(format_target(key, *vocab), v);
  auto report = bias_report(embedding_lookup(set, *vocab), table,
                            {TargetKey::unordered(0, 1), TargetKey::unordered(1, 2)});
  CHECK(report.violation_fraction == 0.0);
  CHECK(report.mean_bias == 0.0);
}

TEST_CASE("nearest neighbors") {
  EmbeddingSet set;
  set.add("e1", std::vector<double>{1, 0, 0});
  set.add("e3", std::vector<double>{0, 0, 1});
  set.add("e2", std::vector<double>{0, 1, 0});
  set.add("z", std::vector<double>{0, 0, 0});
  std::size_t skipped = 0;
  auto top = nearest_neighbors(set, std::vector<double>{0, 0, 2}, 3, &skipped);
  CHECK(skipped == 1);
  REQUIRE(top.size() == 3);
  CHECK(top[0].key == "e3");
  CHECK(top[0].cosine == doctest::Approx(1.0));
  // Orthogonal rows tie at 0 and are ordered by key.
  CHECK(top[1].key == "e1");
  CHECK(top[2].key == "e2");
  CHECK_THROWS_AS(nearest_neighbors(set, std::vector<double>{0, 0, 0}, 1), Error);

  // Brute force over five fixed vectors.
  EmbeddingSet five;
  const std::vector<std::vector<double>> rows{
      {1, 2, 3}, {-1, 0.5, 2}, {3, 3, -1}, {0.2, -4, 1}, {2, 2, 2}};
  for (std::size_t i = 0; i < rows.size(); ++i) five.add("r" + std::to_string(i), rows[i]);
  const std::vector<double> q{0.5, 1.0, 1.5};
  std::vector<std::pair<long double, std::string>> expected;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    long double d = 0, na = 0, nb = 0;
    for (int k = 0; k < 3; ++k) {
      d += rows[i][k] * q[k];
      na += rows[i][k] * rows[i][k];
      nb += q[k] * q[k];
    }
    expected.emplace_back(-d / std::sqrt(na * nb), "r" + std::to_string(i));
  }
  std::sort(expected.begin(), expected.end());
  auto got = nearest_neighbors(five, q, 5);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(got[i].key == expected[i].second);
    CHECK(got[i].cosine == doctest::Approx(static_cast<double>(-expected[i].first)).epsilon(1e-12));
  }
}

TEST_CASE("near-far composition prefers the attested word order") {
  PlantedCorpusConfig cfg;
  cfg.n_pairs = 10;
  auto planted = emit_planted_corpus(cfg, 21);
  auto vocab = std::make_shared<const Vocabulary>(build_vocabulary(planted.sentences, 1));
  ContextConfig nf;
  nf.nearfar = true;
  auto table = std::make_shared<const CoocTable>(count_contexts(
      planted.sentences, vocab, extract_targets(planted.sentences, *vocab, 1), nf));
  auto space = VectorSpace::build(table, 0.0, default_phrase_set(*table));
  std::size_t preferred = 0;
  for (const auto& [s, t] : planted.pairs) {
    const WordId ws = vocab->id(s), wt = vocab->id(t);
    const auto composed = compose_additive(space, ws, wt);
    const double fwd = cosine(composed, space.vector(TargetKey::ordered(ws, wt)));
    const double rev = cosine(composed, space.vector(TargetKey::ordered(wt, ws)));
    preferred += fwd > rev;
  }
  CHECK(preferred >= 9);
}

TEST_CASE("dense synthetic counts: the bound holds at lambda = 0 and breaks at lambda = 1") {
  // Tokens per target are 200x the context count, so the log transform is
  // close to linear on the mixed counts.
  SynthConfig cfg;
  cfg.n_contexts = 1000;
  cfg.context_steps = 300000;
  cfg.n_targets = 200;
  cfg.tokens_per_target = 200000;
  auto r = synth_cooc(cfg, 12);
  auto table = std::make_shared<const CoocTable>(std::move(r.table));
  auto phrases = default_phrase_set(*table);
  auto r0 = bias_report(VectorSpace::build(table, 0.0, phrases), phrases, 0.05);
  auto r1 = bias_report(VectorSpace::build(table, 1.0, phrases), phrases, 0.05);
  MESSAGE("violations lambda=0: " << r0.violation_fraction
                                  << "  lambda=1: " << r1.violation_fraction);
  CHECK(r0.violation_fraction <= 0.05);
  CHECK(r1.violation_fraction > r0.violation_fraction);
}
