#include "addcomp/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include "addcomp/composition.hpp"
#include "addcomp/corpus.hpp"
#include "addcomp/eval.hpp"
#include "addcomp/genmodel.hpp"
#include "addcomp/numeric.hpp"
#include "addcomp/reduce.hpp"
#include "addcomp/rng.hpp"
#include "addcomp/stats.hpp"
#include "addcomp/vectors.hpp"

namespace addcomp::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config: return 3;
    case ErrorKind::Io: return 4;
    case ErrorKind::Decode: return 5;
    case ErrorKind::Parameter: return 6;
    case ErrorKind::Domain: return 7;
    case ErrorKind::Lookup: return 8;
    case ErrorKind::Statistics: return 9;
    case ErrorKind::Training: return 10;
    case ErrorKind::Evaluation: return 11;
    case ErrorKind::Normalization: return 12;
  }
  return kExitInternal;
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

const char* describe(const std::string& name) {
  static const std::map<std::string, const char*> text{
      {"vocab", "build the vocabulary of a corpus"},
      {"count", "count context co-occurrences for words and bigrams"},
      {"vectors", "write natural vectors for each lambda"},
      {"norms", "phrase and word norm statistics over lambda"},
      {"bias", "additive composition bias against its bound"},
      {"nearfar-bias", "bias on a Near-far table, with reversed order"},
      {"powerlaw", "maximum-likelihood power-law fit with KS lower bound"},
      {"chisq", "chi-square test of the index-1 ratio tail"},
      {"independence", "Spearman correlations between sampled series"},
      {"simulate-py", "Pitman-Yor restaurant simulation"},
      {"simulate-mhpy", "modified hierarchical Pitman-Yor simulation"},
      {"synth-cooc", "synthetic co-occurrence table with planted collocations"},
      {"svd", "truncated SVD embedding of the natural matrix"},
      {"factorize", "SGD factorization with L2, GloVe or SGNS loss"},
      {"eval-phrase", "phrase similarity evaluation"},
      {"eval-analogy", "analogy evaluation"}};
  const auto it = text.find(name);
  return it == text.end() ? "" : it->second;
}

}  // namespace

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{
      "vocab",        "count",       "vectors",  "norms",        "bias",
      "nearfar-bias", "powerlaw",    "chisq",    "independence", "simulate-py",
      "simulate-mhpy", "synth-cooc", "svd",      "factorize",    "eval-phrase",
      "eval-analogy"};
  return names;
}

namespace {

// ---------------------------------------------------------------------------
// Config access

const std::set<std::string> kSections{
    "seed",  "out",    "lambda", "epsilon", "inputs",       "corpus", "context",
    "synth", "py",     "mhpy",   "reduce",  "independence", "powerlaw", "chisq",
    "eval",  "threads"};

const json& section(const json& cfg, const char* name) {
  static const json empty = json::object();
  if (!cfg.contains(name)) return empty;
  const json& s = cfg.at(name);
  require(s.is_object(), ErrorKind::Config, std::string("config section '") + name +
                                                "' must be an object");
  return s;
}

template <class T>
T get(const json& obj, const char* key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(ErrorKind::Config, std::string("config field '") + key + "': " + e.what());
  }
}

struct Run {
  std::string command;
  json cfg;
  std::uint64_t seed = 0;
  std::string hash;  // FNV-1a of the effective config, 16 hex digits
  fs::path out_dir;
  std::vector<std::string> written;
  std::ostream* log = nullptr;

  std::uint64_t substream(std::string_view label) const { return Rng(seed).split(label).next(); }

  std::string header() const { return "# seed=" + std::to_string(seed) + " config=" + hash + "\n"; }

  json stamp() const {
    return json{{"seed", seed}, {"config_hash", hash}, {"subcommand", command}};
  }

  fs::path input(const char* name, const std::string& fallback_file) const {
    const json& in = section(cfg, "inputs");
    if (in.contains(name)) return fs::path(get<std::string>(in, name, ""));
    return out_dir / fallback_file;
  }

  std::optional<fs::path> optional_input(const char* name) const {
    const json& in = section(cfg, "inputs");
    if (!in.contains(name)) return std::nullopt;
    return fs::path(get<std::string>(in, name, ""));
  }

  void write(const std::string& name, const std::string& content) {
    const fs::path target = out_dir / name;
    const fs::path tmp = out_dir / (name + ".tmp");
    {
      std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
      require(f.good(), ErrorKind::Io, "cannot write " + tmp.string());
      f << content;
      f.flush();
      require(f.good(), ErrorKind::Io, "write failed: " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    require(!ec, ErrorKind::Io, "cannot rename onto " + target.string() + ": " + ec.message());
    written.push_back(name);
    *log << "wrote " << target.string() << '\n';
  }

  void write_json(const std::string& name, json body) {
    const json st = stamp();
    for (const auto& [k, v] : st.items()) body[k] = v;
    write(name, body.dump(2) + "\n");
  }
};

void require_file(const fs::path& p) {
  require(fs::is_regular_file(p), ErrorKind::Io, "missing input file: " + p.string());
}

std::string read_text(const fs::path& p) {
  require_file(p);
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<double> lambdas(const Run& run, std::vector<double> fallback) {
  if (!run.cfg.contains("lambda")) return fallback;
  auto l = get<std::vector<double>>(run.cfg, "lambda", {});
  require(!l.empty(), ErrorKind::Config, "lambda list is empty");
  return l;
}

double epsilon(const Run& run) { return get<double>(run.cfg, "epsilon", 0.05); }

std::size_t threads(const Run& run) {
  const auto t = get<std::size_t>(run.cfg, "threads", 0);
  if (t > 0) return t;
  return std::max(1u, std::thread::hardware_concurrency());
}

ContextConfig context_config(const Run& run) {
  const json& c = section(run.cfg, "context");
  ContextConfig cc;
  cc.word_window = get<int>(c, "word_window", cc.word_window);
  cc.phrase_window = get<int>(c, "phrase_window", cc.phrase_window);
  cc.nearfar = get<bool>(c, "nearfar", cc.nearfar);
  cc.sentence_bounded = get<bool>(c, "sentence_bounded", cc.sentence_bounded);
  cc.validate();
  return cc;
}

// ---------------------------------------------------------------------------
// Shared loading

struct LoadedTable {
  std::shared_ptr<const Vocabulary> vocab;
  std::shared_ptr<const CoocTable> table;
};

LoadedTable load_table(const Run& run) {
  const auto vpath = run.input("vocab", "vocab.tsv");
  const auto tpath = run.input("table", "table.tsv");
  require_file(vpath);
  require_file(tpath);
  std::ifstream vin(vpath, std::ios::binary);
  auto vocab = std::make_shared<const Vocabulary>(read_vocabulary(vin));
  std::ifstream tin(tpath, std::ios::binary);
  auto table = std::make_shared<const CoocTable>(CoocTable::read(tin, vocab));
  return {vocab, table};
}

// Phrase list from inputs.phrases ("s t" per line), else every counted phrase.
std::vector<TargetKey> phrase_list(const Run& run, const CoocTable& table) {
  const auto path = run.optional_input("phrases");
  if (!path) return default_phrase_set(table);
  std::istringstream in(read_text(*path));
  std::vector<TargetKey> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    std::istringstream words(line);
    std::string s, t, extra;
    require(static_cast<bool>(words >> s >> t) && !(words >> extra), ErrorKind::Decode,
            "phrase line must hold two words: " + line);
    const auto key =
        phrase_key(table.vocab().id(s), table.vocab().id(t), table.config().nearfar);
    require(table.contains(key), ErrorKind::Lookup, "phrase not counted: " + line);
    out.push_back(key);
  }
  return out;
}

std::vector<TargetKey> word_keys(const CoocTable& table) {
  std::vector<TargetKey> out;
  if (table.config().nearfar) {
    out = table.keys_of(TargetKind::NearfarLeft);
    const auto right = table.keys_of(TargetKind::NearfarRight);
    out.insert(out.end(), right.begin(), right.end());
  } else {
    out = table.keys_of(TargetKind::Unigram);
  }
  return out;
}

// Phrases plus every word target, in key order.
std::vector<TargetKey> embedding_keys(const CoocTable& table,
                                      const std::vector<TargetKey>& phrases) {
  std::set<TargetKey> keys(phrases.begin(), phrases.end());
  for (const auto& k : word_keys(table)) keys.insert(k);
  return {keys.begin(), keys.end()};
}

std::string lambda_tag(double l) { return format_real(l); }

std::string embeddings_text(const EmbeddingSet& set) {
  std::ostringstream s;
  set.write(s);
  return s.str();
}

// ---------------------------------------------------------------------------
// Subcommands

void cmd_vocab(Run& run) {
  const auto path = run.input("corpus", "corpus.txt");
  require_file(path);
  const auto corpus = read_corpus_file(path.string());
  const auto min_count = get<std::uint64_t>(section(run.cfg, "corpus"), "min_count", 1);
  const auto vocab = build_vocabulary(corpus, min_count);
  std::ostringstream v;
  write_vocabulary(v, vocab);
  run.write("vocab.tsv", v.str());
  run.write_json("vocab_summary.json",
                 {{"sentences", corpus.size()}, {"types", vocab.size()}, {"tokens", vocab.total()}});
}

void cmd_count(Run& run) {
  const auto path = run.input("corpus", "corpus.txt");
  require_file(path);
  const json& c = section(run.cfg, "corpus");
  const auto corpus = read_corpus_file(path.string());
  auto vocab = std::make_shared<const Vocabulary>(
      build_vocabulary(corpus, get<std::uint64_t>(c, "min_count", 1)));
  const auto targets = extract_targets(corpus, *vocab, get<std::uint64_t>(c, "phrase_min_count", 1));
  const auto table = count_contexts(corpus, vocab, targets, context_config(run),
                                    static_cast<unsigned>(threads(run)));
  std::size_t identities = 0;
  const bool ok = verify_partition(table, &identities);
  std::ostringstream v, t;
  write_vocabulary(v, *vocab);
  table.write(t);
  run.write("vocab.tsv", v.str());
  run.write("table.tsv", t.str());
  run.write_json("count_summary.json", {{"targets", table.targets().size()},
                                        {"types", vocab->size()},
                                        {"partition_identity", ok},
                                        {"identities_checked", identities}});
  require(ok, ErrorKind::Statistics, "partition identity violated");
}

void cmd_vectors(Run& run) {
  const auto t = load_table(run);
  const auto phrases = phrase_list(run, *t.table);
  const auto keys = embedding_keys(*t.table, phrases);
  for (double l : lambdas(run, {0.0})) {
    const auto space = VectorSpace::build(t.table, l, phrases);
    run.write("vectors_lambda_" + lambda_tag(l) + ".tsv", embeddings_text(export_vectors(space, keys)));
  }
}

void cmd_norms(Run& run) {
  const auto t = load_table(run);
  const auto phrases = phrase_list(run, *t.table);
  const auto words = word_keys(*t.table);
  const auto bins = get<std::size_t>(section(run.cfg, "reduce"), "bins", 20);
  std::ostringstream s, h;
  s << run.header() << "lambda\tkind\tcount\tmean\tstd\n";
  h << run.header() << "lambda\tkind\tlo\thi\tcount\n";
  std::vector<double> grid;
  for (int i = 0; i <= 10; ++i) grid.push_back(i / 10.0);
  for (double l : lambdas(run, grid)) {
    const auto space = VectorSpace::build(t.table, l, phrases);
    for (const auto& [kind, keys] :
         {std::pair<const char*, const std::vector<TargetKey>*>{"words", &words},
          std::pair<const char*, const std::vector<TargetKey>*>{"phrases", &phrases}}) {
      const auto st = norm_statistics(space, *keys, bins);
      s << format_real(l) << '\t' << kind << '\t' << st.count << '\t' << format_real(st.mean)
        << '\t' << format_real(st.std) << '\n';
      for (const auto& b : st.histogram) {
        h << format_real(l) << '\t' << kind << '\t' << format_real(b.lo) << '\t'
          << format_real(b.hi) << '\t' << b.count << '\n';
      }
    }
  }
  run.write("norms.tsv", s.str());
  run.write("norms_hist.tsv", h.str());
}

void bias_common(Run& run, bool nearfar_only) {
  const auto t = load_table(run);
  const bool nearfar = t.table->config().nearfar;
  if (nearfar_only) {
    require(nearfar, ErrorKind::Config, "nearfar-bias needs a Near-far table");
  }
  const auto phrases = phrase_list(run, *t.table);
  require(!phrases.empty(), ErrorKind::Evaluation, "no phrases");
  const double eps = epsilon(run);
  const std::string stem = nearfar_only ? "nearfar_bias" : "bias";
  std::ostringstream summary;
  summary << run.header() << "lambda\tphrases\tepsilon\tviolation_fraction\tmean_bias";
  if (nearfar) summary << "\tmean_bias_reversed\torder_preference";
  summary << '\n';
  for (double l : lambdas(run, {0.0, 1.0})) {
    const auto space = VectorSpace::build(t.table, l, phrases);
    const auto report = bias_report(space, phrases, eps);
    std::ostringstream scatter;
    scatter << run.header();
    write_scatter(scatter, report, *t.vocab);
    run.write(stem + "_lambda_" + lambda_tag(l) + ".tsv", scatter.str());
    summary << format_real(l) << '\t' << report.records.size() << '\t' << format_real(eps)
            << '\t' << format_real(report.violation_fraction) << '\t'
            << format_real(report.mean_bias);
    if (nearfar) {
      // Share of phrases whose composition is closer (cosine) to the attested
      // order than to the reversed one, over phrases counted in both orders.
      std::size_t both = 0, preferred = 0;
      for (const auto& p : phrases) {
        const auto rev = TargetKey::ordered(p.second, p.first);
        if (!space.contains(rev)) continue;
        const auto composed = compose_additive(space, p.first, p.second);
        ++both;
        preferred += cosine(composed, space.vector(p)) > cosine(composed, space.vector(rev));
      }
      summary << '\t'
              << (report.mean_bias_reversed ? format_real(*report.mean_bias_reversed) : "nan")
              << '\t'
              << (both ? format_real(static_cast<double>(preferred) / static_cast<double>(both))
                       : "nan");
    }
    summary << '\n';
  }
  run.write(stem + "_summary.tsv", summary.str());
}

void cmd_bias(Run& run) { bias_common(run, false); }
void cmd_nearfar_bias(Run& run) { bias_common(run, true); }

std::vector<double> read_samples(const fs::path& p) {
  std::istringstream in(read_text(p));
  std::vector<double> out;
  std::string tok;
  while (in >> tok) {
    if (tok.front() == '#') {
      std::getline(in, tok);
      continue;
    }
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    require(end && *end == '\0', ErrorKind::Decode, "malformed sample: " + tok);
    out.push_back(v);
  }
  return out;
}

void cmd_powerlaw(Run& run) {
  const json& c = section(run.cfg, "powerlaw");
  std::vector<double> sample;
  std::string source;
  if (auto p = run.optional_input("samples")) {
    sample = read_samples(*p);
    source = p->filename().string();
  } else {
    const auto t = load_table(run);
    const auto target = get<std::string>(c, "target", "");
    require(!target.empty(), ErrorKind::Config,
            "powerlaw needs inputs.samples or powerlaw.target");
    const auto key = parse_target(target, *t.vocab);
    for (double r : probability_ratios(*t.table, key))
      if (r > 0) sample.push_back(r);
    source = target;
  }
  const auto fit = fit_power_law(sample, get<std::size_t>(c, "max_candidates", 2000));
  run.write_json("powerlaw.json", {{"source", source},
                                   {"n", sample.size()},
                                   {"alpha", fit.alpha},
                                   {"m", fit.m},
                                   {"ks", fit.ks},
                                   {"n_tail", fit.n_tail}});
}

void cmd_chisq(Run& run) {
  struct Row {
    std::string name;
    std::array<std::uint64_t, 5> counts;
  };
  std::vector<Row> rows;
  const bool from_file = run.optional_input("chisq_counts").has_value();
  if (from_file) {
    std::istringstream in(read_text(*run.optional_input("chisq_counts")));
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line.front() == '#') continue;
      std::istringstream f(line);
      Row r;
      require(static_cast<bool>(f >> r.name), ErrorKind::Decode, "chisq line without name");
      for (auto& c : r.counts)
        require(static_cast<bool>(f >> c), ErrorKind::Decode, "chisq line needs 5 counts: " + line);
      rows.push_back(r);
    }
  } else {
    const auto t = load_table(run);
    for (const auto& key : word_keys(*t.table)) {
      rows.push_back({format_target(key, *t.vocab),
                      ratio_categories(probability_ratios(*t.table, key))});
    }
  }
  require(!rows.empty(), ErrorKind::Evaluation, "no rows to test");
  std::ostringstream s;
  s << run.header() << "name\tc0\tc1\tc2\tc3\tc4\tm\tchi2\tp_value\tpassed\n";
  std::size_t skipped = 0, passed = 0;
  for (const auto& r : rows) {
    std::uint64_t total = 0;
    for (auto c : r.counts) total += c;
    if (!from_file && total < 50) {
      ++skipped;
      continue;
    }
    const auto res = chisq_index1_test(r.counts);
    passed += res.passed;
    s << r.name;
    for (auto c : r.counts) s << '\t' << c;
    s << '\t' << format_real(res.m_star) << '\t' << format_real(res.chi2) << '\t'
      << format_real(res.p_value) << '\t' << (res.passed ? 1 : 0) << '\n';
  }
  run.write("chisq.tsv", s.str());
  run.write_json("chisq_summary.json",
                 {{"tested", rows.size() - skipped}, {"passed", passed}, {"skipped", skipped},
                  {"threshold", kChisqPass}});
}

void cmd_independence(Run& run) {
  const auto t = load_table(run);
  const json& c = section(run.cfg, "independence");
  const auto kind = parse_pair_kind(get<std::string>(c, "kind", "word-dimensions"));
  const auto pairs = get<std::size_t>(c, "pairs", 1000);
  const auto rep = independence_report(*t.table, kind, pairs, run.substream("independence"));
  std::ostringstream s;
  s << run.header() << "lo\thi\tcount\n";
  for (const auto& b : rep.histogram)
    s << format_real(b.lo) << '\t' << format_real(b.hi) << '\t' << b.count << '\n';
  run.write("independence_hist.tsv", s.str());
  std::size_t small = 0;
  double abs_sum = 0;
  for (double r : rep.rhos) {
    small += std::fabs(r) <= 0.1;
    abs_sum += std::fabs(r);
  }
  const double n = static_cast<double>(std::max<std::size_t>(rep.rhos.size(), 1));
  run.write_json("independence.json", {{"kind", pair_kind_name(kind)},
                                       {"pairs", rep.rhos.size()},
                                       {"skipped", rep.skipped},
                                       {"mean_abs_rho", abs_sum / n},
                                       {"fraction_abs_rho_le_0.1", small / n}});
}

// Ranks 1..1000, then about 20 per decade.
std::vector<std::size_t> report_ranks(std::size_t n) {
  std::vector<std::size_t> out;
  for (std::size_t r = 1; r <= n; r = r < 1000 ? r + 1 : static_cast<std::size_t>(std::ceil(r * 1.122)))
    out.push_back(r);
  if (!out.empty() && out.back() != n) out.push_back(n);
  return out;
}

void cmd_simulate_py(Run& run) {
  const json& c = section(run.cfg, "py");
  PYParams p{get<double>(c, "alpha", 0.95), get<double>(c, "theta", 1.0)};
  const auto steps = get<std::uint64_t>(c, "steps", 1000000);
  const auto state = sample_pitman_yor(p, steps, run.substream("py"));
  const auto diag = zipf_diagnostic(state.counts, get<std::size_t>(c, "band_lo", 10),
                                    get<std::size_t>(c, "band_hi", 1000));
  auto sorted = state.counts;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  std::ostringstream rf, ratio;
  rf << run.header() << "rank\tcount\tp_rank_log\n";
  for (auto r : report_ranks(sorted.size())) {
    rf << r << '\t' << sorted[r - 1] << '\t' << format_real(diag.points[r - 1].second) << '\n';
  }
  ratio << run.header() << "step\tratio\n";
  for (const auto& [st, v] : state.ratio_series) ratio << st << '\t' << format_real(v) << '\n';
  run.write("py_rank_frequency.tsv", rf.str());
  run.write("py_ratio.tsv", ratio.str());
  // Relative change of C / N^(1/alpha) over the last decade of steps.
  double change = std::numeric_limits<double>::quiet_NaN();
  if (!state.ratio_series.empty()) {
    const double last = state.ratio_series.back().second;
    const auto decade = state.ratio_series.back().first / 10;
    for (const auto& [st, v] : state.ratio_series)
      if (st <= decade) change = std::fabs(last - v) / v;
  }
  run.write_json("py_summary.json", {{"alpha", p.alpha},
                                     {"theta", p.theta},
                                     {"steps", steps},
                                     {"distinct", state.distinct()},
                                     {"slope", diag.slope},
                                     {"band", {diag.band_lo, diag.band_hi}},
                                     {"zipfian", diag.zipfian},
                                     {"final_decade_ratio_change", change}});
}

void cmd_simulate_mhpy(Run& run) {
  const json& c = section(run.cfg, "mhpy");
  MHPYParams p;
  p.alpha1 = get<double>(c, "alpha1", p.alpha1);
  p.theta1 = get<double>(c, "theta1", p.theta1);
  p.alpha2 = get<double>(c, "alpha2", p.alpha2);
  p.theta2 = get<double>(c, "theta2", p.theta2);
  const auto steps = get<std::uint64_t>(c, "steps", 100000);
  const auto state = sample_mhpy(p, steps, run.substream("mhpy"));
  std::vector<std::size_t> order(state.word_counts.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return state.word_counts[a] > state.word_counts[b];
  });
  std::ostringstream s;
  s << run.header() << "word\tcount\treferences\n";
  for (auto w : order) {
    if (state.word_counts[w] == 0) continue;
    s << w << '\t' << state.word_counts[w] << '\t' << state.reference_counts[w] << '\n';
  }
  run.write("mhpy_words.tsv", s.str());
  std::vector<std::uint64_t> nonzero;
  for (auto c2 : state.word_counts)
    if (c2) nonzero.push_back(c2);
  json summary{{"steps", steps},
               {"total", state.total},
               {"distinct_words", state.distinct_words},
               {"total_references", state.total_references},
               {"normalizer", state.D}};
  if (nonzero.size() >= 10) summary["slope"] = zipf_diagnostic(nonzero).slope;
  run.write_json("mhpy_summary.json", summary);
}

void cmd_synth_cooc(Run& run) {
  const json& c = section(run.cfg, "synth");
  SynthConfig sc;
  sc.target_process.alpha = get<double>(c, "alpha1", sc.target_process.alpha);
  sc.target_process.theta = get<double>(c, "theta1", sc.target_process.theta);
  sc.context_process.alpha = get<double>(c, "alpha2", sc.context_process.alpha);
  sc.context_process.theta = get<double>(c, "theta2", sc.context_process.theta);
  sc.n_contexts = get<std::size_t>(c, "n_contexts", sc.n_contexts);
  sc.context_steps = get<std::uint64_t>(c, "context_steps", sc.context_steps);
  sc.n_targets = get<std::size_t>(c, "n_targets", sc.n_targets);
  sc.tokens_per_target = get<std::uint64_t>(c, "tokens_per_target", sc.tokens_per_target);
  sc.phrase_fraction = get<double>(c, "phrase_fraction", sc.phrase_fraction);
  sc.max_pi = get<double>(c, "max_pi", sc.max_pi);
  if (c.contains("fixed_pi")) sc.fixed_pi = get<double>(c, "fixed_pi", 0.0);
  sc.threads = threads(run);
  const auto r = synth_cooc(sc, run.substream("synth"));
  std::size_t identities = 0;
  const bool ok = verify_partition(r.table, &identities);
  std::ostringstream v, t, pl;
  write_vocabulary(v, *r.vocab);
  r.table.write(t);
  pl << run.header() << "s\tt\tpi_s\tpi_t\n";
  for (const auto& p : r.phrases) {
    pl << r.vocab->token(p.s) << '\t' << r.vocab->token(p.t) << '\t' << format_real(p.pi_s)
       << '\t' << format_real(p.pi_t) << '\n';
  }
  run.write("vocab.tsv", v.str());
  run.write("table.tsv", t.str());
  run.write("planted.tsv", pl.str());
  run.write_json("synth_summary.json", {{"targets", r.table.targets().size()},
                                        {"phrases", r.phrases.size()},
                                        {"contexts", sc.n_contexts},
                                        {"partition_identity", ok},
                                        {"identities_checked", identities}});
  require(ok, ErrorKind::Statistics, "partition identity violated");
}

std::size_t reduce_dim(const Run& run) {
  return get<std::size_t>(section(run.cfg, "reduce"), "dim", 200);
}

void cmd_svd(Run& run) {
  const auto t = load_table(run);
  const json& c = section(run.cfg, "reduce");
  const auto phrases = phrase_list(run, *t.table);
  const auto keys = embedding_keys(*t.table, phrases);
  const double l = lambdas(run, {0.0}).front();
  const auto space = VectorSpace::build(t.table, l, phrases);
  std::vector<std::string> labels;
  for (const auto& k : keys) labels.push_back(format_target(k, *t.vocab));
  SVDOptions opt;
  opt.oversample = get<std::size_t>(c, "oversample", opt.oversample);
  opt.power_iters = get<std::size_t>(c, "power_iters", opt.power_iters);
  opt.seed = run.substream("svd");
  const auto d = reduce_dim(run);
  const auto a = natural_matrix(space, keys);
  const auto svd = truncated_svd(a, d, opt);
  const auto e = embed(a, labels, d, get<bool>(c, "normalize", true), opt);
  run.write("embeddings.tsv", embeddings_text(e.vectors));
  std::ostringstream s;
  s << run.header() << "index\tsigma\n";
  for (Eigen::Index i = 0; i < svd.sigma.size(); ++i)
    s << i + 1 << '\t' << format_real(svd.sigma(i)) << '\n';
  run.write("sigma.tsv", s.str());
}

void cmd_factorize(Run& run) {
  const auto t = load_table(run);
  const json& c = section(run.cfg, "reduce");
  const auto phrases = phrase_list(run, *t.table);
  const auto keys = embedding_keys(*t.table, phrases);
  LossSpec spec;
  spec.kind = parse_loss_kind(get<std::string>(c, "loss", "l2"));
  spec.x_max = get<double>(c, "x_max", spec.x_max);
  spec.exponent = get<double>(c, "exponent", spec.exponent);
  spec.k = get<double>(c, "k", 2.0);
  spec.validate();
  const auto n = static_cast<Eigen::Index>(t.table->context_size());
  const auto m = static_cast<Eigen::Index>(keys.size());
  require(static_cast<double>(n) * static_cast<double>(m) <= 1e7, ErrorKind::Parameter,
          "factorize handles at most 1e7 matrix entries");

  FactorizeInput in;
  for (const auto& k : keys) in.keys.push_back(format_target(k, *t.vocab));
  if (spec.kind == LossKind::L2) {
    const auto space = VectorSpace::build(t.table, lambdas(run, {0.0}).front(), phrases);
    in.target = natural_matrix(space, keys);
  } else {
    Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(n, m);
    in.occurrences.resize(m);
    for (Eigen::Index j = 0; j < m; ++j) {
      const auto& sc = t.table->counts(keys[static_cast<std::size_t>(j)]);
      for (const auto& [ctx, cnt] : sc.entries) counts(ctx, j) = static_cast<double>(cnt);
      in.occurrences(j) = static_cast<double>(sc.occurrences);
    }
    if (spec.kind == LossKind::GloVe) {
      in.counts = counts;
      in.target = counts.unaryExpr([](double x) { return x > 0 ? std::log(x) : 0.0; });
    } else {
      // Noise is the unigram distribution; Near-far halves share a word's mass.
      const bool nf = t.table->config().nearfar;
      in.p_noise.resize(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto w = static_cast<WordId>(nf ? i / 2 : i);
        in.p_noise(i) = t.vocab->probability(w) / (nf ? 2.0 : 1.0);
      }
      require(in.p_noise.minCoeff() > 0, ErrorKind::Parameter,
              "every context word needs a positive count for the noise distribution");
      in.p_noise /= in.p_noise.sum();
      in.p_target.resize(n, m);
      in.target.resize(n, m);
      for (Eigen::Index j = 0; j < m; ++j) {
        const double total = counts.col(j).sum();
        require(total > 0, ErrorKind::Domain, "target without contexts: " + in.keys[static_cast<std::size_t>(j)]);
        for (Eigen::Index i = 0; i < n; ++i) {
          const double p = counts(i, j) / total;
          in.p_target(i, j) = p;
          in.target(i, j) = p > 0 ? std::log(p) - std::log(spec.k * in.p_noise(i))
                                  : -std::numeric_limits<double>::infinity();
        }
      }
    }
  }
  SGDOptions opt;
  opt.epochs = get<std::size_t>(c, "epochs", opt.epochs);
  // SGNS entries carry the weight C(t); the default rate is scaled to match.
  const double rate = spec.kind == LossKind::SGNS
                          ? opt.learning_rate / std::max(1.0, in.occurrences.maxCoeff())
                          : opt.learning_rate;
  opt.learning_rate = get<double>(c, "learning_rate", rate);
  opt.decay = get<double>(c, "decay", opt.decay);
  opt.init_scale = get<double>(c, "init_scale", opt.init_scale);
  opt.seed = run.substream("factorize");
  auto r = sgd_factorize(in, reduce_dim(run), spec, opt);
  if (get<bool>(c, "normalize", true)) r.vectors.normalize();
  run.write("embeddings.tsv", embeddings_text(r.vectors));
  std::ostringstream s;
  s << run.header() << "epoch\tloss\n0\t" << format_real(r.initial_loss) << '\n';
  for (std::size_t e = 0; e < r.epoch_loss.size(); ++e)
    s << e + 1 << '\t' << format_real(r.epoch_loss[e]) << '\n';
  run.write("training_log.tsv", s.str());
}

EmbeddingSet load_embeddings(const Run& run) {
  const auto p = run.input("embeddings", "embeddings.tsv");
  std::istringstream in(read_text(p));
  return EmbeddingSet::read(in);
}

void cmd_eval_phrase(Run& run) {
  const auto dpath = run.optional_input("phrase_dataset");
  require(dpath.has_value(), ErrorKind::Config, "eval-phrase needs inputs.phrase_dataset");
  require_file(*dpath);
  const auto set = load_embeddings(run);
  const auto data = read_phrase_dataset_file(dpath->string());
  const auto composer =
      parse_composer(get<std::string>(section(run.cfg, "eval"), "composer", "additive"));
  const auto r = phrase_similarity_eval(set, data, composer, context_config(run).nearfar);
  json cats = json::object();
  for (const auto& c : r.categories) {
    cats[c.category] = {{"rho", std::isnan(c.rho) ? json(nullptr) : json(c.rho)},
                        {"p_value", std::isnan(c.p_value) ? json(nullptr) : json(c.p_value)},
                        {"n_used", c.n_used},
                        {"n_dropped", c.n_dropped}};
  }
  run.write_json("eval_phrase.json", {{"composer", composer_name(composer)},
                                      {"categories", cats},
                                      {"n_used", r.n_used},
                                      {"n_dropped", r.n_dropped}});
}

void cmd_eval_analogy(Run& run) {
  const auto dpath = run.optional_input("analogy_dataset");
  require(dpath.has_value(), ErrorKind::Config, "eval-analogy needs inputs.analogy_dataset");
  require_file(*dpath);
  const auto set = load_embeddings(run);
  const auto r = analogy_eval(set, read_analogy_dataset_file(dpath->string()));
  run.write_json("eval_analogy.json", {{"accuracy", r.accuracy},
                                       {"n_correct", r.n_correct},
                                       {"n_used", r.n_used},
                                       {"n_dropped", r.n_dropped}});
}

const std::map<std::string, std::function<void(Run&)>>& handlers() {
  static const std::map<std::string, std::function<void(Run&)>> h{
      {"vocab", cmd_vocab},
      {"count", cmd_count},
      {"vectors", cmd_vectors},
      {"norms", cmd_norms},
      {"bias", cmd_bias},
      {"nearfar-bias", cmd_nearfar_bias},
      {"powerlaw", cmd_powerlaw},
      {"chisq", cmd_chisq},
      {"independence", cmd_independence},
      {"simulate-py", cmd_simulate_py},
      {"simulate-mhpy", cmd_simulate_mhpy},
      {"synth-cooc", cmd_synth_cooc},
      {"svd", cmd_svd},
      {"factorize", cmd_factorize},
      {"eval-phrase", cmd_eval_phrase},
      {"eval-analogy", cmd_eval_analogy}};
  return h;
}

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string lambda;
  bool nearfar = false;
  std::optional<std::size_t> dim;
  std::optional<double> epsilon;
};

std::vector<double> parse_lambda_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream s(text);
  std::string item;
  while (std::getline(s, item, ',')) {
    char* end = nullptr;
    const double v = std::strtod(item.c_str(), &end);
    require(!item.empty() && end && *end == '\0', ErrorKind::Config, "bad lambda value: " + item);
    out.push_back(v);
  }
  require(!out.empty(), ErrorKind::Config, "empty --lambda list");
  return out;
}

json effective_config(const Flags& f) {
  json cfg = json::object();
  if (!f.config.empty()) {
    const std::string text = read_text(f.config);
    try {
      cfg = json::parse(text);
    } catch (const json::exception& e) {
      fail(ErrorKind::Config, "malformed config " + f.config + ": " + e.what());
    }
    require(cfg.is_object(), ErrorKind::Config, "config root must be an object");
  }
  for (const auto& [k, v] : cfg.items()) {
    require(kSections.count(k) != 0, ErrorKind::Config, "unknown config key: " + k);
  }
  if (f.seed) cfg["seed"] = *f.seed;
  if (!f.out.empty()) cfg["out"] = f.out;
  if (!f.lambda.empty()) cfg["lambda"] = parse_lambda_list(f.lambda);
  if (f.nearfar) cfg["context"]["nearfar"] = true;
  if (f.dim) cfg["reduce"]["dim"] = *f.dim;
  if (f.epsilon) cfg["epsilon"] = *f.epsilon;
  return cfg;
}

void report_error(std::ostream& err, const std::string& kind, int status, const std::string& msg) {
  err << json{{"error", kind}, {"exit", status}, {"message", msg}}.dump() << '\n';
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Additive composition experiments on co-occurrence statistics", "addcomp"};
  app.require_subcommand(1, 1);
  Flags flags;
  for (const auto& name : subcommands()) {
    auto* sub = app.add_subcommand(name, describe(name));
    sub->add_option("--config", flags.config, "JSON config file");
    sub->add_option("--seed", flags.seed, "top-level seed");
    sub->add_option("--out", flags.out, "output directory");
    sub->add_option("--lambda", flags.lambda, "comma-separated lambda values");
    sub->add_flag("--nearfar", flags.nearfar, "use Near-far contexts");
    sub->add_option("--dim", flags.dim, "reduced dimension");
    sub->add_option("--epsilon", flags.epsilon, "bias bound tolerance");
  }
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    report_error(err, "usage", kExitUsage, e.what());
    return kExitUsage;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    Run r;
    r.command = command;
    r.cfg = effective_config(flags);
    r.seed = get<std::uint64_t>(r.cfg, "seed", 0);
    r.cfg["seed"] = r.seed;
    r.out_dir = get<std::string>(r.cfg, "out", "out");
    r.cfg.erase("out");  // where reports go does not change them
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx",
                  static_cast<unsigned long long>(fnv1a(r.cfg.dump())));
    r.hash = hex;
    r.log = &out;
    std::error_code ec;
    fs::create_directories(r.out_dir, ec);
    require(!ec && fs::is_directory(r.out_dir), ErrorKind::Io,
            "cannot create output directory " + r.out_dir.string());
    handlers().at(command)(r);

    json manifest = r.stamp();
    manifest["config"] = r.cfg;
    json files = json::array();
    for (const auto& name : r.written) {
      const std::string bytes = read_text(r.out_dir / name);
      char h[17];
      std::snprintf(h, sizeof h, "%016llx", static_cast<unsigned long long>(fnv1a(bytes)));
      files.push_back({{"name", name}, {"bytes", bytes.size()}, {"fnv1a", h}});
    }
    manifest["files"] = files;
    r.written.clear();
    r.write(command + ".manifest.json", manifest.dump(2) + "\n");
    return kExitOk;
  } catch (const Error& e) {
    const int status = exit_code(e.kind());
    report_error(err, to_string(e.kind()), status, e.what());
    return status;
  } catch (const std::exception& e) {
    report_error(err, "internal", kExitInternal, e.what());
    return kExitInternal;
  }
}

}  // namespace addcomp::cli
