#include "addcomp/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "addcomp/error.hpp"
#include "addcomp/rng.hpp"

namespace addcomp {

namespace {

constexpr int kMaxIterations = 500;
constexpr double kTiny = 1e-300;
constexpr double kEps = 1e-16;

// Continued fraction for I_x(a, b), modified Lentz.
double beta_fraction(double a, double b, double x) {
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  fail(ErrorKind::Statistics, "incomplete beta did not converge");
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  require(a > 0 && b > 0, ErrorKind::Domain, "incomplete beta needs a, b > 0");
  require(x >= 0 && x <= 1, ErrorKind::Domain, "incomplete beta needs x in [0, 1]");
  if (x == 0.0 || x == 1.0) return x;
  const double front = std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                                a * std::log(x) + b * std::log1p(-x));
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_fraction(a, b, x) / a;
  return 1.0 - front * beta_fraction(b, a, 1.0 - x) / b;
}

double incomplete_gamma_upper(double a, double x) {
  require(a > 0, ErrorKind::Domain, "incomplete gamma needs a > 0");
  require(x >= 0, ErrorKind::Domain, "incomplete gamma needs x >= 0");
  if (x == 0.0) return 1.0;
  const double log_front = -x + a * std::log(x) - std::lgamma(a);
  if (x < a + 1.0) {
    // Series for the lower function P.
    double ap = a, sum = 1.0 / a, del = sum;
    for (int n = 1; n <= kMaxIterations; ++n) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::fabs(del) < std::fabs(sum) * kEps) return 1.0 - sum * std::exp(log_front);
    }
    fail(ErrorKind::Statistics, "incomplete gamma series did not converge");
  }
  double b = x + 1.0 - a, c = 1.0 / kTiny, d = 1.0 / b, h = d;
  for (int i = 1; i <= kMaxIterations; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return std::exp(log_front) * h;
  }
  fail(ErrorKind::Statistics, "incomplete gamma fraction did not converge");
}

double chi2_upper_tail(double x, double dof) {
  require(dof > 0, ErrorKind::Domain, "chi-square needs dof > 0");
  if (x <= 0) return 1.0;
  return incomplete_gamma_upper(0.5 * dof, 0.5 * x);
}

double student_t_two_sided(double t, double dof) {
  require(dof > 0, ErrorKind::Domain, "t distribution needs dof > 0");
  if (std::isinf(t)) return 0.0;
  return incomplete_beta(0.5 * dof, 0.5, dof / (dof + t * t));
}

std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

CorrelationResult spearman_rho(std::span<const double> xs, std::span<const double> ys) {
  require(xs.size() == ys.size(), ErrorKind::Parameter, "series lengths differ");
  require(xs.size() >= 3, ErrorKind::Statistics, "correlation needs at least 3 points");
  const auto rx = average_ranks(xs);
  const auto ry = average_ranks(ys);
  const long double n = static_cast<long double>(xs.size());
  // Both rank vectors have mean (n + 1) / 2.
  const long double mean = (n + 1) / 2;
  long double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    const long double dx = rx[i] - mean, dy = ry[i] - mean;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  require(sxx > 0 && syy > 0, ErrorKind::Statistics, "correlation of a constant series");
  CorrelationResult r;
  r.n = xs.size();
  r.rho = std::clamp(static_cast<double>(sxy / std::sqrt(sxx * syy)), -1.0, 1.0);
  const double dof = static_cast<double>(r.n) - 2.0;
  if (std::fabs(r.rho) == 1.0) {
    r.t_statistic = std::copysign(std::numeric_limits<double>::infinity(), r.rho);
    r.p_value = 0.0;
  } else {
    r.t_statistic = r.rho * std::sqrt(dof / (1.0 - r.rho * r.rho));
    r.p_value = student_t_two_sided(r.t_statistic, dof);
  }
  return r;
}

namespace {

// `tail` sorted ascending, all >= m; `log_sum` is sum of ln x over the tail.
PowerLawFit fit_sorted_tail(std::span<const double> tail, double m, long double log_sum) {
  require(tail.size() >= 2, ErrorKind::Statistics, "fewer than 2 points in the tail");
  const long double k = static_cast<long double>(tail.size());
  const long double s = log_sum - k * std::log(static_cast<long double>(m));
  require(s > 0, ErrorKind::Statistics, "tail has no spread above m");
  PowerLawFit fit;
  fit.m = m;
  fit.n_tail = tail.size();
  fit.alpha = static_cast<double>(k / s);
  double ks = 0.0;
  for (std::size_t i = 0; i < tail.size();) {
    std::size_t j = i;
    while (j + 1 < tail.size() && tail[j + 1] == tail[i]) ++j;
    const double model = 1.0 - std::pow(m / tail[i], fit.alpha);
    const double before = static_cast<double>(i) / static_cast<double>(k);
    const double after = static_cast<double>(j + 1) / static_cast<double>(k);
    ks = std::max({ks, model - before, after - model});
    i = j + 1;
  }
  fit.ks = std::min(ks, 1.0);
  return fit;
}

std::vector<double> sorted_positive(std::span<const double> sample) {
  std::vector<double> x(sample.begin(), sample.end());
  for (double v : x) {
    require(v > 0 && std::isfinite(v), ErrorKind::Domain,
            "power-law samples must be positive and finite");
  }
  std::sort(x.begin(), x.end());
  return x;
}

}  // namespace

PowerLawFit fit_power_law_at(std::span<const double> sample, double m) {
  require(m > 0, ErrorKind::Domain, "power-law lower bound must be positive");
  const auto x = sorted_positive(sample);
  const auto first = std::lower_bound(x.begin(), x.end(), m);
  long double log_sum = 0;
  for (auto it = first; it != x.end(); ++it) log_sum += std::log(static_cast<long double>(*it));
  return fit_sorted_tail(std::span<const double>(&*first, static_cast<std::size_t>(x.end() - first)),
                         m, log_sum);
}

PowerLawFit fit_power_law(std::span<const double> sample, std::size_t max_candidates) {
  require(sample.size() >= 10, ErrorKind::Statistics, "power-law fit needs at least 10 points");
  require(max_candidates >= 1, ErrorKind::Parameter, "max_candidates must be >= 1");
  const auto x = sorted_positive(sample);
  const std::size_t n = x.size();
  std::vector<long double> suffix(n + 1, 0);
  for (std::size_t i = n; i-- > 0;) suffix[i] = suffix[i + 1] + std::log(static_cast<long double>(x[i]));

  // First index of each distinct value that leaves a tail with spread.
  std::vector<std::size_t> starts;
  for (std::size_t i = 0; i < n; ++i) {
    if ((i == 0 || x[i] != x[i - 1]) && x[i] != x[n - 1]) starts.push_back(i);
  }
  require(!starts.empty(), ErrorKind::Statistics, "fewer than 2 distinct values in the sample");
  std::vector<std::size_t> candidates;
  if (starts.size() <= max_candidates) {
    candidates = starts;
  } else if (max_candidates == 1) {
    candidates = {starts.front()};
  } else {
    for (std::size_t k = 0; k < max_candidates; ++k) {
      candidates.push_back(starts[k * (starts.size() - 1) / (max_candidates - 1)]);
    }
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  }

  std::optional<PowerLawFit> best;
  for (std::size_t start : candidates) {
    const std::span<const double> tail(x.data() + start, n - start);
    if (tail.size() < 2) continue;
    const auto fit = fit_sorted_tail(tail, x[start], suffix[start]);
    if (!best || fit.ks < best->ks) best = fit;
  }
  require(best.has_value(), ErrorKind::Statistics, "no candidate lower bound fits");
  return *best;
}

std::array<double, 5> index1_model(double m) {
  return {1.0 - m / 16.0, m / 32.0, m / 64.0, m / 128.0, m / 128.0};
}

std::array<std::uint64_t, 5> ratio_categories(std::span<const double> ratios) {
  std::array<std::uint64_t, 5> counts{};
  for (double x : ratios) {
    require(x >= 0 && !std::isnan(x), ErrorKind::Domain, "probability ratios must be >= 0");
    std::size_t k = 0;
    if (x >= 16.0) k = 1;
    if (x >= 32.0) k = 2;
    if (x >= 64.0) k = 3;
    if (x >= 128.0) k = 4;
    ++counts[k];
  }
  return counts;
}

namespace {

double chi2_statistic(const std::array<std::uint64_t, 5>& counts, double total, double m) {
  const auto p = index1_model(m);
  long double chi2 = 0;
  for (std::size_t k = 0; k < 5; ++k) {
    const long double expected = total * p[k];
    const long double diff = static_cast<long double>(counts[k]) - expected;
    chi2 += diff * diff / expected;
  }
  return static_cast<double>(chi2);
}

}  // namespace

ChisqResult chisq_index1_test(const std::array<std::uint64_t, 5>& counts) {
  const std::uint64_t total_count =
      std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
  require(total_count >= 50, ErrorKind::Parameter, "chi-square test needs a total count >= 50");
  const double total = static_cast<double>(total_count);
  constexpr double lo = 1.0 / 16.0, hi = 0.5;
  constexpr int grid = 1024;
  auto at = [&](int i) { return lo + (hi - lo) * i / (grid - 1); };
  int best = 0;
  double best_chi2 = chi2_statistic(counts, total, lo);
  for (int i = 1; i < grid; ++i) {
    const double v = chi2_statistic(counts, total, at(i));
    if (v < best_chi2) best = i, best_chi2 = v;
  }
  // Golden-section search in the neighbouring grid cells.
  double a = at(std::max(best - 1, 0)), b = at(std::min(best + 1, grid - 1));
  const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - ratio * (b - a), d = a + ratio * (b - a);
  double fc = chi2_statistic(counts, total, c), fd = chi2_statistic(counts, total, d);
  for (int it = 0; it < 100 && b - a > 1e-15; ++it) {
    if (fc < fd) {
      b = d, d = c, fd = fc;
      c = b - ratio * (b - a);
      fc = chi2_statistic(counts, total, c);
    } else {
      a = c, c = d, fc = fd;
      d = a + ratio * (b - a);
      fd = chi2_statistic(counts, total, d);
    }
  }
  ChisqResult r;
  r.m_star = at(best);
  r.chi2 = best_chi2;
  const double mid = 0.5 * (a + b);
  const double fmid = chi2_statistic(counts, total, mid);
  if (fmid < r.chi2) r.m_star = mid, r.chi2 = fmid;
  r.chi2 = std::max(r.chi2, 0.0);
  r.p_value = std::clamp(chi2_upper_tail(r.chi2, r.dof), 0.0, 1.0);
  r.passed = r.p_value >= kChisqPass;
  return r;
}

std::vector<double> probability_ratios(const CoocTable& cooc, const TargetKey& key) {
  const auto& counts = cooc.counts(key);
  require(counts.total > 0, ErrorKind::Domain, "target has no context counts");
  const std::size_t n = cooc.context_size();
  const bool nearfar = cooc.config().nearfar;
  std::vector<double> ratios(n, 0.0);
  for (const auto& [i, c] : counts.entries) {
    const WordId word = nearfar ? i / 2 : i;
    const double p = static_cast<double>(c) / static_cast<double>(counts.total);
    ratios[i] = p / cooc.vocab().probability(word);
  }
  return ratios;
}

const char* pair_kind_name(PairKind kind) {
  switch (kind) {
    case PairKind::WordDimensions: return "word-dimensions";
    case PairKind::PhraseDimensions: return "phrase-dimensions";
    case PairKind::ExclusionPair: return "exclusion-pair";
    case PairKind::ExclusionPhrase: return "exclusion-phrase";
  }
  return "?";
}

PairKind parse_pair_kind(std::string_view name) {
  for (auto k : {PairKind::WordDimensions, PairKind::PhraseDimensions, PairKind::ExclusionPair,
                 PairKind::ExclusionPhrase}) {
    if (name == pair_kind_name(k)) return k;
  }
  fail(ErrorKind::Config, "unknown pair kind: " + std::string(name));
}

namespace {

double probability_at(const SparseCounts& counts, std::uint32_t i) {
  return counts.total == 0 ? 0.0
                           : static_cast<double>(counts.at(i)) / static_cast<double>(counts.total);
}

}  // namespace

IndependenceReport independence_report(const CoocTable& cooc, PairKind kind,
                                       std::size_t n_pairs, std::uint64_t seed) {
  require(n_pairs >= 1, ErrorKind::Parameter, "n_pairs must be >= 1");
  const bool nearfar = cooc.config().nearfar;
  // Each entry is one point of the two correlated series.
  std::vector<std::pair<const SparseCounts*, const SparseCounts*>> rows;
  switch (kind) {
    case PairKind::WordDimensions:
    case PairKind::PhraseDimensions: {
      const TargetKind tk = kind == PairKind::WordDimensions
                                ? (nearfar ? TargetKind::NearfarLeft : TargetKind::Unigram)
                                : (nearfar ? TargetKind::OrderedBigram : TargetKind::UnorderedBigram);
      for (const auto& key : cooc.keys_of(tk)) {
        const auto* c = &cooc.counts(key);
        rows.emplace_back(c, c);
      }
      break;
    }
    case PairKind::ExclusionPair:
    case PairKind::ExclusionPhrase: {
      require(!nearfar, ErrorKind::Parameter, "exclusion pairs need an ordinary table");
      for (const auto& key : cooc.keys_of(TargetKind::UnorderedBigram)) {
        const WordId s = key.first, t = key.second;
        if (s == t) continue;
        const auto x_st = TargetKey::exclusion(s, t), x_ts = TargetKey::exclusion(t, s);
        if (!cooc.contains(x_st) || !cooc.contains(x_ts)) continue;
        rows.emplace_back(&cooc.counts(x_st), kind == PairKind::ExclusionPair
                                                  ? &cooc.counts(x_ts)
                                                  : &cooc.counts(key));
      }
      break;
    }
  }
  require(rows.size() >= 3, ErrorKind::Statistics,
          std::string("too few targets for ") + pair_kind_name(kind));
  const std::size_t n = cooc.context_size();
  const bool two_dims = kind == PairKind::WordDimensions || kind == PairKind::PhraseDimensions;
  require(!two_dims || n >= 2, ErrorKind::Statistics, "need at least two context dimensions");

  IndependenceReport report;
  report.kind = kind;
  Rng root(seed);
  std::vector<double> xs(rows.size()), ys(rows.size());
  for (std::size_t k = 0; k < n_pairs; ++k) {
    Rng rng = root.split("pair", k);
    const auto i = static_cast<std::uint32_t>(rng.below(n));
    std::uint32_t j = i;
    if (two_dims) {
      j = static_cast<std::uint32_t>(rng.below(n - 1));
      if (j >= i) ++j;
    }
    for (std::size_t r = 0; r < rows.size(); ++r) {
      xs[r] = probability_at(*rows[r].first, i);
      ys[r] = probability_at(*rows[r].second, j);
    }
    const bool constant_x = std::all_of(xs.begin(), xs.end(), [&](double v) { return v == xs[0]; });
    const bool constant_y = std::all_of(ys.begin(), ys.end(), [&](double v) { return v == ys[0]; });
    if (constant_x || constant_y) {
      ++report.skipped;
      continue;
    }
    report.rhos.push_back(spearman_rho(xs, ys).rho);
  }
  require(!report.rhos.empty(), ErrorKind::Statistics, "every sampled series was constant");
  report.histogram = histogram(report.rhos, -1.0, 1.0, 40);
  return report;
}

}  // namespace addcomp
