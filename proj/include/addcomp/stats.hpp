#pragma once

// Spearman correlation, power-law tail fitting and the index-1 chi-square
// test on probability ratios.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "addcomp/corpus.hpp"
#include "addcomp/vectors.hpp"

namespace addcomp {

// Regularized incomplete beta I_x(a, b).
double incomplete_beta(double a, double b, double x);
// Regularized upper incomplete gamma Q(a, x).
double incomplete_gamma_upper(double a, double x);

double chi2_upper_tail(double x, double dof);
double student_t_two_sided(double t, double dof);

// 1-based ranks; ties share their mean rank.
std::vector<double> average_ranks(std::span<const double> x);

struct CorrelationResult {
  double rho = 0.0;
  std::size_t n = 0;
  double t_statistic = 0.0;
  double p_value = 1.0;  // two-sided, n - 2 dof
};

// Throws Statistics when either series is constant.
CorrelationResult spearman_rho(std::span<const double> xs, std::span<const double> ys);

struct PowerLawFit {
  double alpha = 0.0;  // P(X > x | X >= m) = (m / x)^alpha
  double m = 0.0;
  double ks = 0.0;
  std::size_t n_tail = 0;
};

// Tail fit with m fixed.
PowerLawFit fit_power_law_at(std::span<const double> sample, double m);
// Scans candidate m and keeps the fit with the smallest KS distance. When the
// sample has more than `max_candidates` distinct values, candidates are taken
// at evenly spaced ranks of the sorted distinct values.
PowerLawFit fit_power_law(std::span<const double> sample, std::size_t max_candidates = 2000);

inline constexpr double kChisqPass = 1e-4;

struct ChisqResult {
  double m_star = 0.0;
  double chi2 = 0.0;
  int dof = 3;
  double p_value = 1.0;
  bool passed = false;  // p_value >= kChisqPass
};

// Category probabilities [1 - m/16, m/32, m/64, m/128, m/128].
std::array<double, 5> index1_model(double m);
// Counts of X < 2^4, [2^4, 2^5), [2^5, 2^6), [2^6, 2^7), X >= 2^7.
std::array<std::uint64_t, 5> ratio_categories(std::span<const double> ratios);
ChisqResult chisq_index1_test(const std::array<std::uint64_t, 5>& counts);

// p^T_i / p_i over all context dimensions, with p_i the vocabulary
// probability of the context word.
std::vector<double> probability_ratios(const CoocTable& cooc, const TargetKey& key);

enum class PairKind {
  WordDimensions,    // p^T_i vs p^T_j over word targets
  PhraseDimensions,  // p^T_i vs p^T_j over phrase targets
  ExclusionPair,     // p^{s/t\s}_i vs p^{t/s\t}_i over bigrams
  ExclusionPhrase,   // p^{s/t\s}_i vs p^{{st}}_i over bigrams
};

const char* pair_kind_name(PairKind kind);
PairKind parse_pair_kind(std::string_view name);

struct IndependenceReport {
  PairKind kind = PairKind::WordDimensions;
  std::vector<double> rhos;
  std::size_t skipped = 0;  // sampled pairs where a series was constant
  std::vector<HistogramBin> histogram;  // 0.05-wide bins over [-1, 1]
};

// Samples `n_pairs` dimension pairs (or single dimensions for the exclusion
// kinds) and correlates the two series across targets. Throws Statistics when
// fewer than three targets qualify or every sampled pair is constant.
IndependenceReport independence_report(const CoocTable& cooc, PairKind kind,
                                       std::size_t n_pairs, std::uint64_t seed);

}  // namespace addcomp
