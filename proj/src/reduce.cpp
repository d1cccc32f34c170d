#include "addcomp/reduce.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "addcomp/error.hpp"
#include "addcomp/rng.hpp"

namespace addcomp {

namespace {

Eigen::MatrixXd orthonormal_basis(const Eigen::MatrixXd& y) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(y);
  return qr.householderQ() * Eigen::MatrixXd::Identity(y.rows(), y.cols());
}

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

SVDResult truncated_svd(const Eigen::MatrixXd& a, std::size_t d, const SVDOptions& options) {
  const auto n = static_cast<std::size_t>(a.rows()), m = static_cast<std::size_t>(a.cols());
  require(d >= 1 && d <= std::min(n, m), ErrorKind::Parameter,
          "rank d must lie in [1, min(rows, cols)]");
  require(a.allFinite(), ErrorKind::Domain, "matrix has non-finite entries");
  const auto l = static_cast<Eigen::Index>(std::min(d + options.oversample, std::min(n, m)));

  Rng rng = Rng(options.seed).split("svd-projection");
  Eigen::MatrixXd omega(a.cols(), l);
  for (Eigen::Index c = 0; c < omega.cols(); ++c) {
    for (Eigen::Index r = 0; r < omega.rows(); ++r) omega(r, c) = rng.normal();
  }
  Eigen::MatrixXd q = orthonormal_basis(a * omega);
  for (std::size_t it = 0; it < options.power_iters; ++it) {
    const Eigen::MatrixXd z = orthonormal_basis(a.transpose() * q);
    q = orthonormal_basis(a * z);
  }
  const Eigen::MatrixXd b = q.transpose() * a;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(b, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto k = static_cast<Eigen::Index>(d);
  SVDResult out;
  out.U = q * svd.matrixU().leftCols(k);
  out.sigma = svd.singularValues().head(k);
  out.V = svd.matrixV().leftCols(k);
  return out;
}

Eigen::MatrixXd natural_matrix(const VectorSpace& space, std::span<const TargetKey> keys) {
  Eigen::MatrixXd a(static_cast<Eigen::Index>(space.dim()), static_cast<Eigen::Index>(keys.size()));
  for (std::size_t t = 0; t < keys.size(); ++t) {
    const auto w = space.vector(keys[t]);
    a.col(static_cast<Eigen::Index>(t)) = Eigen::Map<const Eigen::VectorXd>(w.data(), a.rows());
  }
  return a;
}

Embedding embed(const Eigen::MatrixXd& a, const std::vector<std::string>& keys, std::size_t d,
                bool normalize, const SVDOptions& options) {
  require(keys.size() == static_cast<std::size_t>(a.cols()), ErrorKind::Parameter,
          "one key per matrix column is required");
  const SVDResult svd = truncated_svd(a, d, options);
  const Eigen::VectorXd root = svd.sigma.cwiseSqrt();
  Embedding out;
  out.context = svd.U * root.asDiagonal();
  out.vectors = EmbeddingSet(d);
  std::vector<double> row(d);
  for (std::size_t t = 0; t < keys.size(); ++t) {
    for (std::size_t j = 0; j < d; ++j) {
      row[j] = root(static_cast<Eigen::Index>(j)) *
               svd.V(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j));
    }
    out.vectors.add(keys[t], row);
  }
  if (normalize) out.vectors.normalize();
  return out;
}

const char* loss_kind_name(LossKind kind) {
  switch (kind) {
    case LossKind::L2: return "l2";
    case LossKind::GloVe: return "glove";
    case LossKind::SGNS: return "sgns";
  }
  return "?";
}

LossKind parse_loss_kind(std::string_view name) {
  for (auto k : {LossKind::L2, LossKind::GloVe, LossKind::SGNS}) {
    if (name == loss_kind_name(k)) return k;
  }
  fail(ErrorKind::Config, "unknown loss kind: " + std::string(name));
}

void LossSpec::validate() const {
  require(x_max > 0 && std::isfinite(x_max), ErrorKind::Parameter, "x_max must be positive");
  require(exponent > 0 && std::isfinite(exponent), ErrorKind::Parameter,
          "GloVe exponent must be positive");
  require(k >= 1 && std::isfinite(k), ErrorKind::Parameter, "k must be >= 1");
}

double glove_weight(const LossSpec& spec, double count) {
  require(count >= 0 && std::isfinite(count), ErrorKind::Domain,
          "GloVe weight needs a finite count >= 0");
  return std::min(std::pow(count / spec.x_max, spec.exponent), 1.0);
}

namespace {

void check_entry(const LossSpec& spec, double v, double w, const EntryData& e) {
  require(std::isfinite(v) && std::isfinite(w), ErrorKind::Domain, "loss inputs must be finite");
  if (spec.kind == LossKind::SGNS) {
    require(e.p_noise > 0 && e.p_noise <= 1, ErrorKind::Domain, "noise probability must lie in (0, 1]");
    require(e.p_target >= 0 && e.p_target <= 1, ErrorKind::Domain,
            "target probability must lie in [0, 1]");
    require(e.occurrences >= 0 && std::isfinite(e.occurrences), ErrorKind::Domain,
            "occurrence count must be finite and >= 0");
  }
}

}  // namespace

double loss_eval(const LossSpec& spec, double v, double w, const EntryData& e) {
  check_entry(spec, v, w, e);
  switch (spec.kind) {
    case LossKind::L2: return (v - w) * (v - w);
    case LossKind::GloVe: return glove_weight(spec, e.count) * (v - w) * (v - w);
    case LossKind::SGNS: {
      // C(t) D_phi(v + ln kq, w + ln kq); the shift cancels inside softplus.
      const double a = e.p_target + spec.k * e.p_noise;
      const double d = softplus(v) - softplus(w) - sigmoid(w) * (v - w);
      return e.occurrences * a * std::max(d, 0.0);
    }
  }
  return 0.0;
}

double loss_grad(const LossSpec& spec, double v, double w, const EntryData& e) {
  check_entry(spec, v, w, e);
  switch (spec.kind) {
    case LossKind::L2: return 2.0 * (v - w);
    case LossKind::GloVe: return 2.0 * glove_weight(spec, e.count) * (v - w);
    case LossKind::SGNS:
      return e.occurrences * (e.p_target + spec.k * e.p_noise) * (sigmoid(v) - sigmoid(w));
  }
  return 0.0;
}

double sgns_bregman(double x, double y, double p_target, double p_noise, double k) {
  const double c = k * p_noise;
  require(c > 0 && p_target >= 0, ErrorKind::Domain, "SGNS Bregman needs k q > 0 and p >= 0");
  const double s = std::log(c);
  const double a = p_target + c;
  // phi(x) = a (ln c + softplus(x - s)), phi'(y) = a sigmoid(y - s)
  return a * (softplus(x - s) - softplus(y - s) - sigmoid(y - s) * (x - y));
}

double exp_bregman(double x, double y) {
  return std::exp(x) - std::exp(y) - std::exp(y) * (x - y);
}

std::vector<double> sgns_limit_check(double x, double y, double p_target, double p_noise,
                                     std::span<const double> ks) {
  std::vector<double> gaps;
  const double limit = exp_bregman(x, y);
  for (std::size_t i = 0; i < ks.size(); ++i) {
    require(i == 0 || ks[i] > ks[i - 1], ErrorKind::Parameter, "k values must increase");
    gaps.push_back(std::fabs(sgns_bregman(x, y, p_target, p_noise, ks[i]) - limit));
  }
  return gaps;
}

namespace {

struct EntryLoss {
  double loss, grad;
};

// SGNS entries with p^t_i = 0 have w = -inf; the loss tends to C kq softplus(v).
EntryLoss entry_loss(const LossSpec& spec, const FactorizeInput& in, Eigen::Index i,
                     Eigen::Index t, double v) {
  EntryData e;
  const double w = in.target(i, t);
  switch (spec.kind) {
    case LossKind::L2: break;
    case LossKind::GloVe: e.count = in.counts(i, t); break;
    case LossKind::SGNS:
      e.p_target = in.p_target(i, t);
      e.p_noise = in.p_noise(i);
      e.occurrences = in.occurrences(t);
      if (e.p_target == 0.0 && w == -std::numeric_limits<double>::infinity()) {
        const double a = e.occurrences * spec.k * e.p_noise;
        return {a * softplus(v), a * sigmoid(v)};
      }
      break;
  }
  return {loss_eval(spec, v, w, e), loss_grad(spec, v, w, e)};
}

void check_input(const FactorizeInput& in, const LossSpec& spec, std::size_t d) {
  const auto n = in.target.rows(), m = in.target.cols();
  require(d >= 1 && d <= static_cast<std::size_t>(std::min(n, m)), ErrorKind::Parameter,
          "rank d must lie in [1, min(dims, targets)]");
  require(in.keys.size() == static_cast<std::size_t>(m), ErrorKind::Parameter,
          "one key per target column is required");
  if (spec.kind == LossKind::GloVe) {
    require(in.counts.rows() == n && in.counts.cols() == m, ErrorKind::Parameter,
            "GloVe needs a count matrix shaped like the target");
  }
  if (spec.kind == LossKind::SGNS) {
    require(in.p_target.rows() == n && in.p_target.cols() == m, ErrorKind::Parameter,
            "SGNS needs a probability matrix shaped like the target");
    require(in.p_noise.size() == n && in.occurrences.size() == m, ErrorKind::Parameter,
            "SGNS needs one noise probability per dim and one count per target");
    require(std::fabs(in.p_noise.sum() - 1.0) <= 1e-9 && in.p_noise.minCoeff() > 0,
            ErrorKind::Parameter, "noise probabilities must be positive and sum to 1");
  }
}

}  // namespace

FactorizeResult sgd_factorize(const FactorizeInput& in, std::size_t d, const LossSpec& spec,
                              const SGDOptions& options) {
  spec.validate();
  check_input(in, spec, d);
  require(options.epochs >= 1, ErrorKind::Parameter, "epochs must be >= 1");
  require(options.learning_rate > 0 && options.decay >= 0, ErrorKind::Parameter,
          "learning rate must be positive and decay non-negative");
  const auto n = in.target.rows(), m = in.target.cols();
  const auto dd = static_cast<Eigen::Index>(d);

  Rng init = Rng(options.seed).split("sgd-init");
  Eigen::MatrixXd u(n, dd), v(m, dd);
  const double scale = options.init_scale / std::sqrt(static_cast<double>(d));
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < dd; ++c) u(r, c) = scale * init.normal();
  for (Eigen::Index r = 0; r < m; ++r)
    for (Eigen::Index c = 0; c < dd; ++c) v(r, c) = scale * init.normal();

  auto total_loss = [&] {
    long double sum = 0;
    for (Eigen::Index t = 0; t < m; ++t)
      for (Eigen::Index i = 0; i < n; ++i) sum += entry_loss(spec, in, i, t, u.row(i).dot(v.row(t))).loss;
    return static_cast<double>(sum);
  };

  FactorizeResult out;
  out.initial_loss = total_loss();
  std::vector<std::uint64_t> order(static_cast<std::size_t>(n * m));
  std::iota(order.begin(), order.end(), 0);
  Rng shuffle = Rng(options.seed).split("sgd-shuffle");
  Eigen::RowVectorXd ui(dd);
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    for (std::size_t k = order.size(); k > 1; --k) std::swap(order[k - 1], order[shuffle.below(k)]);
    const double lr = options.learning_rate / (1.0 + options.decay * static_cast<double>(epoch));
    for (std::uint64_t e : order) {
      const auto i = static_cast<Eigen::Index>(e % static_cast<std::uint64_t>(n));
      const auto t = static_cast<Eigen::Index>(e / static_cast<std::uint64_t>(n));
      const double g = entry_loss(spec, in, i, t, u.row(i).dot(v.row(t))).grad;
      ui = u.row(i);
      u.row(i) -= lr * g * v.row(t);
      v.row(t) -= lr * g * ui;
    }
    const double loss = total_loss();
    out.epoch_loss.push_back(loss);
    if (!std::isfinite(loss) || loss > 10.0 * out.initial_loss) {
      fail(ErrorKind::Training, "training diverged at epoch " + std::to_string(epoch + 1) +
                                    ": loss " + format_real(loss) + " vs initial " +
                                    format_real(out.initial_loss));
    }
  }
  out.context = u;
  out.vectors = EmbeddingSet(d);
  std::vector<double> row(d);
  for (Eigen::Index t = 0; t < m; ++t) {
    for (Eigen::Index j = 0; j < dd; ++j) row[static_cast<std::size_t>(j)] = v(t, j);
    out.vectors.add(in.keys[static_cast<std::size_t>(t)], row);
  }
  return out;
}

}  // namespace addcomp
