#pragma once

// Dimension reduction of natural vectors: randomized truncated SVD, SVD
// embeddings, the L2 / GloVe / SGNS entry losses and an SGD factorizer.

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "addcomp/vectors.hpp"

namespace addcomp {

struct SVDResult {
  Eigen::MatrixXd U;      // n x d, orthonormal columns
  Eigen::VectorXd sigma;  // d, non-increasing
  Eigen::MatrixXd V;      // m x d, orthonormal columns
};

struct SVDOptions {
  std::size_t oversample = 10;
  std::size_t power_iters = 2;
  std::uint64_t seed = 0;
};

SVDResult truncated_svd(const Eigen::MatrixXd& a, std::size_t d, const SVDOptions& options = {});

// Natural vectors as columns: dim x keys.size().
Eigen::MatrixXd natural_matrix(const VectorSpace& space, std::span<const TargetKey> keys);

struct Embedding {
  EmbeddingSet vectors;     // v^t = sqrt(sigma) * (row t of V), keyed like the columns
  Eigen::MatrixXd context;  // U * diag(sqrt(sigma)); context * v^t approximates column t
};

// `a` holds one target per column, named by `keys`.
Embedding embed(const Eigen::MatrixXd& a, const std::vector<std::string>& keys, std::size_t d,
                bool normalize, const SVDOptions& options = {});

enum class LossKind { L2, GloVe, SGNS };

const char* loss_kind_name(LossKind kind);
LossKind parse_loss_kind(std::string_view name);

struct LossSpec {
  LossKind kind = LossKind::L2;
  double x_max = 10.0;     // GloVe cutoff
  double exponent = 0.75;  // GloVe weight exponent
  double k = 1.0;          // SGNS noise samples per data point

  void validate() const;
};

// Per-entry data the weighted losses need.
struct EntryData {
  double count = 0.0;        // GloVe: C^t_i
  double p_target = 0.0;     // SGNS: p^t_i
  double p_noise = 0.0;      // SGNS: p^noise_i
  double occurrences = 1.0;  // SGNS: C(t)
};

double glove_weight(const LossSpec& spec, double count);

// Loss of approximating w by v. Throws Domain on non-finite input.
double loss_eval(const LossSpec& spec, double v, double w, const EntryData& entry = {});
// d loss / d v
double loss_grad(const LossSpec& spec, double v, double w, const EntryData& entry = {});

// Bregman divergence of phi(x) = (p + k q) ln(e^x + k q) at shifted arguments.
double sgns_bregman(double x, double y, double p_target, double p_noise, double k);
// e^x - e^y - e^y (x - y)
double exp_bregman(double x, double y);
// |D_phi,k(x, y) - D_exp(x, y)| for each k in `ks` (increasing).
std::vector<double> sgns_limit_check(double x, double y, double p_target, double p_noise,
                                     std::span<const double> ks);

struct FactorizeInput {
  Eigen::MatrixXd target;       // dims x targets, the values w^t_i to fit
  Eigen::MatrixXd counts;       // GloVe: same shape
  Eigen::MatrixXd p_target;     // SGNS: same shape
  Eigen::VectorXd p_noise;      // SGNS: one per dim, sums to 1
  Eigen::VectorXd occurrences;  // SGNS: one per target
  std::vector<std::string> keys;
};

struct SGDOptions {
  std::size_t epochs = 200;
  double learning_rate = 0.05;
  double decay = 0.0;  // rate at epoch e is learning_rate / (1 + decay * e)
  double init_scale = 0.1;
  std::uint64_t seed = 0;
};

struct FactorizeResult {
  EmbeddingSet vectors;          // v^t
  Eigen::MatrixXd context;       // dims x d, rows u_i
  std::vector<double> epoch_loss;  // total loss after each epoch
  double initial_loss = 0.0;
};

// Minimizes sum over entries of loss(u_i . v^t, w^t_i) by SGD over a fixed
// per-epoch shuffle. Throws Training when the loss exceeds 10x its initial value.
FactorizeResult sgd_factorize(const FactorizeInput& input, std::size_t d, const LossSpec& spec,
                              const SGDOptions& options = {});

}  // namespace addcomp
