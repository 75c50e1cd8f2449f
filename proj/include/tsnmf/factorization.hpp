#pragma once

// Topic-supervised NMF: minimize ||V - (W o L) H||_F^2 over W, H >= 0, where
// the binary mask L forbids topic j in document i wherever L(i, j) = 0.
//
// Fitted by alternating multiplicative updates (H first, then W using the new
// H). The error-weighted variant scales each document's residual by a
// row-constant weight.

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tsnmf/errors.hpp"
#include "tsnmf/matrix.hpp"
#include "tsnmf/random.hpp"
#include "tsnmf/supervision.hpp"

namespace tsnmf {

struct FactorModel {
  DenseMatrix W;  // n x d document-topic weights
  DenseMatrix H;  // d x t topic-term weights

  friend bool operator==(const FactorModel&, const FactorModel&) = default;
};

struct FitConfig {
  std::size_t topics = 0;
  std::size_t max_iter = 200;
  double rel_tol = 1e-4;
  double epsilon = 1e-9;
  std::uint64_t seed = 0;
  bool weighted = false;
  std::size_t acol_q = 5;

  void validate() const {
    if (topics < 1) throw std::invalid_argument("topic count must be >= 1");
    if (max_iter < 1) throw std::invalid_argument("max_iter must be >= 1");
    if (!(rel_tol > 0.0)) throw std::invalid_argument("rel_tol must be > 0");
    if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be > 0");
    if (acol_q < 1) throw std::invalid_argument("acol_q must be >= 1");
  }
};

enum class StopReason { converged, max_iter };

inline const char* to_string(StopReason r) {
  return r == StopReason::converged ? "converged" : "max_iter";
}

struct FitTrace {
  /// loss[0] is the initial loss, loss[k] the loss after the k-th (H, W) update pair.
  std::vector<double> loss;
  std::size_t iterations = 0;
  StopReason stop = StopReason::max_iter;

  double final_loss() const { return loss.empty() ? 0.0 : loss.back(); }
};

/// Numerical failure during fit, with the trace recorded up to the failure.
class FitFailure : public NumericalFailure {
 public:
  FitFailure(const NumericalFailure& cause, FitTrace trace)
      : NumericalFailure(cause), trace_(std::move(trace)) {}
  const FitTrace& trace() const noexcept { return trace_; }

 private:
  FitTrace trace_;
};

struct FitResult {
  FactorModel model;
  FitTrace trace;
};

namespace detail {

inline void check_shapes(const DenseMatrix& V, const DenseMatrix& W, const DenseMatrix& H,
                         const DenseMatrix& L, const char* op) {
  if (!W.same_shape(L) || V.rows() != W.rows() || W.cols() != H.rows() ||
      H.cols() != V.cols()) {
    throw DimensionError(std::string(op) + ": nonconforming shapes V " + V.shape() + ", W " +
                         W.shape() + ", H " + H.shape() + ", L " + L.shape());
  }
}

inline void check_weights(const DenseMatrix& V, std::span<const double> e, const char* op) {
  if (e.size() != V.rows()) {
    throw DimensionError(std::string(op) + ": " + std::to_string(e.size()) +
                         " error weights for " + std::to_string(V.rows()) + " documents");
  }
}

/// Σ_i weight(e_i) Σ_j r_ij^2 with r = V - (W o L) H, accumulated row by row.
template <class RowTerm>
double residual_sum(const DenseMatrix& V, const DenseMatrix& W, const DenseMatrix& H,
                    const DenseMatrix& L, RowTerm&& term) {
  const auto masked = hadamard(W, L);
  std::vector<double> approx(V.cols());
  double total = 0.0;
  for (std::size_t i = 0; i < V.rows(); ++i) {
    std::fill(approx.begin(), approx.end(), 0.0);
    for (std::size_t r = 0; r < masked.cols(); ++r) {
      const double a = masked(i, r);
      if (a == 0.0) continue;
      auto h = H.row(r);
      for (std::size_t j = 0; j < approx.size(); ++j) approx[j] += a * h[j];
    }
    auto v = V.row(i);
    for (std::size_t j = 0; j < approx.size(); ++j) total += term(i, v[j] - approx[j]);
  }
  return total;
}

inline void require_finite(const DenseMatrix& m, const char* op, std::size_t iteration) {
  if (!all_finite(m)) throw NumericalFailure(std::string(op) + " produced non-finite values", iteration);
}

/// Shared H kernel. With row weights e, the numerator is (e o A)^T V and the
/// denominator ((e o A)^T A) H, where A = W o L; unit weights reproduce the
/// unweighted rule exactly because 1 * x == x.
inline DenseMatrix update_h_kernel(const DenseMatrix& V, const DenseMatrix& W,
                                   const DenseMatrix& H, const DenseMatrix& L,
                                   std::span<const double> e, double epsilon,
                                   std::size_t iteration, const char* op) {
  const auto masked = hadamard(W, L);
  DenseMatrix scaled = masked;
  if (!e.empty()) {
    for (std::size_t i = 0; i < scaled.rows(); ++i)
      for (double& x : scaled.row(i)) x = e[i] * x;
  }
  const auto numer = matmul_tn(scaled, V);
  const auto gram = matmul_tn(scaled, masked);
  const auto denom = matmul(gram, H);
  DenseMatrix out(H.rows(), H.cols());
  auto h = H.values();
  auto num = numer.values();
  auto den = denom.values();
  auto o = out.values();
  for (std::size_t k = 0; k < o.size(); ++k) o[k] = h[k] * (num[k] / (den[k] + epsilon));
  require_finite(out, op, iteration);
  return out;
}

/// Shared W kernel. Numerator e_i [V H^T]_ir, denominator e_i [A (H H^T)]_ir,
/// both restricted to L = 1; entries with L = 0 are assigned 0.
inline DenseMatrix update_w_kernel(const DenseMatrix& V, const DenseMatrix& W,
                                   const DenseMatrix& H, const DenseMatrix& L,
                                   std::span<const double> e, double epsilon,
                                   std::size_t iteration, const char* op) {
  const auto masked = hadamard(W, L);
  const auto numer = matmul_nt(V, H);
  const auto hht = matmul_nt(H, H);
  const auto denom = matmul(masked, hht);
  DenseMatrix out(W.rows(), W.cols());
  for (std::size_t i = 0; i < W.rows(); ++i) {
    const double ei = e.empty() ? 1.0 : e[i];
    for (std::size_t r = 0; r < W.cols(); ++r) {
      if (L(i, r) == 0.0) continue;
      double num = numer(i, r);
      double den = denom(i, r);
      if (!e.empty()) {
        num = ei * num;
        den = ei * den;
      }
      out(i, r) = W(i, r) * (num / (den + epsilon));
    }
  }
  require_finite(out, op, iteration);
  return out;
}

}  // namespace detail

/// ||V - (W o L) H||_F^2
inline double loss_ts(const DenseMatrix& V, const DenseMatrix& W, const DenseMatrix& H,
                      const DenseMatrix& L) {
  detail::check_shapes(V, W, H, L, "loss_ts");
  return detail::residual_sum(V, W, H, L, [](std::size_t, double r) { return r * r; });
}

/// ||(V - (W o L) H) o E||_F^2 with E the row weights broadcast across terms.
inline double loss_tsw(const DenseMatrix& V, const DenseMatrix& W, const DenseMatrix& H,
                       const DenseMatrix& L, const ErrorWeights& E) {
  detail::check_shapes(V, W, H, L, "loss_tsw");
  detail::check_weights(V, E.row_weight, "loss_tsw");
  const auto& e = E.row_weight;
  return detail::residual_sum(V, W, H, L, [&](std::size_t i, double r) {
    const double x = r * e[i];
    return x * x;
  });
}

/// Σ_ij E_ij (V - (W o L) H)_ij^2, the objective the weighted multiplicative
/// updates actually descend (E enters them linearly, not squared). Equals
/// loss_tsw evaluated with sqrt(E).
inline double weighted_sq_error(const DenseMatrix& V, const DenseMatrix& W, const DenseMatrix& H,
                                const DenseMatrix& L, const ErrorWeights& E) {
  detail::check_shapes(V, W, H, L, "weighted_sq_error");
  detail::check_weights(V, E.row_weight, "weighted_sq_error");
  const auto& e = E.row_weight;
  return detail::residual_sum(V, W, H, L,
                              [&](std::size_t i, double r) { return e[i] * (r * r); });
}

/// H' = H o [(W o L)^T V] / ([(W o L)^T (W o L) H] + epsilon)
inline DenseMatrix update_h(const DenseMatrix& V, const DenseMatrix& W, const DenseMatrix& H,
                            const DenseMatrix& L, double epsilon, std::size_t iteration = 0) {
  detail::check_shapes(V, W, H, L, "update_h");
  return detail::update_h_kernel(V, W, H, L, {}, epsilon, iteration, "update_h");
}

/// W' = W o [(V H^T) o L] / ([((W o L) H H^T) o L] + epsilon), with W' = 0 where L = 0.
inline DenseMatrix update_w(const DenseMatrix& V, const DenseMatrix& W, const DenseMatrix& H,
                            const DenseMatrix& L, double epsilon, std::size_t iteration = 0) {
  detail::check_shapes(V, W, H, L, "update_w");
  return detail::update_w_kernel(V, W, H, L, {}, epsilon, iteration, "update_w");
}

/// H' = H o [(W o L)^T (V o E)] / ([(W o L)^T ((W o L) H o E)] + epsilon)
inline DenseMatrix update_h_weighted(const DenseMatrix& V, const DenseMatrix& W,
                                     const DenseMatrix& H, const DenseMatrix& L,
                                     const ErrorWeights& E, double epsilon,
                                     std::size_t iteration = 0) {
  detail::check_shapes(V, W, H, L, "update_h_weighted");
  detail::check_weights(V, E.row_weight, "update_h_weighted");
  return detail::update_h_kernel(V, W, H, L, E.row_weight, epsilon, iteration,
                                 "update_h_weighted");
}

/// W' = W o [((V o E) H^T) o L] / ([((((W o L) H) o E) H^T) o L] + epsilon), W' = 0 where L = 0.
inline DenseMatrix update_w_weighted(const DenseMatrix& V, const DenseMatrix& W,
                                     const DenseMatrix& H, const DenseMatrix& L,
                                     const ErrorWeights& E, double epsilon,
                                     std::size_t iteration = 0) {
  detail::check_shapes(V, W, H, L, "update_w_weighted");
  detail::check_weights(V, E.row_weight, "update_w_weighted");
  return detail::update_w_kernel(V, W, H, L, E.row_weight, epsilon, iteration,
                                 "update_w_weighted");
}

/// Random Acol for H (each topic row is the mean of acol_q randomly chosen
/// document rows of V) and Uniform(0, 1) for W, zeroed where L = 0.
inline FactorModel init_model(const DenseMatrix& V, const DenseMatrix& L, const FitConfig& config) {
  config.validate();
  const std::size_t n = V.rows();
  const std::size_t t = V.cols();
  const std::size_t d = config.topics;
  if (L.rows() != n || L.cols() != d) {
    throw DimensionError("init_model: mask " + L.shape() + " does not match " +
                         DenseMatrix::shape_string(n, d));
  }
  if (n == 0) throw DimensionError("init_model: V has no rows");
  if (!is_nonnegative(V)) throw std::invalid_argument("init_model: V has negative entries");

  Rng rng(config.seed);
  DenseMatrix H(d, t);
  for (std::size_t r = 0; r < d; ++r) {
    std::vector<std::size_t> picks;
    if (config.acol_q <= n) {
      picks = rng.sample_without_replacement(n, config.acol_q);
    } else {
      for (std::size_t k = 0; k < config.acol_q; ++k) picks.push_back(rng.below(n));
    }
    auto dst = H.row(r);
    for (std::size_t i : picks) {
      auto src = V.row(i);
      for (std::size_t j = 0; j < t; ++j) dst[j] += src[j];
    }
    const double q = static_cast<double>(picks.size());
    for (double& x : dst) x /= q;
  }
  DenseMatrix W(n, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t r = 0; r < d; ++r) {
      const double u = rng.uniform();
      W(i, r) = L(i, r) == 0.0 ? 0.0 : u;
    }
  return {std::move(W), std::move(H)};
}

/// Runs the alternating updates from `init` until the relative loss decrease
/// drops below rel_tol, the iterates stop changing, or max_iter is reached.
/// When `weights` is given the weighted rules are used and the trace records
/// weighted_sq_error; otherwise loss_ts.
inline FitResult fit_from(const DenseMatrix& V, const DenseMatrix& L, FactorModel init,
                          const FitConfig& config, const ErrorWeights* weights = nullptr) {
  config.validate();
  detail::check_shapes(V, init.W, init.H, L, "fit");
  if (weights) detail::check_weights(V, weights->row_weight, "fit");

  auto objective = [&](const FactorModel& m) {
    return weights ? weighted_sq_error(V, m.W, m.H, L, *weights) : loss_ts(V, m.W, m.H, L);
  };

  FitResult result{std::move(init), {}};
  auto& model = result.model;
  auto& trace = result.trace;
  double prev = objective(model);
  trace.loss.push_back(prev);
  try {
    for (std::size_t it = 1; it <= config.max_iter; ++it) {
      DenseMatrix H = weights ? update_h_weighted(V, model.W, model.H, L, *weights, config.epsilon, it)
                              : update_h(V, model.W, model.H, L, config.epsilon, it);
      DenseMatrix W = weights ? update_w_weighted(V, model.W, H, L, *weights, config.epsilon, it)
                              : update_w(V, model.W, H, L, config.epsilon, it);
      const bool unchanged = H == model.H && W == model.W;
      model.H = std::move(H);
      model.W = std::move(W);
      const double cur = objective(model);
      trace.loss.push_back(cur);
      trace.iterations = it;
      if (!std::isfinite(cur)) throw NumericalFailure("loss became non-finite", it);
      if (unchanged || prev == 0.0 || (prev - cur) < config.rel_tol * prev) {
        trace.stop = StopReason::converged;
        break;
      }
      prev = cur;
    }
  } catch (const NumericalFailure& e) {
    throw FitFailure(e, trace);
  }
  return result;
}

/// Fit from init_model(V, L, config) with an explicit mask and optional weights.
/// With config.weighted unset the weights are ignored; with it set and no
/// weights supplied, unit weights are used.
inline FitResult fit(const DenseMatrix& V, const DenseMatrix& L, const FitConfig& config,
                     const std::optional<ErrorWeights>& weights = std::nullopt) {
  auto init = init_model(V, L, config);
  if (!config.weighted) return fit_from(V, L, std::move(init), config);
  const auto e = weights ? *weights : ErrorWeights::uniform(V.rows());
  return fit_from(V, L, std::move(init), config, &e);
}

/// Fit against a supervision mask; in weighted mode without explicit weights
/// the inverse-frequency weights are derived from the mask's supervised rows.
inline FitResult fit(const DenseMatrix& V, const SupervisionMask& mask, const FitConfig& config,
                     const std::optional<ErrorWeights>& weights = std::nullopt) {
  if (config.weighted && !weights) {
    return fit(V, mask.matrix, config, build_error_weights(V.rows(), mask.supervised_rows));
  }
  return fit(V, mask.matrix, config, weights);
}

}  // namespace tsnmf
