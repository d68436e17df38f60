#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <json.hpp>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "trafficfc/series.hpp"

namespace trafficfc {

enum class KernelFamily { power_exponential, rational_quadratic, linear };

const char* kernel_family_name(KernelFamily f);
KernelFamily kernel_family_from_name(const std::string& name);  // throws config_error

/// Covariance function and its hyperparameters. Only the fields relevant to
/// the family are used:
///   power_exponential: v * exp(-w * ||x-x'||^2 / 2)        (v, w)
///   rational_quadratic: (1 + s * w * ||x-x'||^2)^(-a)      (s, w, a)
///   linear: sum_i weights[i] * x_i * x'_i                  (weights, one per input)
struct KernelSpec {
  KernelFamily family = KernelFamily::linear;
  double v = 1.0;
  double w = 1.0;
  double s = 1.0;
  double a = 1.0;
  std::vector<double> weights;

  /// Positivity and (for linear) dimension checks. Throws config_error.
  void validate(int input_dim) const;
};

double kernel_eval(const KernelSpec& kernel, std::span<const double> x, std::span<const double> y);

/// Negative log marginal likelihood of targets under the GP prior
/// mu + z(x) with observation noise sigma2:
///   0.5 r^T (K + sigma2 I)^-1 r + 0.5 log|K + sigma2 I| + n/2 log 2pi,
/// r = targets - mu. Throws numerical_error if the matrix cannot be
/// factorized even with the jitter ladder.
double nlml(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
            const KernelSpec& kernel, double sigma2, double mu);

/// Fitted (or directly constructed) GP regressor with a cached Cholesky
/// factorization of K + sigma2 I.
struct GpModel {
  KernelSpec kernel;
  double sigma2 = 1.0;
  double mu = 0.0;
  Eigen::MatrixXd training_inputs;
  Eigen::VectorXd training_targets;
  double jitter = 0.0;  // diagonal boost that made the factorization succeed

  struct Prediction {
    double mean = 0.0;
    double variance = 0.0;
  };

  /// Posterior predictive at one input:
  ///   mean = mu + k*^T (K + sigma2 I)^-1 (y - mu)
  ///   var  = k(x*,x*) - k*^T (K + sigma2 I)^-1 k* + sigma2
  /// with the first two variance terms clamped at zero.
  Prediction predict(std::span<const double> x) const;

  nlohmann::json to_json() const;
  static GpModel from_json(const nlohmann::json& j);

private:
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::VectorXd alpha_;  // (K + sigma2 I)^-1 (y - mu)

  friend GpModel make_gp(const Eigen::MatrixXd&, const Eigen::VectorXd&, const KernelSpec&,
                         double, double);
};

/// Build a model at given hyperparameters (factorizes immediately).
GpModel make_gp(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
                const KernelSpec& kernel, double sigma2, double mu);

/// Everything a caller needs to audit a fit: the optimum, how it was
/// reached, and the per-start objective values.
struct GpFitReport {
  double final_nlml = 0.0;
  int optimizer_iterations = 0;
  int restarts_used = 0;
  KernelSpec kernel;
  double sigma2 = 0.0;
  std::vector<double> restart_start_nlml;
  std::vector<double> accepted_trace;  // best objective after each accepted step
};

/// Fit tolerance in nats: refits and local-optimality checks compare
/// objective values at this resolution.
inline constexpr double kGpFitTolerance = 1e-4;

/// Noise floor: fitted sigma2 never goes below this.
inline constexpr double kSigma2Floor = 1e-8;

/// Default number of optimizer starts.
inline constexpr int kDefaultGpRestarts = 8;

/// Maximum-likelihood hyperparameters by multi-start simplex search in log
/// space. The prior mean is fixed at the target average. `restarts` is the
/// total number of starts (>= 1); the first is a data-scaled heuristic
/// start, the rest are seeded log-uniform draws.
std::pair<GpModel, GpFitReport> fit_gp(const LagDesign& design, KernelFamily family,
                                       int restarts, std::uint64_t seed);

}  // namespace trafficfc
