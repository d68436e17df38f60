#include "trafficfc/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "trafficfc/errors.hpp"
#include "trafficfc/nelder_mead.hpp"
#include "trafficfc/rng.hpp"

namespace trafficfc {

namespace {

constexpr double kJitterStart = 1e-10;
constexpr double kJitterMax = 1e-6;
constexpr double kLogParamClamp = 46.0;  // exp range roughly 1e-20 .. 1e20

double sq_dist(std::span<const double> x, std::span<const double> y) {
  double d2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    d2 += d * d;
  }
  return d2;
}

Eigen::MatrixXd pairwise_sq_dist(const Eigen::MatrixXd& X) {
  const Eigen::VectorXd sq = X.rowwise().squaredNorm();
  Eigen::MatrixXd D2 = sq.replicate(1, X.rows()) + sq.transpose().replicate(X.rows(), 1) -
                       2.0 * (X * X.transpose());
  return D2.cwiseMax(0.0);
}

/// Packed strict lower triangle of the squared-distance matrix. Stationary
/// kernels apply their scalar map to this vector once per objective
/// evaluation instead of to the full n x n matrix; that roughly halves the
/// dominant cost of a fit.
struct StationaryCache {
  Eigen::VectorXd tril;
  Eigen::Index n = 0;
};

StationaryCache pack_dist2(const Eigen::MatrixXd& dist2) {
  StationaryCache c;
  c.n = dist2.rows();
  c.tril.resize(c.n * (c.n - 1) / 2);
  Eigen::Index k = 0;
  for (Eigen::Index j = 0; j < c.n; ++j)
    for (Eigen::Index i = j + 1; i < c.n; ++i) c.tril(k++) = dist2(i, j);
  return c;
}

Eigen::MatrixXd unpack_symmetric(const Eigen::VectorXd& vals, double diag, Eigen::Index n) {
  Eigen::MatrixXd K(n, n);
  Eigen::Index k = 0;
  for (Eigen::Index j = 0; j < n; ++j) {
    K(j, j) = diag;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      K(i, j) = vals(k);
      K(j, i) = vals(k);
      ++k;
    }
  }
  return K;
}

/// Gram matrix from the packed distance cache (stationary kernels) or
/// directly from the inputs (linear kernel).
Eigen::MatrixXd build_gram(const KernelSpec& kernel, const Eigen::MatrixXd& X,
                           const StationaryCache& cache) {
  switch (kernel.family) {
    case KernelFamily::power_exponential: {
      const Eigen::VectorXd kv = kernel.v * (-0.5 * kernel.w * cache.tril.array()).exp();
      return unpack_symmetric(kv, kernel.v, cache.n);
    }
    case KernelFamily::rational_quadratic: {
      // (1 + swd^2)^(-a) via exp(-a log(.)): the vectorized log/exp path is
      // markedly faster than per-entry pow.
      const Eigen::VectorXd kv =
          (-kernel.a * (1.0 + kernel.s * kernel.w * cache.tril.array()).log()).exp();
      return unpack_symmetric(kv, 1.0, cache.n);
    }
    case KernelFamily::linear: {
      Eigen::VectorXd w =
          Eigen::Map<const Eigen::VectorXd>(kernel.weights.data(),
                                            static_cast<Eigen::Index>(kernel.weights.size()));
      return (X * w.asDiagonal()) * X.transpose();
    }
  }
  throw config_error("unknown kernel family");
}

struct Factorization {
  Eigen::LLT<Eigen::MatrixXd> llt;
  double jitter = 0.0;
};

/// Cholesky of K + sigma2 I with an escalating diagonal boost. Failure after
/// the whole ladder means the hyperparameters are numerically hopeless.
Factorization factorize(const Eigen::MatrixXd& K, double sigma2) {
  Eigen::MatrixXd M = K;
  M.diagonal().array() += sigma2;
  Factorization f;
  f.llt.compute(M);
  if (f.llt.info() == Eigen::Success) return f;
  for (double jitter = kJitterStart; jitter <= kJitterMax * 1.0000001; jitter *= 10.0) {
    Eigen::MatrixXd Mj = M;
    Mj.diagonal().array() += jitter;
    f.llt.compute(Mj);
    if (f.llt.info() == Eigen::Success) {
      f.jitter = jitter;
      return f;
    }
  }
  throw numerical_error("kernel matrix is not positive definite even with maximum jitter");
}

double nlml_from(const Factorization& f, const Eigen::VectorXd& residual) {
  const Eigen::VectorXd alpha = f.llt.solve(residual);
  const double quad = residual.dot(alpha);
  const double half_logdet = f.llt.matrixLLT().diagonal().array().log().sum();
  return 0.5 * quad + half_logdet +
         0.5 * static_cast<double>(residual.size()) * std::log(2.0 * std::numbers::pi);
}

// ---- hyperparameter packing for the log-space search ------------------------

int param_count(KernelFamily family, int dim) {
  switch (family) {
    case KernelFamily::power_exponential: return 3;  // v, w, sigma2
    case KernelFamily::rational_quadratic: return 4; // s, w, a, sigma2
    case KernelFamily::linear: return dim + 1;       // weights, sigma2
  }
  return 0;
}

KernelSpec unpack_kernel(KernelFamily family, int dim, const std::vector<double>& logp) {
  auto e = [](double l) { return std::exp(std::clamp(l, -kLogParamClamp, kLogParamClamp)); };
  KernelSpec k;
  k.family = family;
  switch (family) {
    case KernelFamily::power_exponential:
      k.v = e(logp[0]);
      k.w = e(logp[1]);
      break;
    case KernelFamily::rational_quadratic:
      k.s = e(logp[0]);
      k.w = e(logp[1]);
      k.a = e(logp[2]);
      break;
    case KernelFamily::linear:
      k.weights.resize(static_cast<std::size_t>(dim));
      for (int i = 0; i < dim; ++i) k.weights[static_cast<std::size_t>(i)] = e(logp[static_cast<std::size_t>(i)]);
      break;
  }
  return k;
}

double unpack_sigma2(const std::vector<double>& logp) {
  const double l = std::clamp(logp.back(), -kLogParamClamp, kLogParamClamp);
  return kSigma2Floor + std::exp(l);
}

}  // namespace

const char* kernel_family_name(KernelFamily f) {
  switch (f) {
    case KernelFamily::power_exponential: return "power_exponential";
    case KernelFamily::rational_quadratic: return "rational_quadratic";
    case KernelFamily::linear: return "linear";
  }
  return "?";
}

KernelFamily kernel_family_from_name(const std::string& name) {
  for (KernelFamily f : {KernelFamily::power_exponential, KernelFamily::rational_quadratic,
                         KernelFamily::linear})
    if (name == kernel_family_name(f)) return f;
  throw config_error("unknown kernel family: " + name);
}

void KernelSpec::validate(int input_dim) const {
  switch (family) {
    case KernelFamily::power_exponential:
      if (!(v > 0.0) || !(w > 0.0))
        throw config_error("power exponential kernel needs v > 0 and w > 0");
      break;
    case KernelFamily::rational_quadratic:
      if (!(s > 0.0) || !(w > 0.0) || !(a > 0.0))
        throw config_error("rational quadratic kernel needs s, w, a > 0");
      break;
    case KernelFamily::linear:
      if (weights.size() != static_cast<std::size_t>(input_dim))
        throw config_error("linear kernel needs one weight per input dimension");
      for (double wi : weights)
        if (!(wi >= 0.0) || !std::isfinite(wi))
          throw config_error("linear kernel weights must be non-negative");
      break;
  }
}

double kernel_eval(const KernelSpec& kernel, std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw config_error("kernel_eval: dimension mismatch");
  switch (kernel.family) {
    case KernelFamily::power_exponential:
      return kernel.v * std::exp(-0.5 * kernel.w * sq_dist(x, y));
    case KernelFamily::rational_quadratic:
      return std::pow(1.0 + kernel.s * kernel.w * sq_dist(x, y), -kernel.a);
    case KernelFamily::linear: {
      if (kernel.weights.size() != x.size())
        throw config_error("kernel_eval: weight count does not match input dimension");
      double out = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) out += kernel.weights[i] * x[i] * y[i];
      return out;
    }
  }
  throw config_error("unknown kernel family");
}

double nlml(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
            const KernelSpec& kernel, double sigma2, double mu) {
  kernel.validate(static_cast<int>(inputs.cols()));
  if (sigma2 < 0.0) throw config_error("nlml: sigma2 must be non-negative");
  if (inputs.rows() != targets.size()) throw config_error("nlml: inputs/targets size mismatch");
  const StationaryCache cache = kernel.family == KernelFamily::linear
                                    ? StationaryCache{}
                                    : pack_dist2(pairwise_sq_dist(inputs));
  const Eigen::MatrixXd K = build_gram(kernel, inputs, cache);
  const Eigen::VectorXd residual = targets.array() - mu;
  return nlml_from(factorize(K, sigma2), residual);
}

GpModel make_gp(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
                const KernelSpec& kernel, double sigma2, double mu) {
  kernel.validate(static_cast<int>(inputs.cols()));
  if (sigma2 < 0.0) throw config_error("make_gp: sigma2 must be non-negative");
  if (inputs.rows() != targets.size() || inputs.rows() == 0)
    throw config_error("make_gp: inputs/targets size mismatch");
  GpModel m;
  m.kernel = kernel;
  m.sigma2 = sigma2;
  m.mu = mu;
  m.training_inputs = inputs;
  m.training_targets = targets;
  const StationaryCache cache = kernel.family == KernelFamily::linear
                                    ? StationaryCache{}
                                    : pack_dist2(pairwise_sq_dist(inputs));
  Factorization f = factorize(build_gram(kernel, inputs, cache), sigma2);
  m.jitter = f.jitter;
  m.alpha_ = f.llt.solve(Eigen::VectorXd(targets.array() - mu));
  m.llt_ = std::move(f.llt);
  return m;
}

GpModel::Prediction GpModel::predict(std::span<const double> x) const {
  const Eigen::Index n = training_inputs.rows();
  if (static_cast<Eigen::Index>(x.size()) != training_inputs.cols())
    throw config_error("predict: input dimension mismatch");
  Eigen::VectorXd kstar(n);
  std::vector<double> row(static_cast<std::size_t>(training_inputs.cols()));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index c = 0; c < training_inputs.cols(); ++c)
      row[static_cast<std::size_t>(c)] = training_inputs(i, c);
    kstar(i) = kernel_eval(kernel, row, x);
  }
  Prediction p;
  p.mean = mu + kstar.dot(alpha_);
  const Eigen::VectorXd v = llt_.matrixL().solve(kstar);
  const double kss = kernel_eval(kernel, x, x);
  p.variance = std::max(0.0, kss - v.squaredNorm()) + sigma2;
  return p;
}

nlohmann::json GpModel::to_json() const {
  nlohmann::json j;
  j["kernel"]["family"] = kernel_family_name(kernel.family);
  switch (kernel.family) {
    case KernelFamily::power_exponential:
      j["kernel"]["v"] = kernel.v;
      j["kernel"]["w"] = kernel.w;
      break;
    case KernelFamily::rational_quadratic:
      j["kernel"]["s"] = kernel.s;
      j["kernel"]["w"] = kernel.w;
      j["kernel"]["a"] = kernel.a;
      break;
    case KernelFamily::linear:
      j["kernel"]["weights"] = kernel.weights;
      break;
  }
  j["sigma2"] = sigma2;
  j["mu"] = mu;
  std::vector<std::vector<double>> rows;
  for (Eigen::Index i = 0; i < training_inputs.rows(); ++i) {
    std::vector<double> r;
    for (Eigen::Index c = 0; c < training_inputs.cols(); ++c) r.push_back(training_inputs(i, c));
    rows.push_back(std::move(r));
  }
  j["training_inputs"] = rows;
  j["training_targets"] = std::vector<double>(training_targets.data(),
                                              training_targets.data() + training_targets.size());
  return j;
}

GpModel GpModel::from_json(const nlohmann::json& j) {
  try {
    KernelSpec k;
    k.family = kernel_family_from_name(j.at("kernel").at("family").get<std::string>());
    switch (k.family) {
      case KernelFamily::power_exponential:
        k.v = j.at("kernel").at("v").get<double>();
        k.w = j.at("kernel").at("w").get<double>();
        break;
      case KernelFamily::rational_quadratic:
        k.s = j.at("kernel").at("s").get<double>();
        k.w = j.at("kernel").at("w").get<double>();
        k.a = j.at("kernel").at("a").get<double>();
        break;
      case KernelFamily::linear:
        k.weights = j.at("kernel").at("weights").get<std::vector<double>>();
        break;
    }
    const auto rows = j.at("training_inputs").get<std::vector<std::vector<double>>>();
    const auto targets = j.at("training_targets").get<std::vector<double>>();
    if (rows.empty() || rows.size() != targets.size())
      throw config_error("GP model JSON: inconsistent training data");
    Eigen::MatrixXd X(rows.size(), rows[0].size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != rows[0].size())
        throw config_error("GP model JSON: ragged training inputs");
      for (std::size_t c = 0; c < rows[i].size(); ++c)
        X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = rows[i][c];
    }
    Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(targets.data(),
                                                          static_cast<Eigen::Index>(targets.size()));
    return make_gp(X, y, k, j.at("sigma2").get<double>(), j.at("mu").get<double>());
  } catch (const nlohmann::json::exception& e) {
    throw config_error(std::string("GP model JSON: ") + e.what());
  }
}

std::pair<GpModel, GpFitReport> fit_gp(const LagDesign& design, KernelFamily family,
                                       int restarts, std::uint64_t seed) {
  const Eigen::MatrixXd& X = design.inputs;
  const Eigen::VectorXd& y = design.targets;
  if (restarts < 1) throw config_error("fit_gp: restarts must be at least 1");
  if (X.rows() < 3) throw data_error("fit_gp: need at least 3 training rows");
  if (X.rows() != y.size()) throw config_error("fit_gp: inputs/targets size mismatch");
  const int dim = static_cast<int>(X.cols());
  const int np = param_count(family, dim);

  const double mu = y.mean();
  const Eigen::VectorXd residual = y.array() - mu;
  double vy = residual.squaredNorm() / static_cast<double>(y.size());
  if (!(vy > 1e-12)) vy = 1e-12;

  // Stationary kernels reuse one squared-distance matrix for every
  // objective evaluation; that dominates the cost of a fit.
  const bool stationary = family != KernelFamily::linear;
  const StationaryCache cache =
      stationary ? pack_dist2(pairwise_sq_dist(X)) : StationaryCache{};

  double med_dist2 = 1.0;
  if (stationary && cache.tril.size() > 0) {
    std::vector<double> d2;
    d2.reserve(static_cast<std::size_t>(cache.tril.size()));
    for (Eigen::Index i = 0; i < cache.tril.size(); ++i)
      if (cache.tril(i) > 0.0) d2.push_back(cache.tril(i));
    if (!d2.empty()) {
      std::nth_element(d2.begin(), d2.begin() + d2.size() / 2, d2.end());
      med_dist2 = d2[d2.size() / 2];
    }
  }

  auto objective = [&](const std::vector<double>& logp) -> double {
    try {
      const KernelSpec k = unpack_kernel(family, dim, logp);
      const double sigma2 = unpack_sigma2(logp);
      const Eigen::MatrixXd K = build_gram(k, X, cache);
      return nlml_from(factorize(K, sigma2), residual);
    } catch (const numerical_error&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  // Start points: one data-scaled heuristic, the rest log-uniform draws.
  std::mt19937_64 gen(seed);
  std::vector<std::vector<double>> starts;
  {
    std::vector<double> s(static_cast<std::size_t>(np));
    switch (family) {
      case KernelFamily::power_exponential:
        s[0] = std::log(vy);
        s[1] = std::log(1.0 / med_dist2);
        break;
      case KernelFamily::rational_quadratic:
        s[0] = 0.0;
        s[1] = std::log(1.0 / med_dist2);
        s[2] = 0.0;
        break;
      case KernelFamily::linear:
        for (int i = 0; i < dim; ++i) {
          const double msq = X.col(i).squaredNorm() / static_cast<double>(X.rows());
          s[static_cast<std::size_t>(i)] = std::log(vy / (dim * std::max(msq, 1e-12)));
        }
        break;
    }
    s.back() = std::log(0.1 * vy);
    starts.push_back(std::move(s));
  }
  const double lo = std::log(1e-3), hi = std::log(1e3);
  for (int r = 1; r < restarts; ++r) {
    std::vector<double> s(static_cast<std::size_t>(np));
    for (int i = 0; i + 1 < np; ++i) s[static_cast<std::size_t>(i)] = uniform_in(gen, lo, hi);
    s.back() = uniform_in(gen, std::log(1e-6 * vy), std::log(vy));
    starts.push_back(std::move(s));
  }

  GpFitReport report;
  report.restarts_used = restarts;
  std::vector<double> best_x;
  double best_f = std::numeric_limits<double>::infinity();
  auto absorb_trace = [&](const std::vector<double>& trace) {
    for (double t : trace) {
      const double cur = report.accepted_trace.empty()
                             ? std::numeric_limits<double>::infinity()
                             : report.accepted_trace.back();
      if (t < cur) report.accepted_trace.push_back(t);
    }
  };

  for (auto& s : starts) {
    report.restart_start_nlml.push_back(objective(s));
    auto run = nelder_mead(objective, s, 0.7, 1e-8, 55 * np);
    report.optimizer_iterations += run.iterations;
    absorb_trace(run.trace);
    if (run.fx < best_f) {
      best_f = run.fx;
      best_x = run.x;
    }
  }
  if (!std::isfinite(best_f))
    throw numerical_error("fit_gp: no hyperparameter start produced a usable model");

  // Polish the winner with a tight simplex.
  auto polish = nelder_mead(objective, best_x, 0.05, 1e-10, 60 * np);
  report.optimizer_iterations += polish.iterations;
  absorb_trace(polish.trace);
  if (polish.fx < best_f) {
    best_f = polish.fx;
    best_x = polish.x;
  }

  const KernelSpec k = unpack_kernel(family, dim, best_x);
  const double sigma2 = unpack_sigma2(best_x);
  report.final_nlml = best_f;
  report.kernel = k;
  report.sigma2 = sigma2;
  return {make_gp(X, y, k, sigma2, mu), report};
}

}  // namespace trafficfc
