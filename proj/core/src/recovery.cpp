#include "cfm/recovery.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <sstream>

#include "cfm/error.hpp"
#include "cfm/prox.hpp"
#include "cfm/rng.hpp"
#include "cfm/tv.hpp"

namespace cfm {

namespace {

constexpr std::size_t kPowerIters = 50;
constexpr double kLipschitzSafety = 1.05;
constexpr std::uint64_t kPowerSeed = 0xC0FFEE5EEDULL;
constexpr std::size_t kStopWindow = 5;
constexpr double kLambdaFloorFraction = 1e-4;
constexpr double kMadToSigma = 0.6744897501960817;
constexpr double kContinuationFactor = 0.25;
constexpr double kStageTol = 1e-4;

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double norm_inf(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

void check_readings(const MeasurementRecord& record, const PatternSet& patterns) {
  if (record.y.size() != patterns.m()) {
    throw ShapeError("record holds " + std::to_string(record.y.size()) +
                     " readings but the pattern set has M = " + std::to_string(patterns.m()));
  }
  if (record.patterns_hash != 0 && record.patterns_hash != patterns.content_hash()) {
    throw FormatError("measurement record was acquired with a different pattern set");
  }
  for (double v : record.y) {
    if (!std::isfinite(v)) {
      throw DataError("measurement record contains nonfinite readings");
    }
  }
}

bool all_zero(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double a) { return a == 0.0; });
}

// Power method on (A Psi^T)^T (A Psi^T); returns |(A Psi^T)^T (A Psi^T) v| for
// the final unit iterate.
double power_estimate(const SensingOperator& op, const SparsityBasis* basis,
                      std::size_t iters) {
  const std::size_t n = op.cols();
  std::vector<double> v(n);
  CounterRng rng(kPowerSeed);
  for (double& a : v) a = rng.uniform(-1.0, 1.0);
  double nv = norm2(v);
  for (double& a : v) a /= nv;

  std::vector<double> pix(n);
  std::vector<double> meas(op.rows());
  std::vector<double> w(n);
  double est = 0.0;
  for (std::size_t k = 0; k < iters; ++k) {
    if (basis) {
      basis->synthesize(v, pix);
      op.apply(pix, meas);
      op.adjoint(meas, pix);
      basis->analyze(pix, w);
    } else {
      op.apply(v, meas);
      op.adjoint(meas, w);
    }
    est = norm2(w);
    if (est == 0.0) return 0.0;
    for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / est;
  }
  return est;
}

// Least-squares data term 1/2 sum_c |A_c Psi^T z_c - b_c|^2 over channel-major
// coefficient blocks.
class DataTerm {
 public:
  DataTerm(std::vector<const SensingOperator*> ops, std::vector<std::vector<double>> rhs,
           const SparsityBasis* basis)
      : ops_(std::move(ops)), rhs_(std::move(rhs)), basis_(basis) {
    n_ = ops_.front()->cols();
    offsets_.push_back(0);
    for (const auto* op : ops_) offsets_.push_back(offsets_.back() + op->rows());
    rhs_flat_.reserve(offsets_.back());
    for (const auto& b : rhs_) rhs_flat_.insert(rhs_flat_.end(), b.begin(), b.end());
    pix_.resize(n_);
  }

  std::size_t channels() const { return ops_.size(); }
  std::size_t pixels() const { return n_; }
  std::size_t total_rows() const { return offsets_.back(); }
  std::span<const double> rhs() const { return rhs_flat_; }

  void forward(std::span<const double> z, std::span<double> out) {
    for (std::size_t c = 0; c < ops_.size(); ++c) {
      auto zc = z.subspan(c * n_, n_);
      auto oc = out.subspan(offsets_[c], ops_[c]->rows());
      if (basis_) {
        basis_->synthesize(zc, pix_);
        ops_[c]->apply(pix_, oc);
      } else {
        ops_[c]->apply(zc, oc);
      }
    }
  }

  void backward(std::span<const double> r, std::span<double> out) {
    for (std::size_t c = 0; c < ops_.size(); ++c) {
      auto rc = r.subspan(offsets_[c], ops_[c]->rows());
      auto oc = out.subspan(c * n_, n_);
      if (basis_) {
        ops_[c]->adjoint(rc, pix_);
        basis_->analyze(pix_, oc);
      } else {
        ops_[c]->adjoint(rc, oc);
      }
    }
  }

 private:
  std::vector<const SensingOperator*> ops_;
  std::vector<std::vector<double>> rhs_;
  const SparsityBasis* basis_;
  std::size_t n_ = 0;
  std::vector<std::size_t> offsets_;
  std::vector<double> rhs_flat_;
  std::vector<double> pix_;
};

// lambda * sum of fiber norms; a one-channel fiber norm is |v|.
double penalty(std::span<const double> z, std::size_t pixels, std::size_t channels) {
  double s = 0.0;
  if (channels == 1) {
    for (double v : z) s += std::abs(v);
    return s;
  }
  for (std::size_t i = 0; i < pixels; ++i) {
    double sq = 0.0;
    for (std::size_t c = 0; c < channels; ++c) sq += z[c * pixels + i] * z[c * pixels + i];
    s += std::sqrt(sq);
  }
  return s;
}

struct EngineResult {
  std::vector<double> z;
  std::size_t iterations = 0;
  std::vector<double> objective_trace;
  std::vector<double> residual_trace;
  double residual_norm = 0.0;
  bool converged = false;
};

class StopRule {
 public:
  explicit StopRule(double tol) : tol_(tol) {}
  bool update(double previous, double current) {
    const double denom = std::max(std::abs(current), std::numeric_limits<double>::min());
    window_.push_back(std::abs(previous - current) / denom);
    if (window_.size() > kStopWindow) window_.pop_front();
    if (window_.size() < kStopWindow) return false;
    const double mean =
        std::accumulate(window_.begin(), window_.end(), 0.0) / static_cast<double>(kStopWindow);
    return mean < tol_;
  }

 private:
  double tol_;
  std::deque<double> window_;
};

// Proximal gradient on 1/2|A z - b|^2 + lambda * penalty(z), optionally over
// the nonnegative orthant.
EngineResult proximal_gradient(DataTerm& data, double lambda, bool nonnegative, double step,
                               Acceleration acceleration, std::size_t max_iters, double tol,
                               std::vector<double> z0) {
  const std::size_t pixels = data.pixels();
  const std::size_t channels = data.channels();
  const std::size_t nv = pixels * channels;
  const std::size_t mr = data.total_rows();
  const auto b = data.rhs();
  const bool fista = acceleration == Acceleration::fista;
  const double threshold = step * lambda;

  std::vector<double> z = z0.empty() ? std::vector<double>(nv, 0.0) : std::move(z0);
  std::vector<double> z_new(nv), yk = z, grad(nv);
  std::vector<double> az(mr, 0.0), az_new(mr), ay(mr), res(mr);
  data.forward(z, az);
  ay = az;

  auto objective = [&](std::span<const double> zz, std::span<const double> azz) {
    double sq = 0.0;
    for (std::size_t i = 0; i < mr; ++i) {
      const double d = azz[i] - b[i];
      sq += d * d;
    }
    return std::pair{0.5 * sq + lambda * penalty(zz, pixels, channels), std::sqrt(sq)};
  };

  EngineResult out;
  auto [f_prev, r_prev] = objective(z, az);
  double best_f = f_prev;
  double best_r = r_prev;
  std::vector<double> best_z = z;
  double t = 1.0;
  StopRule stop(tol);

  for (std::size_t it = 1; it <= max_iters; ++it) {
    for (std::size_t i = 0; i < mr; ++i) res[i] = ay[i] - b[i];
    data.backward(res, grad);
    for (std::size_t i = 0; i < nv; ++i) z_new[i] = yk[i] - step * grad[i];
    group_soft_threshold_inplace(z_new, pixels, channels, threshold, nonnegative);
    data.forward(z_new, az_new);
    const auto [f, r] = objective(z_new, az_new);

    if (!fista && f > f_prev && f - f_prev <= 1e-12 * std::abs(f_prev)) {
      // Plain proximal gradient cannot increase the objective in exact
      // arithmetic; an increase at round-off level means stagnation. Larger
      // increases are kept in the trace so they stay visible.
      out.converged = true;
      out.iterations = it - 1;
      break;
    }

    out.objective_trace.push_back(f);
    out.residual_trace.push_back(r);
    out.iterations = it;

    if (fista) {
      double restart = 0.0;
      for (std::size_t i = 0; i < nv; ++i) restart += (yk[i] - z_new[i]) * (z_new[i] - z[i]);
      if (restart > 0.0) {
        t = 1.0;
        yk = z_new;
        ay = az_new;
      } else {
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        const double beta = (t - 1.0) / t_next;
        for (std::size_t i = 0; i < nv; ++i) yk[i] = z_new[i] + beta * (z_new[i] - z[i]);
        for (std::size_t i = 0; i < mr; ++i) ay[i] = az_new[i] + beta * (az_new[i] - az[i]);
        t = t_next;
      }
    } else {
      yk = z_new;
      ay = az_new;
    }
    z.swap(z_new);
    az.swap(az_new);

    if (f < best_f) {
      best_f = f;
      best_r = r;
      best_z = z;
    }
    const bool done = stop.update(f_prev, f);
    f_prev = f;
    r_prev = r;
    if (done) {
      out.converged = true;
      break;
    }
  }

  if (fista && f_prev > best_f + tol * std::abs(best_f)) {
    out.z = std::move(best_z);
    out.residual_norm = best_r;
  } else {
    out.z = std::move(z);
    out.residual_norm = r_prev;
  }
  return out;
}

// FISTA runs through a decreasing sequence of weights, each stage warm-started
// from the previous one and solved loosely, before the final stage at the
// requested weight and tolerance. ISTA always solves the final problem
// directly so its objective trace stays monotone.
EngineResult solve(DataTerm& data, double lambda, bool nonnegative, double step,
                   const SolverConfig& cfg) {
  if (cfg.acceleration == Acceleration::ista || !cfg.continuation) {
    return proximal_gradient(data, lambda, nonnegative, step, cfg.acceleration, cfg.max_iters,
                             cfg.tol, {});
  }
  const std::size_t pixels = data.pixels();
  const std::size_t channels = data.channels();
  std::vector<double> g(pixels * channels);
  data.backward(data.rhs(), g);
  double lambda_max = 0.0;
  for (std::size_t i = 0; i < pixels; ++i) {
    double sq = 0.0;
    for (std::size_t c = 0; c < channels; ++c) sq += g[c * pixels + i] * g[c * pixels + i];
    lambda_max = std::max(lambda_max, std::sqrt(sq));
  }

  EngineResult total;
  std::vector<double> z;
  std::size_t budget = cfg.max_iters;
  for (double stage = kContinuationFactor * lambda_max;
       stage > lambda && stage > kLambdaFloorFraction * lambda_max && budget > 0;
       stage *= kContinuationFactor) {
    auto r = proximal_gradient(data, stage, nonnegative, step, cfg.acceleration, budget,
                               std::max(cfg.tol, kStageTol), std::move(z));
    budget -= r.iterations;
    total.iterations += r.iterations;
    total.objective_trace.insert(total.objective_trace.end(), r.objective_trace.begin(),
                                 r.objective_trace.end());
    total.residual_trace.insert(total.residual_trace.end(), r.residual_trace.begin(),
                                r.residual_trace.end());
    z = std::move(r.z);
  }
  if (budget == 0) {
    total.z = std::move(z);
    total.converged = false;
    return total;
  }
  auto r = proximal_gradient(data, lambda, nonnegative, step, cfg.acceleration, budget, cfg.tol,
                             std::move(z));
  total.iterations += r.iterations;
  total.objective_trace.insert(total.objective_trace.end(), r.objective_trace.begin(),
                               r.objective_trace.end());
  total.residual_trace.insert(total.residual_trace.end(), r.residual_trace.begin(),
                              r.residual_trace.end());
  total.z = std::move(r.z);
  total.residual_norm = r.residual_norm;
  total.converged = r.converged;
  return total;
}

template <class Image>
RecoveryResult<Image> zero_result(Image image) {
  RecoveryResult<Image> r;
  r.estimate = std::move(image);
  r.iterations = 1;
  r.objective_trace = {0.0};
  r.residual_trace = {0.0};
  r.residual_norm = 0.0;
  r.converged = true;
  return r;
}

std::optional<double> reading_noise_sigma(const MeasurementRecord& record) {
  if (!record.noise) return std::nullopt;
  const NoiseModel& noise = *record.noise;
  const bool diff = record.differential_combined;
  const double pair_factor = diff ? 2.0 : 1.0;
  switch (noise.kind) {
    case NoiseModel::Kind::noiseless:
      return 0.0;
    case NoiseModel::Kind::gaussian:
      return noise.sigma * std::sqrt(pair_factor);
    case NoiseModel::Kind::poisson:
    case NoiseModel::Kind::poisson_plus_gaussian: {
      if (!record.total_flux) return std::nullopt;
      const double flux = std::max(*record.total_flux, 0.0);
      double var = 0.0;
      if (diff) {
        var = flux * flux / noise.photon_budget;
      } else {
        double mean_y = 0.0;
        for (double v : record.y) mean_y += v;
        mean_y = std::max(mean_y / static_cast<double>(record.y.size()), 0.0);
        var = mean_y * flux / noise.photon_budget;
      }
      if (noise.kind == NoiseModel::Kind::poisson_plus_gaussian) {
        const double s = noise.sigma * flux / noise.photon_budget;
        var += pair_factor * s * s;
      }
      return std::sqrt(var);
    }
  }
  return std::nullopt;
}

// Psi A^T b for one channel.
std::vector<double> back_projection(const SensingOperator& op, const SparsityBasis* basis,
                                    std::span<const double> b) {
  auto g = op.adjoint(b);
  if (!basis) return g;
  std::vector<double> c(g.size());
  basis->analyze(g, c);
  return c;
}

std::optional<SparsityBasis> make_basis(const SolverConfig& cfg, std::size_t width,
                                        std::size_t height) {
  if (!cfg.basis) return std::nullopt;
  return SparsityBasis(*cfg.basis, width, height);
}

void check_shape(std::size_t width, std::size_t height, std::size_t n) {
  if (width * height != n) {
    throw ShapeError("image shape " + std::to_string(width) + "x" + std::to_string(height) +
                     " does not match pattern N = " + std::to_string(n));
  }
}

// Solves (A^T A + rho I) x = rhs by conjugate gradients, warm-started from x.
void cg_solve(const SensingOperator& op, double rho, std::span<const double> rhs,
              std::span<double> x, std::size_t max_iters, double rel_tol) {
  const std::size_t n = x.size();
  std::vector<double> r(n), p(n), ap(n), tmp(op.rows());
  auto normal_op = [&](std::span<const double> v, std::span<double> out) {
    op.apply(v, tmp);
    op.adjoint(tmp, out);
    for (std::size_t i = 0; i < n; ++i) out[i] += rho * v[i];
  };
  normal_op(x, ap);
  for (std::size_t i = 0; i < n; ++i) r[i] = rhs[i] - ap[i];
  p = r;
  double rr = dot(r, r);
  const double stop = rel_tol * rel_tol * std::max(dot(rhs, rhs), std::numeric_limits<double>::min());
  for (std::size_t k = 0; k < max_iters && rr > stop; ++k) {
    normal_op(p, ap);
    const double alpha = rr / dot(p, ap);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
    }
    const double rr_new = dot(r, r);
    const double beta = rr_new / rr;
    for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
    rr = rr_new;
  }
}

}  // namespace

void SolverConfig::validate() const {
  if (lambda && !(*lambda >= 0.0)) {
    throw ConfigError("solver: lambda must be nonnegative");
  }
  if (!(tol > 0.0)) {
    throw ConfigError("solver: tol must be positive");
  }
  if (max_iters < 1) {
    throw ConfigError("solver: max_iters must be at least 1");
  }
  if (basis && nonnegative.value_or(false)) {
    throw ConfigError("solver: nonnegativity is only available with the identity basis");
  }
}

bool SolverConfig::nonnegative_enabled() const { return nonnegative.value_or(!basis.has_value()); }

double estimate_step_size(const SensingOperator& op, const SparsityBasis* basis) {
  const double lip = kLipschitzSafety * power_estimate(op, basis, kPowerIters);
  if (lip == 0.0) {
    return 1.0;
  }
  return 1.0 / lip;
}

double estimate_step_size(const PatternSet& patterns, const std::optional<TransformKind>& basis,
                          std::size_t width, std::size_t height, DcStrategy dc) {
  SensingOperator op(patterns, dc);
  if (!basis) return estimate_step_size(op, nullptr);
  check_shape(width, height, patterns.n());
  SparsityBasis psi(*basis, width, height);
  return estimate_step_size(op, &psi);
}

double estimate_coefficient_noise(const MeasurementRecord& record, const SensingOperator& op,
                                  const SparsityBasis* basis) {
  if (const auto sigma_y = reading_noise_sigma(record)) {
    const double col_rms =
        std::sqrt(op.frobenius_norm_sq() / static_cast<double>(op.cols()));
    return *sigma_y * col_rms;
  }
  const auto b = op.prepare_readings(record.y);
  const auto coeffs = back_projection(op, basis, b);
  std::vector<double> fine;
  if (basis) {
    for (std::size_t i : basis->fine_scale_indices()) fine.push_back(coeffs[i]);
  } else {
    fine = coeffs;
  }
  const double med = median(fine);
  for (double& v : fine) v = std::abs(v - med);
  return median(fine) / kMadToSigma;
}

double default_lambda(const MeasurementRecord& record, const SensingOperator& op,
                      const SparsityBasis* basis) {
  const double sigma = estimate_coefficient_noise(record, op, basis);
  const auto n = static_cast<double>(op.cols());
  const double rule = sigma * std::sqrt(2.0 * std::log(n));
  const auto b = op.prepare_readings(record.y);
  const double floor = kLambdaFloorFraction * norm_inf(back_projection(op, basis, b));
  return std::max(rule, floor);
}

SceneRecovery reconstruct_l1(const MeasurementRecord& record, const PatternSet& patterns,
                             const SolverConfig& cfg, std::size_t width, std::size_t height) {
  cfg.validate();
  check_readings(record, patterns);
  check_shape(width, height, patterns.n());
  if (all_zero(record.y)) {
    return zero_result(Scene(width, height));
  }

  const SensingOperator op(patterns, cfg.dc);
  const auto basis = make_basis(cfg, width, height);
  const SparsityBasis* psi = basis ? &*basis : nullptr;

  const double lambda = cfg.lambda ? *cfg.lambda : default_lambda(record, op, psi);
  const double step = estimate_step_size(op, psi);

  DataTerm data({&op}, {op.prepare_readings(record.y)}, psi);
  auto eng = solve(data, lambda, cfg.nonnegative_enabled(), step, cfg);

  SceneRecovery out;
  out.estimate = Scene(width, height);
  if (psi) {
    psi->synthesize(eng.z, out.estimate.values);
  } else {
    out.estimate.values = std::move(eng.z);
  }
  out.iterations = eng.iterations;
  out.objective_trace = std::move(eng.objective_trace);
  out.residual_trace = std::move(eng.residual_trace);
  out.residual_norm = eng.residual_norm;
  out.converged = eng.converged;
  out.lambda = lambda;
  out.step = step;
  return out;
}

SceneRecovery reconstruct_l1(const MeasurementRecord& record, const PatternSet& patterns,
                             const SolverConfig& cfg) {
  return reconstruct_l1(record, patterns, cfg, record.width, record.height);
}

SceneRecovery reconstruct_tv(const MeasurementRecord& record, const PatternSet& patterns,
                             const SolverConfig& cfg, double tv_weight, std::size_t width,
                             std::size_t height) {
  cfg.validate();
  if (cfg.basis) {
    throw ConfigError("tv solver works in the pixel domain; basis must be identity");
  }
  if (!(tv_weight >= 0.0)) {
    throw ConfigError("tv solver: tv_weight must be nonnegative");
  }
  check_readings(record, patterns);
  check_shape(width, height, patterns.n());
  if (all_zero(record.y)) {
    return zero_result(Scene(width, height));
  }

  const SensingOperator op(patterns, cfg.dc);
  const auto b = op.prepare_readings(record.y);
  const std::size_t n = op.cols();
  const bool nonneg = cfg.nonnegative_enabled();

  const double lip = 1.0 / estimate_step_size(op, nullptr);
  double rho = 0.1 * lip;
  const auto atb = op.adjoint(b);

  std::vector<double> x(n, 0.0), z(n, 0.0), u(n, 0.0), z_prev(n), rhs(n), v(n), az(op.rows());
  TvProxOptions prox_opts;
  prox_opts.nonnegative = nonneg;

  auto objective = [&](std::span<const double> img) {
    op.apply(img, az);
    double sq = 0.0;
    for (std::size_t i = 0; i < az.size(); ++i) sq += (az[i] - b[i]) * (az[i] - b[i]);
    return std::pair{0.5 * sq + tv_weight * tv_aniso(img, width, height), std::sqrt(sq)};
  };

  SceneRecovery out;
  auto [f_prev, r_prev] = objective(z);
  StopRule stop(cfg.tol);
  const double primal_tol = std::sqrt(cfg.tol);

  for (std::size_t it = 1; it <= cfg.max_iters; ++it) {
    for (std::size_t i = 0; i < n; ++i) rhs[i] = atb[i] + rho * (z[i] - u[i]);
    cg_solve(op, rho, rhs, x, 200, 1e-12);

    z_prev = z;
    for (std::size_t i = 0; i < n; ++i) v[i] = x[i] + u[i];
    if (tv_weight > 0.0) {
      tv_prox_aniso(v, z, width, height, tv_weight / rho, prox_opts);
    } else {
      for (std::size_t i = 0; i < n; ++i) z[i] = nonneg ? std::max(v[i], 0.0) : v[i];
    }
    double primal_sq = 0.0;
    double dual_sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      u[i] += x[i] - z[i];
      primal_sq += (x[i] - z[i]) * (x[i] - z[i]);
      dual_sq += (z[i] - z_prev[i]) * (z[i] - z_prev[i]);
    }
    const double primal = std::sqrt(primal_sq);
    const double dual = rho * std::sqrt(dual_sq);

    const auto [f, r] = objective(z);
    out.objective_trace.push_back(f);
    out.residual_trace.push_back(r);
    out.iterations = it;
    const bool flat = stop.update(f_prev, f);
    f_prev = f;
    r_prev = r;
    const double zn = std::max(norm2(z), std::numeric_limits<double>::min());
    if (flat && primal <= primal_tol * zn && dual <= primal_tol * std::max(norm2(atb), zn)) {
      out.converged = true;
      break;
    }

    // Residual balancing; u is the scaled dual and rescales with rho.
    if (primal > 10.0 * dual) {
      rho *= 2.0;
      for (double& a : u) a *= 0.5;
    } else if (dual > 10.0 * primal) {
      rho *= 0.5;
      for (double& a : u) a *= 2.0;
    }
  }

  out.estimate = Scene(width, height, std::move(z));
  out.residual_norm = r_prev;
  out.lambda = tv_weight;
  out.step = 1.0 / lip;
  return out;
}

SceneRecovery reconstruct_tv(const MeasurementRecord& record, const PatternSet& patterns,
                             const SolverConfig& cfg, double tv_weight) {
  return reconstruct_tv(record, patterns, cfg, tv_weight, record.width, record.height);
}

CubeRecovery reconstruct_joint_spectral(std::span<const MeasurementRecord> records,
                                        std::span<const PatternSet> patterns,
                                        const SolverConfig& cfg,
                                        std::optional<double> group_weight, std::size_t width,
                                        std::size_t height) {
  cfg.validate();
  if (cfg.basis) {
    throw ConfigError("joint spectral solver works in the pixel domain; basis must be identity");
  }
  const std::size_t channels = records.size();
  if (channels == 0) {
    throw ShapeError("joint spectral: no channels");
  }
  if (patterns.size() != 1 && patterns.size() != channels) {
    throw ShapeError("joint spectral: need one shared pattern set or one per channel");
  }
  const std::size_t n = patterns[0].n();
  check_shape(width, height, n);
  for (const auto& p : patterns) {
    if (p.n() != n) throw ShapeError("joint spectral: channels disagree on N");
  }
  bool zero = true;
  for (std::size_t c = 0; c < channels; ++c) {
    check_readings(records[c], patterns.size() == 1 ? patterns[0] : patterns[c]);
    zero = zero && all_zero(records[c].y);
  }
  if (zero) {
    return zero_result(SpectralCube(width, height, channels));
  }

  std::vector<SensingOperator> ops;
  ops.reserve(patterns.size());
  for (const auto& p : patterns) ops.emplace_back(p, cfg.dc);
  auto op_for = [&](std::size_t c) -> const SensingOperator& {
    return ops.size() == 1 ? ops[0] : ops[c];
  };

  std::vector<const SensingOperator*> op_ptrs;
  std::vector<std::vector<double>> rhs;
  for (std::size_t c = 0; c < channels; ++c) {
    op_ptrs.push_back(&op_for(c));
    rhs.push_back(op_for(c).prepare_readings(records[c].y));
  }

  double step = std::numeric_limits<double>::infinity();
  for (const auto& op : ops) step = std::min(step, estimate_step_size(op, nullptr));

  double lambda = 0.0;
  if (group_weight) {
    lambda = *group_weight;
  } else if (cfg.lambda) {
    lambda = *cfg.lambda;
  } else {
    double var = 0.0;
    std::vector<double> backproj(n * channels);
    for (std::size_t c = 0; c < channels; ++c) {
      const double s = estimate_coefficient_noise(records[c], op_for(c), nullptr);
      var += s * s;
      const auto g = op_for(c).adjoint(rhs[c]);
      std::copy(g.begin(), g.end(), backproj.begin() + static_cast<std::ptrdiff_t>(c * n));
    }
    // One channel must reproduce the l1 rule exactly, so avoid sqrt(s * s)
    // and (a + 1) - 1 round-off there.
    const double sigma = channels == 1 ? estimate_coefficient_noise(records[0], op_for(0), nullptr)
                                       : std::sqrt(var / static_cast<double>(channels));
    const double rule = sigma * (std::sqrt(2.0 * std::log(static_cast<double>(n))) +
                                 (std::sqrt(static_cast<double>(channels)) - 1.0));
    double max_fiber = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double sq = 0.0;
      for (std::size_t c = 0; c < channels; ++c) sq += backproj[c * n + i] * backproj[c * n + i];
      max_fiber = std::max(max_fiber, channels == 1 ? std::abs(backproj[i]) : std::sqrt(sq));
    }
    lambda = std::max(rule, kLambdaFloorFraction * max_fiber);
  }
  if (!(lambda >= 0.0)) {
    throw ConfigError("joint spectral: group weight must be nonnegative");
  }

  DataTerm data(std::move(op_ptrs), std::move(rhs), nullptr);
  auto eng = solve(data, lambda, cfg.nonnegative_enabled(), step, cfg);

  CubeRecovery out;
  out.estimate = SpectralCube(width, height, channels);
  out.estimate.values = std::move(eng.z);
  out.iterations = eng.iterations;
  out.objective_trace = std::move(eng.objective_trace);
  out.residual_trace = std::move(eng.residual_trace);
  out.residual_norm = eng.residual_norm;
  out.converged = eng.converged;
  out.lambda = lambda;
  out.step = step;
  return out;
}

CubeRecovery reconstruct_independent(std::span<const MeasurementRecord> records,
                                     std::span<const PatternSet> patterns,
                                     const SolverConfig& cfg, std::size_t width,
                                     std::size_t height) {
  const std::size_t channels = records.size();
  if (patterns.size() != 1 && patterns.size() != channels) {
    throw ShapeError("independent recovery: need one shared pattern set or one per channel");
  }
  CubeRecovery out;
  out.estimate = SpectralCube(width, height, channels);
  out.converged = true;
  double res_sq = 0.0;
  for (std::size_t c = 0; c < channels; ++c) {
    const auto r = reconstruct_l1(records[c], patterns.size() == 1 ? patterns[0] : patterns[c],
                                  cfg, width, height);
    std::copy(r.estimate.values.begin(), r.estimate.values.end(), out.estimate.channel(c).begin());
    out.iterations += r.iterations;
    out.converged = out.converged && r.converged;
    out.objective_trace.push_back(r.objective_trace.empty() ? 0.0 : r.objective_trace.back());
    out.residual_trace.push_back(r.residual_norm);
    res_sq += r.residual_norm * r.residual_norm;
    out.lambda = std::max(out.lambda, r.lambda);
  }
  out.residual_norm = std::sqrt(res_sq);
  return out;
}

}  // namespace cfm
