#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cfm/image.hpp"
#include "cfm/measurement.hpp"
#include "cfm/operator.hpp"
#include "cfm/patterns.hpp"
#include "cfm/transforms.hpp"

namespace cfm {

enum class Acceleration { ista, fista };

struct SolverConfig {
  /// Regularization weight; empty selects the default rule (see default_lambda).
  std::optional<double> lambda;
  std::size_t max_iters = 5000;
  /// Converged once the relative objective change, averaged over the last
  /// five iterations, drops below tol.
  double tol = 1e-8;
  /// Nonnegativity projection; empty means on for the identity basis and off
  /// otherwise. Requesting it with a non-identity basis is a ConfigError.
  std::optional<bool> nonnegative;
  /// Sparsifying basis; empty is the identity.
  std::optional<TransformKind> basis;
  Acceleration acceleration = Acceleration::fista;
  /// FISTA only: approach lambda through warm-started stages of decreasing
  /// weight (factor 1/4 from |Psi A^T y|_inf). Traces then span all stages.
  bool continuation = true;
  DcStrategy dc = DcStrategy::none;

  void validate() const;
  bool nonnegative_enabled() const;
};

template <class Image>
struct RecoveryResult {
  Image estimate;
  std::size_t iterations = 0;
  std::vector<double> objective_trace;
  std::vector<double> residual_trace;
  double residual_norm = 0.0;
  bool converged = false;
  /// Regularization weight actually used (resolved when AUTO).
  double lambda = 0.0;
  double step = 0.0;
};

using SceneRecovery = RecoveryResult<Scene>;
using CubeRecovery = RecoveryResult<SpectralCube>;

/// Returns 1 / L, where L is 1.05 times a 50-step power-method estimate of
/// |A Psi^T|^2 started from a fixed-seed vector.
double estimate_step_size(const SensingOperator& op, const SparsityBasis* basis = nullptr);
double estimate_step_size(const PatternSet& patterns, const std::optional<TransformKind>& basis,
                          std::size_t width, std::size_t height,
                          DcStrategy dc = DcStrategy::none);

/// Noise level of back-projected coefficients: the per-reading noise implied
/// by the record's noise model, times the RMS column norm of the operator.
/// Falls back to a MAD estimate over fine-scale coefficients of Psi A^T y when
/// the model is unknown. Zero for noiseless records.
double estimate_coefficient_noise(const MeasurementRecord& record, const SensingOperator& op,
                                  const SparsityBasis* basis);

/// Default regularization: sigma * sqrt(2 ln N), floored at
/// 1e-4 * |Psi A^T y|_inf so noiseless problems keep a unique sparse solution.
double default_lambda(const MeasurementRecord& record, const SensingOperator& op,
                      const SparsityBasis* basis);

/// min 1/2 |A Psi^T z - y|^2 + lambda |z|_1 (z >= 0 when projecting with the
/// identity basis) by ISTA or FISTA with gradient-based restart. Returns the
/// image Psi^T z. Throws ShapeError on mismatched shapes, DataError on
/// nonfinite readings, ConfigError on invalid settings.
SceneRecovery reconstruct_l1(const MeasurementRecord& record, const PatternSet& patterns,
                             const SolverConfig& cfg, std::size_t width, std::size_t height);
/// Uses the record's width and height.
SceneRecovery reconstruct_l1(const MeasurementRecord& record, const PatternSet& patterns,
                             const SolverConfig& cfg);

/// min 1/2 |A x - y|^2 + tv_weight * TV_aniso(x) by ADMM on the split x = z:
/// a conjugate-gradient x-step and an anisotropic TV prox z-step, with
/// residual-balancing penalty updates. The basis must be the identity.
SceneRecovery reconstruct_tv(const MeasurementRecord& record, const PatternSet& patterns,
                             const SolverConfig& cfg, double tv_weight, std::size_t width,
                             std::size_t height);
SceneRecovery reconstruct_tv(const MeasurementRecord& record, const PatternSet& patterns,
                             const SolverConfig& cfg, double tv_weight);

/// Joint recovery of L channels with the l2,1 penalty
/// group_weight * sum_i |x_{i,.}|_2 over spectral fibers. `patterns` holds one
/// shared set or one per channel. With one channel and the same weight the
/// iterates equal reconstruct_l1's bit for bit. An empty group_weight falls
/// back to cfg.lambda, then to the default rule with threshold
/// sigma * (sqrt(2 ln N) + sqrt(L) - 1).
CubeRecovery reconstruct_joint_spectral(std::span<const MeasurementRecord> records,
                                        std::span<const PatternSet> patterns,
                                        const SolverConfig& cfg,
                                        std::optional<double> group_weight, std::size_t width,
                                        std::size_t height);

/// Independent per-channel l1 recovery assembled into a cube (baseline).
CubeRecovery reconstruct_independent(std::span<const MeasurementRecord> records,
                                     std::span<const PatternSet> patterns,
                                     const SolverConfig& cfg, std::size_t width,
                                     std::size_t height);

}  // namespace cfm
