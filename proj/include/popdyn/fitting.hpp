#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "popdyn/types.hpp"

namespace popdyn::fit {

enum class ModelKind { DModel, WModel };

inline const char* to_string(ModelKind k) {
  return k == ModelKind::DModel ? "DModel" : "WModel";
}

struct FitOptions {
  int max_iterations = 200;
  double initial_damping = 1e-3;
  double damping_up = 10.0;
  double damping_down = 0.1;
  double convergence_tol = 1e-10;  // relative step size / objective improvement
  int multistart_count = 8;
  // Optional per-parameter [lo, hi] boxes; when empty the fitters install
  // model-specific defaults.
  std::vector<std::pair<double, double>> bounds;

  void validate() const {
    if (max_iterations < 1) throw ParamError("max_iterations must be >= 1");
    if (multistart_count < 1) throw ParamError("multistart_count must be >= 1");
    if (!(initial_damping > 0.0)) throw ParamError("initial_damping must be > 0");
    if (!(damping_up > 1.0) || !(damping_down < 1.0) || !(damping_down > 0.0))
      throw ParamError("damping factors must satisfy up > 1 and 0 < down < 1");
    for (const auto& [lo, hi] : bounds)
      if (!(lo <= hi)) throw ParamError("bounds must be well ordered");
  }
};

struct FitDiagnostics {
  int iterations = 0;
  bool converged = false;
  double residual_norm = 0.0;  // sqrt of the final sum of squares
  double objective = 0.0;      // final sum of squares
};

struct FitResult {
  ModelKind model_kind = ModelKind::DModel;
  std::optional<DModelParams> dparams;
  std::optional<WModelParams> wparams;
  double nmse = 0.0;
  int iterations = 0;
  bool converged = false;
  double residual_norm = 0.0;
};

/// Both model fits raised; carries the two failure messages.
class BothFitsFailedError : public FitError {
 public:
  BothFitsFailedError(std::string d, std::string w)
      : FitError("both model fits failed; dmodel: " + d + "; wmodel: " + w),
        dmodel_error(std::move(d)),
        wmodel_error(std::move(w)) {}
  std::string dmodel_error;
  std::string wmodel_error;
};

/// Mean squared daily-count error normalized by the squared mean count:
///   (1/T) sum (p_t - a_t)^2 / (mean(a))^2.
/// Throws DataError on length mismatch or when the actual trace has zero
/// mean. Invariant under common positive rescaling of both traces.
double nmse(const Trace& predicted, const Trace& actual);

/// Residual vector r(params) written into `out` (resized by the callee).
using ResidualFn =
    std::function<void(std::span<const double>, std::vector<double>&)>;
/// Row-major m x n Jacobian of the residuals written into `out`.
using JacobianFn =
    std::function<void(std::span<const double>, std::vector<double>&)>;
/// In-place projection of a trial point onto the feasible set.
using ProjectFn = std::function<void(std::span<double>)>;

struct LMOutcome {
  std::vector<double> params;
  FitDiagnostics diag;
};

/// Residuals of the direct model's daily counts against a trace and their
/// analytic Jacobian, in the parameter order (alpha, q, t_e, gamma). These
/// are exactly what fit_dmodel feeds the optimizer, exposed so the partials
/// can be checked against finite differences.
ResidualFn dmodel_residuals(const Trace& trace, double n);
JacobianFn dmodel_jacobian(const Trace& trace, double n);

/// Residuals of the word-of-mouth slot recursion against a trace, in the
/// parameter order (beta*N, q, x0). The Jacobian side is finite-difference.
ResidualFn wmodel_residuals(const Trace& trace, double n);

/// Damped least squares with box handling by projection: steps solve
/// (J^T J + lambda diag(J^T J)) d = -J^T r, trial points are projected,
/// and only strictly improving steps are accepted, so the objective over
/// accepted iterates is nonincreasing. When no Jacobian is supplied it is
/// built by forward differences with a 1e-6 relative step.
LMOutcome levenberg_marquardt(const ResidualFn& residuals,
                              std::vector<double> init, const FitOptions& opts,
                              const JacobianFn* jacobian = nullptr,
                              const ProjectFn* project = nullptr);

/// Fits (alpha, q, t_e, gamma) of the direct-recommendation model to the
/// daily counts of `trace`, with the population n fixed externally.
/// Constraints: q in (0,1], 0 <= t_e <= T, gamma > alpha.
FitResult fit_dmodel(const Trace& trace, double n, const FitOptions& opts = {});

/// Fits (beta, q, x0) of the word-of-mouth model by matching the discrete
/// recursion's daily increments to the trace. Constraints: q in (0,1],
/// 0 < x0 < qN, beta in (0, bound]; the Jacobian is forward-difference.
FitResult fit_wmodel(const Trace& trace, double n, const FitOptions& opts = {});

/// The smaller-NMSE result of the two; exact ties go to the direct model
/// (the fewer-regime explanation).
const FitResult& better_of(const FitResult& direct, const FitResult& wom);

/// Runs both fits and keeps the one with smaller NMSE via better_of. If one
/// fit raises, the other is returned; if both raise, BothFitsFailedError
/// carries the two diagnostics.
FitResult select_best(const Trace& trace, double n, const FitOptions& opts = {});

}  // namespace popdyn::fit
