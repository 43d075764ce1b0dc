// Equilibrium solver.
//
// Newton iteration directly on the product manifold of motor angles, node
// poses and strain slopes. Pose blocks update through the group exponential
// (right translation), everything else additively, so no chart switching or
// constraint bookkeeping is needed. The tangent system uses the assembled
// frozen-Jacobian stiffness; a residual-norm line search and an adaptive
// diagonal shift keep steps productive away from the solution.

#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>
#include <vector>

#include "robot.hpp"

namespace rodstatics {

struct SolverConfig {
  enum class ThetaMode { Prescribed, Free };

  /// Prescribed keeps the motor angles fixed and removes their rows and
  /// columns from the Newton system; Free solves for them as unknowns.
  ThetaMode theta_mode = ThetaMode::Prescribed;
  double residual_tolerance = 1e-9;
  int max_iterations = 50;
  double line_search_factor = 0.5;
  int max_halvings = 20;
  double levenberg_initial = 1e-8;
  double levenberg_growth = 10.0;
  int levenberg_budget = 12;
  /// Rotation blocks are polar-projected back onto SO(3) whenever their
  /// orthogonality drift exceeds this.
  double orthogonality_drift = 1e-12;
};

struct IterationDiagnostics {
  double step_norm = 0.0;
  int halvings = 0;
  int levenberg_shifts = 0;
  double levenberg_mu = 0.0;
};

struct SolveReport {
  bool converged = false;
  int iterations = 0;
  /// Residual norms, entry 0 at the initial state, one entry per accepted
  /// step after that. The last entry is below tolerance iff converged.
  std::vector<double> residual_history;
  GeneralizedState final_state;
  std::vector<IterationDiagnostics> diagnostics;
  /// Smallest eigenvalue of the reduced tangent at the solution; a second
  /// order diagnostic only, never acted on.
  double tangent_min_eigenvalue = std::numeric_limits<double>::quiet_NaN();
};

/// Iteration budget or line search exhausted without meeting the tolerance.
/// Carries the full report up to the failure.
class NoConvergence final : public Error {
 public:
  NoConvergence(const std::string& msg, SolveReport report)
      : Error(msg), report_(std::move(report)) {}
  [[nodiscard]] const SolveReport& report() const { return report_; }

 private:
  SolveReport report_;
};

// =============================================================================
// Newton step
// =============================================================================

/**
 * @brief Solve K dq = -r by symmetric factorization.
 *
 * On factorization failure (or a solution that does not actually satisfy the
 * system, which is how LDLT misbehaves on indefinite matrices) the system is
 * re-solved with K + mu*I, growing mu from levenberg_initial by
 * levenberg_growth up to levenberg_budget attempts before SingularTangent.
 */
[[nodiscard]] inline Eigen::VectorXd newton_step(
    const Eigen::MatrixXd& k, const Eigen::VectorXd& r,
    const SolverConfig& config, IterationDiagnostics* diag = nullptr) {
  const double rnorm = r.norm();
  if (rnorm == 0.0) {
    return Eigen::VectorXd::Zero(r.size());
  }
  const double knorm = k.cwiseAbs().rowwise().sum().maxCoeff();
  double mu = 0.0;
  for (int attempt = 0; attempt <= config.levenberg_budget; ++attempt) {
    Eigen::MatrixXd shifted = k;
    if (mu > 0.0) {
      shifted.diagonal().array() += mu;
    }
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(shifted);
    if (ldlt.info() == Eigen::Success) {
      const Eigen::VectorXd dq = ldlt.solve(-r);
      const double defect = (shifted * dq + r).norm();
      if (dq.allFinite() &&
          defect <= 1e-8 * (rnorm + (knorm + mu) * dq.norm())) {
        if (diag != nullptr) {
          diag->levenberg_shifts = attempt;
          diag->levenberg_mu = mu;
        }
        return dq;
      }
    }
    mu = (mu == 0.0) ? config.levenberg_initial : mu * config.levenberg_growth;
  }
  throw SingularTangent(
      "newton_step: tangent could not be factorized within the shift budget");
}

// =============================================================================
// Retraction
// =============================================================================

namespace detail {

inline void renormalize(Pose& g, double drift_tol) {
  const Matrix3d drift =
      g.rotation.transpose() * g.rotation - Matrix3d::Identity();
  if (drift.cwiseAbs().maxCoeff() > drift_tol) {
    g.rotation = project_rotation(g.rotation);
  }
}

}  // namespace detail

/**
 * @brief Move a state along a full-dimension tangent vector.
 *
 * Pose blocks via g <- g * exp(hat(dz)), angles and slopes additively.
 * A zero vector returns the state bit-identically.
 */
[[nodiscard]] inline GeneralizedState retract(const RobotModel& model,
                                              const GeneralizedState& q,
                                              const Eigen::VectorXd& dq,
                                              double drift_tol = 1e-12) {
  const IndexMap idx(model);
  if (dq.size() != idx.dimension()) {
    throw Error("retract: tangent vector has the wrong dimension");
  }
  GeneralizedState out = q;
  out.motor_angles += dq.head(idx.motor_count());
  out.ee_pose = q.ee_pose * exp_se3(dq.segment<6>(idx.ee_offset()));
  detail::renormalize(out.ee_pose, drift_tol);
  for (int k = 0; k < model.rod_count(); ++k) {
    for (int j = 1; j < model.rods[k].element_count; ++j) {
      Pose& g = out.interior[k][j - 1];
      g = g * exp_se3(dq.segment<6>(idx.interior_offset(k, j)));
      detail::renormalize(g, drift_tol);
    }
    for (int e = 0; e < model.rods[k].element_count; ++e) {
      out.slopes[k][e] += dq.segment<6>(idx.slope_offset(k, e));
    }
  }
  return out;
}

// =============================================================================
// Initial guess
// =============================================================================

/**
 * @brief Straight-rod starting state for given motor angles.
 *
 * Base nodes come from the embeddings. The end-effector starts at the mean
 * of where each rod's natural (straight) tip would put it; interior nodes
 * interpolate the SE(3) geodesic between the two boundary nodes; slopes are
 * zero.
 */
[[nodiscard]] inline GeneralizedState initial_guess(
    const RobotModel& model, const Eigen::VectorXd& theta) {
  validate_model(model);
  if (theta.size() != model.motor_count()) {
    throw Error("initial_guess: angle count does not match the motor count");
  }
  GeneralizedState q;
  q.motor_angles = theta;

  std::vector<Pose> bases;
  bases.reserve(model.rods.size());
  Vector3d mean_pos = Vector3d::Zero();
  Matrix3d mean_rot = Matrix3d::Zero();
  for (const RodSpec& rod : model.rods) {
    const BaseEmbedding base = base_embedding(
        rod, model.motors[rod.motor_index], theta[rod.motor_index]);
    bases.push_back(base.pose);
    const Pose tip =
        base.pose * exp_se3(rod.rod_length() * rod.material.natural_strain);
    const Pose est = tip * rod.platform_attachment.inverse();
    mean_pos += est.position;
    mean_rot += est.rotation;
  }
  const double inv_n = 1.0 / static_cast<double>(model.rod_count());
  q.ee_pose.position = inv_n * mean_pos;
  q.ee_pose.rotation = inv_n * mean_rot;
  detail::renormalize(q.ee_pose, 1e-12);

  q.interior.resize(model.rods.size());
  q.slopes.resize(model.rods.size());
  for (int k = 0; k < model.rod_count(); ++k) {
    const RodSpec& rod = model.rods[k];
    const int n = rod.element_count;
    const Pose tip = q.ee_pose * rod.platform_attachment;
    const Twist rel = log_se3(bases[k].inverse() * tip);
    q.interior[k].reserve(n - 1);
    for (int j = 1; j < n; ++j) {
      const double frac = static_cast<double>(j) / static_cast<double>(n);
      q.interior[k].push_back(bases[k] * exp_se3(frac * rel));
    }
    q.slopes[k].assign(n, Twist::Zero());
  }
  return q;
}

// =============================================================================
// Solve
// =============================================================================

/**
 * @brief Newton iteration from q0 to an equilibrium.
 *
 * Terminates on the residual tolerance. Accepted iterates have strictly
 * decreasing residual norm; a step that cannot reduce it within the halving
 * budget, or an exhausted iteration budget, raises NoConvergence with the
 * report attached. SingularTangent from the linear solver propagates.
 */
[[nodiscard]] inline SolveReport solve(const RobotModel& model,
                                       const GeneralizedState& q0,
                                       const LoadSet& loads,
                                       const SolverConfig& config = {}) {
  const IndexMap idx(model);
  const bool prescribed =
      config.theta_mode == SolverConfig::ThetaMode::Prescribed;
  const int slack = prescribed ? idx.motor_count() : 0;
  const int dim = idx.dimension();

  SolveReport report;
  report.final_state = q0;
  GeneralizedState q = q0;
  Eigen::VectorXd r = assemble_residual(model, q, loads);
  double rnorm = r.norm();
  report.residual_history.push_back(rnorm);

  while (rnorm >= config.residual_tolerance &&
         report.iterations < config.max_iterations) {
    const Eigen::MatrixXd kt = assemble_tangent(model, q);
    IterationDiagnostics diag;
    const Eigen::VectorXd step_reduced =
        newton_step(kt.bottomRightCorner(dim - slack, dim - slack),
                    r.tail(dim - slack), config, &diag);
    Eigen::VectorXd step = Eigen::VectorXd::Zero(dim);
    step.tail(dim - slack) = step_reduced;

    double alpha = 1.0;
    bool accepted = false;
    for (int halving = 0; halving <= config.max_halvings; ++halving) {
      GeneralizedState trial =
          retract(model, q, alpha * step, config.orthogonality_drift);
      double trial_norm = std::numeric_limits<double>::infinity();
      bool usable = true;
      Eigen::VectorXd trial_r;
      try {
        trial_r = assemble_residual(model, trial, loads);
        trial_norm = trial_r.norm();
      } catch (const Error&) {
        usable = false;  // step left the element trust region; shorten it
      }
      if (usable && trial_norm < rnorm) {
        diag.step_norm = alpha * step.norm();
        diag.halvings = halving;
        q = std::move(trial);
        r = std::move(trial_r);
        rnorm = trial_norm;
        accepted = true;
        break;
      }
      alpha *= config.line_search_factor;
    }
    if (!accepted) {
      report.final_state = q;
      throw NoConvergence("solve: line search could not reduce the residual",
                          report);
    }
    report.residual_history.push_back(rnorm);
    report.diagnostics.push_back(diag);
    ++report.iterations;
  }

  report.final_state = q;
  report.converged = rnorm < config.residual_tolerance;
  if (!report.converged) {
    throw NoConvergence("solve: iteration budget exhausted with residual " +
                            std::to_string(rnorm),
                        report);
  }
  const Eigen::MatrixXd kt = assemble_tangent(model, q);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
      kt.bottomRightCorner(dim - slack, dim - slack), Eigen::EigenvaluesOnly);
  report.tangent_min_eigenvalue = es.eigenvalues().minCoeff();
  return report;
}

}  // namespace rodstatics
