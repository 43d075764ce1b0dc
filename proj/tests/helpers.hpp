// Shared oracles and fixtures for the test suite. Everything here is
// deliberately independent of the production formulas it checks: pose maps
// are integrated numerically, tangent operators come from their defining
// series, models are rebuilt by hand instead of reusing the data files.

#pragma once

#include <chrono>
#include <random>
#include <vector>

#include "rodstatics/scenario.hpp"

namespace rodtest {

using namespace rodstatics;

// -----------------------------------------------------------------------------
// Random sampling
// -----------------------------------------------------------------------------

[[nodiscard]] inline std::mt19937& rng() {
  static std::mt19937 gen(20240817u);
  return gen;
}

[[nodiscard]] inline Vector3d random_vec3(std::mt19937& gen, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  return {u(gen), u(gen), u(gen)};
}

[[nodiscard]] inline Twist random_twist(std::mt19937& gen, double ang,
                                        double lin) {
  return make_twist(random_vec3(gen, ang), random_vec3(gen, lin));
}

[[nodiscard]] inline Pose random_pose(std::mt19937& gen, double ang,
                                      double lin) {
  return exp_se3(random_twist(gen, ang, lin));
}

// -----------------------------------------------------------------------------
// ODE oracle: integrate g' = g * hat(strain(s)) with classic RK4 on the raw
// 4x4 matrices, no group structure used.
// -----------------------------------------------------------------------------

template <class StrainFn>
[[nodiscard]] Matrix4d integrate_pose_ode(const Matrix4d& g0, StrainFn strain,
                                          double s0, double s1, int steps) {
  Matrix4d g = g0;
  const double dt = (s1 - s0) / steps;
  const auto f = [&](double s, const Matrix4d& y) -> Matrix4d {
    return y * hat(strain(s));
  };
  for (int i = 0; i < steps; ++i) {
    const double s = s0 + i * dt;
    const Matrix4d k1 = f(s, g);
    const Matrix4d k2 = f(s + 0.5 * dt, g + 0.5 * dt * k1);
    const Matrix4d k3 = f(s + 0.5 * dt, g + 0.5 * dt * k2);
    const Matrix4d k4 = f(s + dt, g + dt * k3);
    g += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return g;
}

/// End pose of a linear strain field over [0, h], by brute integration.
[[nodiscard]] inline Matrix4d integrate_linear_strain(const Pose& start,
                                                      const Twist& mean,
                                                      const Twist& slope,
                                                      double h, int steps) {
  const auto strain = [&](double s) -> Twist {
    return mean + (s - 0.5 * h) * slope;
  };
  return integrate_pose_ode(start.matrix(), strain, 0.0, h, steps);
}

[[nodiscard]] inline double pose_matrix_error(const Pose& g,
                                              const Matrix4d& m) {
  return (g.matrix() - m).cwiseAbs().maxCoeff();
}

// -----------------------------------------------------------------------------
// Series oracles for the tangent operators
// -----------------------------------------------------------------------------

/// dexp as its defining series sum ad^j / (j+1)!, far past convergence.
[[nodiscard]] inline Matrix6d dexp_series_oracle(const Twist& t) {
  const Matrix6d ad = adjoint_algebra(t);
  Matrix6d power = Matrix6d::Identity();
  Matrix6d sum = Matrix6d::Zero();
  double inv_fact = 1.0;
  for (int j = 0; j <= 40; ++j) {
    inv_fact /= static_cast<double>(j + 1);
    sum += inv_fact * power;
    power = (power * ad).eval();
  }
  return sum;
}

/// dexp_inv as the Bernoulli series truncated at j = 8; only trustworthy
/// for small rotation angles, which is exactly where it is used.
[[nodiscard]] inline Matrix6d dexp_inv_bernoulli_oracle(const Twist& t) {
  // B_j / j! for j = 0..8; odd entries beyond the first vanish.
  static const double kCoeff[] = {
      1.0, -1.0 / 2.0, 1.0 / 12.0, 0.0, -1.0 / 720.0,
      0.0, 1.0 / 30240.0, 0.0, -1.0 / 1209600.0};
  const Matrix6d ad = adjoint_algebra(t);
  Matrix6d power = Matrix6d::Identity();
  Matrix6d sum = Matrix6d::Zero();
  for (double c : kCoeff) {
    if (c != 0.0) {
      sum += c * power;
    }
    power = (power * ad).eval();
  }
  return sum;
}

// -----------------------------------------------------------------------------
// Finite differences
// -----------------------------------------------------------------------------

/// Central difference of a scalar-valued function of one real parameter.
template <class Fn>
[[nodiscard]] double central_diff(Fn f, double eps) {
  return (f(eps) - f(-eps)) / (2.0 * eps);
}

/// Best relative error of `approx` against central differences of f over a
/// sweep of step sizes, for checks whose optimal step is state dependent.
template <class Fn>
[[nodiscard]] double fd_relative_error(Fn f, double approx, double scale,
                                       std::initializer_list<double> steps = {
                                           1e-4, 1e-5, 1e-6, 1e-7}) {
  double best = std::numeric_limits<double>::infinity();
  for (double eps : steps) {
    const double fd = central_diff(f, eps);
    best = std::min(best, std::abs(fd - approx) / scale);
  }
  return best;
}

// -----------------------------------------------------------------------------
// Models
// -----------------------------------------------------------------------------

/// The bench prototype rebuilt in code: three tangential motor axes on a
/// 0.05 m circle, six vertical rods of four 0.03125 m elements, platform
/// points directly above the base points, end-effector frame at z = 0.125.
/// Matches data/prototype.json value for value.
[[nodiscard]] inline RobotModel make_prototype_model() {
  const double radius = 0.05;
  const double offset = 0.016;
  const double h = 0.03125;
  const int elements = 4;
  const double s3 = std::sqrt(3.0) / 2.0;
  const double trig[3][2] = {{1.0, 0.0}, {-0.5, s3}, {-0.5, -s3}};

  SectionParams section;
  section.youngs_modulus = 1.13e10;
  section.diameter = 1e-3;
  const ElementMaterial material(section_stiffness(section),
                                 ElementMaterial::straight_strain());

  RobotModel model;
  for (auto [c, s] : trig) {
    MotorAxis axis;
    axis.direction = Vector3d(-s, c, 0.0);
    axis.point = Vector3d(radius * c, radius * s, 0.0);
    model.motors.push_back(axis);
  }
  for (int m = 0; m < 3; ++m) {
    const auto [c, s] = trig[m];
    for (double sign : {1.0, -1.0}) {
      RodSpec rod;
      rod.element_count = elements;
      rod.element_length = h;
      rod.material = material;
      rod.motor_index = m;
      const Vector3d p(radius * c + sign * offset * -s,
                       radius * s + sign * offset * c, 0.0);
      rod.install_pose = Pose{Matrix3d::Identity(), p};
      rod.platform_attachment = Pose{Matrix3d::Identity(), p};
      model.rods.push_back(rod);
    }
  }
  validate_model(model);
  return model;
}

[[nodiscard]] inline double prototype_rod_length() { return 0.125; }

/// One vertical rod clamped between its motor and the platform; the smallest
/// topology with every coupling kind present.
[[nodiscard]] inline RobotModel make_single_rod_model(int elements = 2) {
  SectionParams section;
  section.youngs_modulus = 1.13e10;
  section.diameter = 1e-3;
  RobotModel model;
  MotorAxis axis;
  axis.direction = Vector3d::UnitX();
  axis.point = Vector3d::Zero();
  model.motors.push_back(axis);
  RodSpec rod;
  rod.element_count = elements;
  rod.element_length = 0.0625;
  rod.material = ElementMaterial(section_stiffness(section),
                                 ElementMaterial::straight_strain());
  rod.motor_index = 0;
  rod.install_pose = Pose::Identity();
  rod.platform_attachment = Pose::Identity();
  model.rods.push_back(rod);
  validate_model(model);
  return model;
}

/// Two motors, two rods of two elements each; small enough for dense
/// finite-difference sweeps of the assembled system.
[[nodiscard]] inline RobotModel make_toy_model() {
  SectionParams section;
  section.youngs_modulus = 1.13e10;
  section.diameter = 1e-3;
  const ElementMaterial material(section_stiffness(section),
                                 ElementMaterial::straight_strain());
  RobotModel model;
  for (double x : {-0.02, 0.02}) {
    MotorAxis axis;
    axis.direction = Vector3d::UnitY();
    axis.point = Vector3d(x, 0.0, 0.0);
    model.motors.push_back(axis);
  }
  for (int m = 0; m < 2; ++m) {
    RodSpec rod;
    rod.element_count = 2;
    rod.element_length = 0.0625;
    rod.material = material;
    rod.motor_index = m;
    rod.install_pose = Pose{Matrix3d::Identity(), model.motors[m].point};
    rod.platform_attachment =
        Pose{Matrix3d::Identity(), Vector3d(model.motors[m].point.x(), 0, 0)};
    model.rods.push_back(rod);
  }
  validate_model(model);
  return model;
}

/// The exact natural-strain assembly of any model whose rods are vertical
/// with identity install rotations: every node sits element_length above
/// its predecessor and the end-effector closes the loop exactly.
[[nodiscard]] inline GeneralizedState natural_vertical_state(
    const RobotModel& model) {
  GeneralizedState q;
  q.motor_angles = Eigen::VectorXd::Zero(model.motor_count());
  const RodSpec& first = model.rods.front();
  q.ee_pose = Pose{Matrix3d::Identity(),
                   first.install_pose.position +
                       Vector3d(0, 0, first.rod_length()) -
                       first.platform_attachment.position};
  for (const RodSpec& rod : model.rods) {
    std::vector<Pose> nodes;
    for (int j = 1; j < rod.element_count; ++j) {
      nodes.push_back(Pose{Matrix3d::Identity(),
                           rod.install_pose.position +
                               Vector3d(0, 0, j * rod.element_length)});
    }
    q.interior.push_back(nodes);
    q.slopes.push_back(
        std::vector<Twist>(rod.element_count, Twist::Zero()));
  }
  return q;
}

/// A state pushed away from the natural assembly by a reproducible tangent
/// perturbation of the non-motor coordinates.
[[nodiscard]] inline GeneralizedState perturbed_state(const RobotModel& model,
                                                      double pose_scale,
                                                      double slope_scale,
                                                      unsigned seed = 7u) {
  std::mt19937 gen(seed);
  const IndexMap idx(model);
  GeneralizedState q = natural_vertical_state(model);
  Eigen::VectorXd dq = Eigen::VectorXd::Zero(idx.dimension());
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = idx.motor_count(); i < idx.dimension(); ++i) {
    dq[i] = u(gen) * (i >= idx.slope_offset(0, 0) ? slope_scale : pose_scale);
  }
  return retract(model, q, dq);
}

// -----------------------------------------------------------------------------
// Global energy with loads frozen in place
// -----------------------------------------------------------------------------

/// Potential whose exact right-trivialized gradient at q0 is the assembled
/// residual: elastic energy minus sum F_i . log(g_i(q0)^-1 g_i(q)) with the
/// wrench set evaluated once at q0 and held fixed.
class FrozenLoadPotential {
 public:
  FrozenLoadPotential(const RobotModel& model, const GeneralizedState& q0,
                      const LoadSet& loads)
      : model_(model), q0_(q0), frozen_(external_wrenches(model, q0, loads)) {}

  [[nodiscard]] double operator()(const GeneralizedState& q) const {
    double u = total_elastic_energy(model_, q);
    for (const auto& [node, wrench] : frozen_) {
      const Pose rel = node_pose(model_, q0_, node).inverse() *
                       node_pose(model_, q, node);
      u -= wrench.dot(log_se3(rel));
    }
    return u;
  }

 private:
  const RobotModel& model_;
  GeneralizedState q0_;
  std::vector<std::pair<NodeId, Wrench>> frozen_;
};

// -----------------------------------------------------------------------------
// Circle fit
// -----------------------------------------------------------------------------

struct CircleFit {
  Vector3d center = Vector3d::Zero();
  double radius = 0.0;
  double max_deviation = 0.0;
};

/// Least-squares circle through 3D points: fit the best plane through the
/// centroid, project, then solve the algebraic (Kasa) circle fit in-plane.
[[nodiscard]] inline CircleFit fit_circle(const std::vector<Vector3d>& pts) {
  const int n = static_cast<int>(pts.size());
  Vector3d centroid = Vector3d::Zero();
  for (const Vector3d& p : pts) {
    centroid += p;
  }
  centroid /= n;
  Eigen::MatrixXd centered(n, 3);
  for (int i = 0; i < n; ++i) {
    centered.row(i) = (pts[i] - centroid).transpose();
  }
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeFullV);
  const Vector3d e1 = svd.matrixV().col(0);
  const Vector3d e2 = svd.matrixV().col(1);

  Eigen::MatrixXd a(n, 3);
  Eigen::VectorXd b(n);
  for (int i = 0; i < n; ++i) {
    const double x = centered.row(i).dot(e1);
    const double y = centered.row(i).dot(e2);
    a.row(i) << 2.0 * x, 2.0 * y, 1.0;
    b[i] = x * x + y * y;
  }
  const Eigen::Vector3d sol =
      a.colPivHouseholderQr().solve(b);
  CircleFit fit;
  fit.radius = std::sqrt(sol[2] + sol[0] * sol[0] + sol[1] * sol[1]);
  fit.center = centroid + sol[0] * e1 + sol[1] * e2;
  for (const Vector3d& p : pts) {
    const double x = (p - fit.center).dot(e1);
    const double y = (p - fit.center).dot(e2);
    fit.max_deviation = std::max(
        fit.max_deviation, std::abs(std::hypot(x, y) - fit.radius));
  }
  return fit;
}

// -----------------------------------------------------------------------------
// Timing
// -----------------------------------------------------------------------------

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  [[nodiscard]] double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace rodtest
