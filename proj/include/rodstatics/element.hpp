// Linear-strain rod element.
//
// Over an element of length h the body strain field is affine in arc length,
//   xi(s) = xibar + (s - h/2) * beta,
// and the end pose follows from the start pose through a fourth-order Magnus
// truncation of the product integral:
//   pose_b = pose_a * exp(hat(A(beta) xibar)),
//   A(beta) = h*I - (h^3/12) ad(beta).
// The local error of that map is O(h^5). Inverting it gives the mean strain
// from the two end poses, which is what the energy, residual and tangent
// below are built on.

#pragma once

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "lie.hpp"

namespace rodstatics {

/**
 * @brief Section stiffness and natural strain of an element.
 *
 * The constructor symmetrizes the stiffness and rejects matrices that are
 * asymmetric beyond 1e-12 (relative) or not positive definite.
 */
struct ElementMaterial {
  Matrix6d stiffness = Matrix6d::Identity();
  Twist natural_strain = straight_strain();

  /// Natural strain of a straight, untwisted rod: unit tangent along the
  /// third linear axis.
  [[nodiscard]] static Twist straight_strain() {
    return make_twist(Vector3d::Zero(), Vector3d::UnitZ());
  }

  ElementMaterial() = default;

  ElementMaterial(const Matrix6d& k, const Twist& xi0)
      : natural_strain(xi0) {
    const double scale = std::max(1.0, k.cwiseAbs().maxCoeff());
    if ((k - k.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
      throw Error("ElementMaterial: stiffness matrix is not symmetric");
    }
    stiffness = 0.5 * (k + k.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix6d> es(stiffness,
                                               Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() <= 0.0) {
      throw Error("ElementMaterial: stiffness matrix is not positive definite");
    }
  }
};

/// One element's unknowns: the two end poses and the strain slope.
struct ElementState {
  Pose pose_a;
  Pose pose_b;
  Twist slope = Twist::Zero();
  double length = 0.0;
};

/// Quantities recovered from an ElementState that everything downstream
/// shares: the mean strain, the integrated twist Omega = log(pose_a^-1
/// pose_b), the A matrix, and the right-trivialized Jacobians of the mean
/// strain with respect to (pose_a, pose_b, slope).
struct ElementKinematics {
  Twist mean_strain;
  Twist integrated_twist;
  Matrix6d a_matrix;
  Matrix6d j1, j2, j3;
};

/// Strain at arc length s in [0, length], measured from pose_a.
[[nodiscard]] inline Twist strain_at(const ElementState& e, const Twist& mean,
                                     double s) {
  if (s < -1e-12 || s > e.length + 1e-12) {
    throw OutOfElement("strain_at: s = " + std::to_string(s) +
                       " outside [0, " + std::to_string(e.length) + "]");
  }
  return mean + (s - 0.5 * e.length) * e.slope;
}

/// Integrated twist of the element for given mean strain and slope.
[[nodiscard]] inline Twist magnus_forward(const Twist& mean, const Twist& slope,
                                          double h) {
  return h * mean - (h * h * h / 12.0) * (adjoint_algebra(slope) * mean);
}

/**
 * @brief Recover mean strain and its Jacobians from an element state.
 *
 * Throws RotationNearPi from the logarithm, ElementRotationBound when the
 * relative rotation reaches pi/2, and SingularAMatrix when the condition
 * estimate of A exceeds 1e8.
 *
 * The Jacobians are exact derivatives of the recovery map under right
 * perturbations pose -> pose * exp(hat(dz)):
 *   j1 = -A^{-1} dexp_inv(-Omega) Ad(exp(-Omega)),
 *   j2 =  A^{-1} dexp_inv(-Omega),
 *   j3 = -(h^3/12) A^{-1} ad(xibar).
 */
[[nodiscard]] inline ElementKinematics recover_kinematics(
    const ElementState& e) {
  const Pose rel = e.pose_a.inverse() * e.pose_b;
  const double angle = rotation_angle(rel.rotation);
  if (angle >= M_PI / 2.0) {
    throw ElementRotationBound(
        "recover_kinematics: relative rotation " + std::to_string(angle) +
        " rad reaches the pi/2 element bound");
  }
  const Twist omega = log_se3(rel);

  const double h = e.length;
  const Matrix6d a = Matrix6d::Identity() * h -
                     (h * h * h / 12.0) * adjoint_algebra(e.slope);
  const Eigen::PartialPivLU<Matrix6d> lu(a);
  const Matrix6d a_inv = lu.inverse();
  const double cond = a.cwiseAbs().rowwise().sum().maxCoeff() *
                      a_inv.cwiseAbs().rowwise().sum().maxCoeff();
  if (!(cond < 1e8)) {
    throw SingularAMatrix("recover_kinematics: A-matrix condition estimate " +
                          std::to_string(cond) + " exceeds 1e8");
  }

  ElementKinematics kin;
  kin.integrated_twist = omega;
  kin.mean_strain = a_inv * omega;
  kin.a_matrix = a;
  kin.j2 = a_inv * dexp_inv(-omega);
  kin.j1 = -kin.j2 * adjoint_group(rel.inverse());
  kin.j3 = -(h * h * h / 12.0) * (a_inv * adjoint_algebra(kin.mean_strain));
  return kin;
}

/// Elastic energy: h/2 (xibar - xi0)' K (xibar - xi0) + h^3/24 beta' K beta.
[[nodiscard]] inline double element_energy(const ElementState& e,
                                           const ElementMaterial& m,
                                           const ElementKinematics& kin) {
  const double h = e.length;
  const Twist d = kin.mean_strain - m.natural_strain;
  return 0.5 * h * d.dot(m.stiffness * d) +
         (h * h * h / 24.0) * e.slope.dot(m.stiffness * e.slope);
}

using ElementVector = Eigen::Matrix<double, 18, 1>;
using ElementMatrix = Eigen::Matrix<double, 18, 18>;

/**
 * @brief Energy gradient with respect to (dz_a, dz_b, dbeta), stacked 18x1.
 *
 * Matches central finite differences of element_energy under right
 * perturbations to truncation accuracy; the tests pin that down.
 */
[[nodiscard]] inline ElementVector element_residual(
    const ElementState& e, const ElementMaterial& m,
    const ElementKinematics& kin) {
  const double h = e.length;
  const Twist kd = m.stiffness * (kin.mean_strain - m.natural_strain);
  ElementVector g;
  g.segment<6>(0) = h * (kin.j1.transpose() * kd);
  g.segment<6>(6) = h * (kin.j2.transpose() * kd);
  g.segment<6>(12) = h * (kin.j3.transpose() * kd) +
                     (h * h * h / 12.0) * (m.stiffness * e.slope);
  return g;
}

/**
 * @brief Tangent stiffness with the strain Jacobians held frozen.
 *
 * Block (i,j) is h * Ji' K Jj; block (3,3) additionally carries the
 * h^3/12 K slope term. The result is symmetric by construction: diagonal
 * blocks are explicitly symmetrized and the lower triangle mirrors the
 * upper one.
 */
[[nodiscard]] inline ElementMatrix element_tangent(
    const ElementState& e, const ElementMaterial& m,
    const ElementKinematics& kin) {
  const double h = e.length;
  const Matrix6d* j[3] = {&kin.j1, &kin.j2, &kin.j3};
  Matrix6d kj[3];
  for (int i = 0; i < 3; ++i) {
    kj[i] = m.stiffness * (*j[i]);
  }
  ElementMatrix out;
  for (int i = 0; i < 3; ++i) {
    for (int c = i; c < 3; ++c) {
      Matrix6d block = h * (j[i]->transpose() * kj[c]);
      if (c == 2 && i == 2) {
        block += (h * h * h / 12.0) * m.stiffness;
      }
      if (c == i) {
        block = 0.5 * (block + block.transpose()).eval();
        out.block<6, 6>(6 * i, 6 * i) = block;
      } else {
        out.block<6, 6>(6 * i, 6 * c) = block;
        out.block<6, 6>(6 * c, 6 * i) = block.transpose();
      }
    }
  }
  return out;
}

/**
 * @brief Pose at arc length s in [0, length], via the sub-interval Magnus
 * truncation of the same order as the forward map.
 *
 * Omega(s) = s*xibar + s(s-h)/2 * beta - (s^3/12) ad(beta) xibar, which
 * reproduces pose_a at s = 0 and pose_b at s = h.
 */
[[nodiscard]] inline Pose interpolate_pose(const ElementState& e,
                                           const ElementKinematics& kin,
                                           double s) {
  if (s < -1e-12 || s > e.length + 1e-12) {
    throw OutOfElement("interpolate_pose: s = " + std::to_string(s) +
                       " outside [0, " + std::to_string(e.length) + "]");
  }
  const double h = e.length;
  const Twist omega_s =
      s * kin.mean_strain + 0.5 * s * (s - h) * e.slope -
      (s * s * s / 12.0) * (adjoint_algebra(e.slope) * kin.mean_strain);
  return e.pose_a * exp_se3(omega_s);
}

}  // namespace rodstatics
