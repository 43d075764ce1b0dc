// SO(3)/SE(3) kernel: hat/vee isomorphisms, exponential and logarithm,
// group and algebra adjoints, and the tangent operator of the exponential.
//
// Twists are ordered [angular; linear] throughout, wrenches [moment; force],
// so that the duality pairing is a plain dot product.

#pragma once

#include <Eigen/Core>
#include <Eigen/SVD>
#include <cmath>

#include "errors.hpp"

namespace rodstatics {

using Eigen::Matrix3d;
using Eigen::Matrix4d;
using Eigen::Vector3d;
using Twist = Eigen::Matrix<double, 6, 1>;
using Wrench = Eigen::Matrix<double, 6, 1>;
using Matrix6d = Eigen::Matrix<double, 6, 6>;

[[nodiscard]] inline Vector3d angular(const Twist& t) { return t.head<3>(); }
[[nodiscard]] inline Vector3d linear(const Twist& t) { return t.tail<3>(); }

[[nodiscard]] inline Twist make_twist(const Vector3d& ang, const Vector3d& lin) {
  Twist t;
  t << ang, lin;
  return t;
}

// =============================================================================
// Pose
// =============================================================================

/**
 * @brief Rigid transform stored as rotation matrix plus position.
 *
 * Group composition and inverse are exact up to floating point; no
 * normalization happens implicitly. Long products should be renormalized
 * through project_rotation when the orthogonality drift grows.
 */
struct Pose {
  Matrix3d rotation = Matrix3d::Identity();
  Vector3d position = Vector3d::Zero();

  [[nodiscard]] static Pose Identity() { return Pose{}; }

  [[nodiscard]] Pose operator*(const Pose& other) const {
    return Pose{rotation * other.rotation,
                rotation * other.position + position};
  }

  [[nodiscard]] Pose inverse() const {
    return Pose{rotation.transpose(), -(rotation.transpose() * position)};
  }

  /// Apply the transform to a point.
  [[nodiscard]] Vector3d apply(const Vector3d& x) const {
    return rotation * x + position;
  }

  [[nodiscard]] Matrix4d matrix() const {
    Matrix4d m = Matrix4d::Identity();
    m.topLeftCorner<3, 3>() = rotation;
    m.topRightCorner<3, 1>() = position;
    return m;
  }
};

/// True when the rotation block is orthonormal with determinant +1 within tol.
[[nodiscard]] inline bool is_valid_pose(const Pose& g, double tol = 1e-10) {
  const Matrix3d drift =
      g.rotation.transpose() * g.rotation - Matrix3d::Identity();
  return drift.cwiseAbs().maxCoeff() <= tol &&
         std::abs(g.rotation.determinant() - 1.0) <= tol &&
         g.position.allFinite();
}

/// Nearest rotation matrix in the Frobenius sense (polar factor via SVD).
[[nodiscard]] inline Matrix3d project_rotation(const Matrix3d& m) {
  Eigen::JacobiSVD<Matrix3d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Matrix3d r = svd.matrixU() * svd.matrixV().transpose();
  if (r.determinant() < 0.0) {
    Matrix3d flip = Matrix3d::Identity();
    flip(2, 2) = -1.0;
    r = svd.matrixU() * flip * svd.matrixV().transpose();
  }
  return r;
}

// =============================================================================
// hat / vee
// =============================================================================

/// 3x3 skew matrix such that skew(a) * b = a x b.
[[nodiscard]] inline Matrix3d skew(const Vector3d& v) {
  Matrix3d s;
  // clang-format off
  s <<    0.0, -v.z(),  v.y(),
        v.z(),    0.0, -v.x(),
       -v.y(),  v.x(),    0.0;
  // clang-format on
  return s;
}

/// Twist to 4x4 se(3) matrix: [[skew(angular), linear]; [0, 0]].
[[nodiscard]] inline Matrix4d hat(const Twist& t) {
  Matrix4d m = Matrix4d::Zero();
  m.topLeftCorner<3, 3>() = skew(angular(t));
  m.topRightCorner<3, 1>() = linear(t);
  return m;
}

/**
 * @brief Inverse of hat.
 *
 * Rejects matrices that deviate from the se(3) sparsity pattern (skew upper
 * left, zero bottom row) by more than 1e-12 relative to the matrix scale.
 */
[[nodiscard]] inline Twist vee(const Matrix4d& m) {
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  const Matrix3d w = m.topLeftCorner<3, 3>();
  const double pattern =
      std::max((w + w.transpose()).cwiseAbs().maxCoeff(),
               m.bottomRows<1>().cwiseAbs().maxCoeff());
  if (!(pattern <= 1e-12 * scale)) {
    throw Error("vee: matrix does not have the se(3) sparsity pattern");
  }
  return make_twist(Vector3d(m(2, 1), m(0, 2), m(1, 0)),
                    m.topRightCorner<3, 1>());
}

// =============================================================================
// SO(3) exp / log
// =============================================================================

namespace detail {

// Coefficients of the Rodrigues family, with Taylor branches below 1e-4 rad:
//   a = sin(th)/th, b = (1-cos(th))/th^2, c = (th-sin(th))/th^3.
struct RotationCoeffs {
  double a, b, c;
};

[[nodiscard]] inline RotationCoeffs rotation_coeffs(double th) {
  if (th < 1e-4) {
    const double t2 = th * th;
    return {1.0 - t2 / 6.0 + t2 * t2 / 120.0,
            0.5 - t2 / 24.0 + t2 * t2 / 720.0,
            1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0};
  }
  const double s = std::sin(th);
  const double c = std::cos(th);
  return {s / th, (1.0 - c) / (th * th), (th - s) / (th * th * th)};
}

// Coefficient e of V^{-1} = I - skew/2 + e * skew^2.
[[nodiscard]] inline double vinv_coeff(double th) {
  if (th < 1e-4) {
    const double t2 = th * th;
    return 1.0 / 12.0 + t2 / 720.0 + t2 * t2 / 30240.0;
  }
  return 1.0 / (th * th) -
         (1.0 + std::cos(th)) / (2.0 * th * std::sin(th));
}

}  // namespace detail

[[nodiscard]] inline Matrix3d so3_exp(const Vector3d& w) {
  const double th = w.norm();
  const auto [a, b, c] = detail::rotation_coeffs(th);
  (void)c;
  const Matrix3d s = skew(w);
  return Matrix3d::Identity() + a * s + b * s * s;
}

/**
 * @brief Principal logarithm of a rotation matrix.
 *
 * The angle is extracted with atan2 of the skew part against the trace, which
 * stays accurate near zero. Within 1e-6 rad of pi the axis is ill-determined
 * and RotationNearPi is thrown.
 */
[[nodiscard]] inline Vector3d so3_log(const Matrix3d& r) {
  const double c = std::clamp(0.5 * (r.trace() - 1.0), -1.0, 1.0);
  const Vector3d w(0.5 * (r(2, 1) - r(1, 2)), 0.5 * (r(0, 2) - r(2, 0)),
                   0.5 * (r(1, 0) - r(0, 1)));
  const double s = w.norm();
  const double th = std::atan2(s, c);
  if (th > M_PI - 1e-6) {
    throw RotationNearPi("so3_log: rotation angle " + std::to_string(th) +
                         " is within 1e-6 of pi");
  }
  if (th < 1e-6) {
    // th/sin(th) expansion; w already carries sin(th) * axis.
    return w * (1.0 + th * th / 6.0);
  }
  return w * (th / s);
}

[[nodiscard]] inline double rotation_angle(const Matrix3d& r) {
  const double c = std::clamp(0.5 * (r.trace() - 1.0), -1.0, 1.0);
  const Vector3d w(0.5 * (r(2, 1) - r(1, 2)), 0.5 * (r(0, 2) - r(2, 0)),
                   0.5 * (r(1, 0) - r(0, 1)));
  return std::atan2(w.norm(), c);
}

// =============================================================================
// SE(3) exp / log
// =============================================================================

[[nodiscard]] inline Pose exp_se3(const Twist& t) {
  const Vector3d w = angular(t);
  const double th = w.norm();
  const auto [a, b, c] = detail::rotation_coeffs(th);
  const Matrix3d s = skew(w);
  const Matrix3d s2 = s * s;
  const Matrix3d r = Matrix3d::Identity() + a * s + b * s2;
  const Matrix3d v = Matrix3d::Identity() + b * s + c * s2;
  return Pose{r, v * linear(t)};
}

/// Inverse of exp_se3 on the principal branch. Throws RotationNearPi.
[[nodiscard]] inline Twist log_se3(const Pose& g) {
  const Vector3d w = so3_log(g.rotation);
  const double th = w.norm();
  const Matrix3d s = skew(w);
  const Matrix3d vinv = Matrix3d::Identity() - 0.5 * s +
                        detail::vinv_coeff(th) * s * s;
  return make_twist(w, vinv * g.position);
}

// =============================================================================
// Adjoints
// =============================================================================

/// Group adjoint: Ad(g) * t = vee(g * hat(t) * g^{-1}), a 6x6 matrix
/// [[R, 0]; [skew(p) R, R]] in the [angular; linear] ordering.
[[nodiscard]] inline Matrix6d adjoint_group(const Pose& g) {
  Matrix6d a = Matrix6d::Zero();
  a.topLeftCorner<3, 3>() = g.rotation;
  a.bottomRightCorner<3, 3>() = g.rotation;
  a.bottomLeftCorner<3, 3>() = skew(g.position) * g.rotation;
  return a;
}

/// Algebra adjoint: ad(x) * y = vee([hat(x), hat(y)]),
/// [[skew(ang), 0]; [skew(lin), skew(ang)]].
[[nodiscard]] inline Matrix6d adjoint_algebra(const Twist& t) {
  Matrix6d a = Matrix6d::Zero();
  const Matrix3d sw = skew(angular(t));
  a.topLeftCorner<3, 3>() = sw;
  a.bottomRightCorner<3, 3>() = sw;
  a.bottomLeftCorner<3, 3>() = skew(linear(t));
  return a;
}

// =============================================================================
// Tangent operator of the exponential
// =============================================================================
//
// dexp is the right-trivialized derivative: for a curve x(t) in the algebra,
//   d/dt exp(hat(x)) = hat(dexp(x) xdot) * exp(hat(x)).
// Equivalently dexp(x) = sum_j ad(x)^j / (j+1)!. Its inverse carries the
// Bernoulli numbers. Both are computed in closed form from the SO(3) blocks;
// below 0.05 rad of rotation the mixed closed-form coefficients lose
// precision to cancellation, so a truncated power series in ad(x) is used
// there instead.

namespace detail {

[[nodiscard]] inline Matrix6d dexp_by_series(const Twist& t) {
  // 1/(j+1)! for j = 0..8. Truncation error is below 1e-13 for angles
  // under 0.05 rad.
  static constexpr double kInvFact[] = {
      1.0,           1.0 / 2.0,      1.0 / 6.0,       1.0 / 24.0,
      1.0 / 120.0,   1.0 / 720.0,    1.0 / 5040.0,    1.0 / 40320.0,
      1.0 / 362880.0};
  const Matrix6d a = adjoint_algebra(t);
  Matrix6d out = Matrix6d::Zero();
  Matrix6d p = Matrix6d::Identity();
  for (double coeff : kInvFact) {
    out += coeff * p;
    p = p * a;
  }
  return out;
}

[[nodiscard]] inline Matrix6d dexp_inv_by_series(const Twist& t) {
  // Bernoulli numbers B_j / j! for j = 0..8 (B1 = -1/2 convention).
  static constexpr double kBernoulli[] = {
      1.0,          -1.0 / 2.0,     1.0 / 12.0,     0.0,
      -1.0 / 720.0,  0.0,           1.0 / 30240.0,  0.0,
      -1.0 / 1209600.0};
  const Matrix6d a = adjoint_algebra(t);
  Matrix6d out = Matrix6d::Zero();
  Matrix6d p = Matrix6d::Identity();
  for (double coeff : kBernoulli) {
    if (coeff != 0.0) {
      out += coeff * p;
    }
    p = p * a;
  }
  return out;
}

// Mixed block of the closed-form dexp: the lower-left 3x3 coupling the
// linear part into the angular one.
[[nodiscard]] inline Matrix3d dexp_mixed_block(const Vector3d& w,
                                               const Vector3d& v, double th) {
  const Matrix3d sw = skew(w);
  const Matrix3d sv = skew(v);
  const double t2 = th * th;
  const double s1 = (th - std::sin(th)) / (t2 * th);
  const double s2 = (1.0 - 0.5 * t2 - std::cos(th)) / (t2 * t2);
  const double s3 = (th - std::sin(th) - t2 * th / 6.0) / (t2 * t2 * th);
  return 0.5 * sv + s1 * (sw * sv + sv * sw + sw * sv * sw) -
         s2 * (sw * sw * sv + sv * sw * sw - 3.0 * sw * sv * sw) -
         0.5 * (s2 - 3.0 * s3) * (sw * sv * sw * sw + sw * sw * sv * sw);
}

constexpr double kDexpSeriesAngle = 0.05;

}  // namespace detail

[[nodiscard]] inline Matrix6d dexp(const Twist& t) {
  const Vector3d w = angular(t);
  const double th = w.norm();
  if (th < detail::kDexpSeriesAngle) {
    return detail::dexp_by_series(t);
  }
  const auto [a, b, c] = detail::rotation_coeffs(th);
  (void)a;
  const Matrix3d sw = skew(w);
  const Matrix3d j = Matrix3d::Identity() + b * sw + c * sw * sw;
  Matrix6d d = Matrix6d::Zero();
  d.topLeftCorner<3, 3>() = j;
  d.bottomRightCorner<3, 3>() = j;
  d.bottomLeftCorner<3, 3>() = detail::dexp_mixed_block(w, linear(t), th);
  return d;
}

/**
 * @brief Inverse of dexp, requiring the rotation angle below pi.
 *
 * Computed block-wise: if dexp = [[J, 0]; [Q, J]] then the inverse is
 * [[J^{-1}, 0]; [-J^{-1} Q J^{-1}, J^{-1}]].
 */
[[nodiscard]] inline Matrix6d dexp_inv(const Twist& t) {
  const Vector3d w = angular(t);
  const double th = w.norm();
  if (th > M_PI - 1e-6) {
    throw RotationNearPi("dexp_inv: rotation angle " + std::to_string(th) +
                         " is within 1e-6 of pi");
  }
  if (th < detail::kDexpSeriesAngle) {
    return detail::dexp_inv_by_series(t);
  }
  const Matrix3d sw = skew(w);
  const Matrix3d jinv = Matrix3d::Identity() - 0.5 * sw +
                        detail::vinv_coeff(th) * sw * sw;
  const Matrix3d q = detail::dexp_mixed_block(w, linear(t), th);
  Matrix6d d = Matrix6d::Zero();
  d.topLeftCorner<3, 3>() = jinv;
  d.bottomRightCorner<3, 3>() = jinv;
  d.bottomLeftCorner<3, 3>() = -jinv * q * jinv;
  return d;
}

}  // namespace rodstatics
