#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <cmath>
#include <numbers>

#include "actdisc/error.hpp"

namespace actdisc {

template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;

template <typename Scalar>
struct EulerXYZ {
  Scalar alpha{};  // about x
  Scalar beta{};   // about y
  Scalar gamma{};  // about z
};

// Bone from joint j to joint i: P_i - P_j.
template <typename DerivedA, typename DerivedB>
auto bone_vector(const Eigen::MatrixBase<DerivedA>& p_i, const Eigen::MatrixBase<DerivedB>& p_j) {
  return (p_i - p_j).eval();
}

// Angle between two bones in degrees, shifted into (180, 360]:
// 180 for parallel bones, 270 for perpendicular, 360 for anti-parallel.
template <typename Scalar>
Scalar bone_angle(const Vector3<Scalar>& a, const Vector3<Scalar>& b) {
  if (!(a.norm() > Scalar(0)) || !(b.norm() > Scalar(0))) throw Error("zero-length bone");
  const Scalar rad = std::atan2(a.cross(b).norm(), a.dot(b));
  return Scalar(180) * rad / std::numbers::pi_v<Scalar> + Scalar(180);
}

// R = Rx(alpha) * Ry(beta) * Rz(gamma), angles in degrees.
template <typename Scalar>
Matrix3<Scalar> compose_euler_xyz(const EulerXYZ<Scalar>& e) {
  constexpr Scalar to_rad = std::numbers::pi_v<Scalar> / Scalar(180);
  using AA = Eigen::AngleAxis<Scalar>;
  return (AA(e.alpha * to_rad, Vector3<Scalar>::UnitX()) *
          AA(e.beta * to_rad, Vector3<Scalar>::UnitY()) *
          AA(e.gamma * to_rad, Vector3<Scalar>::UnitZ()))
      .toRotationMatrix();
}

// Inverse of compose_euler_xyz. beta lies in [-90, 90]; at gimbal lock alpha is 0.
template <typename Scalar>
EulerXYZ<Scalar> decompose_euler_xyz(const Matrix3<Scalar>& r) {
  constexpr Scalar to_deg = Scalar(180) / std::numbers::pi_v<Scalar>;
  const Scalar cb = std::hypot(r(0, 0), r(0, 1));
  EulerXYZ<Scalar> e;
  e.beta = std::atan2(r(0, 2), cb) * to_deg;
  if (cb > Scalar(1e-12)) {
    e.alpha = std::atan2(-r(1, 2), r(2, 2)) * to_deg;
    e.gamma = std::atan2(-r(0, 1), r(0, 0)) * to_deg;
  } else {
    e.alpha = Scalar(0);
    e.gamma = std::atan2(r(1, 0), r(1, 1)) * to_deg;
  }
  // Keep the representation free of negative zeros.
  e.alpha += Scalar(0);
  e.beta += Scalar(0);
  e.gamma += Scalar(0);
  return e;
}

// Minimal rotation taking the direction of `a` onto the direction of `b`.
template <typename Scalar>
Matrix3<Scalar> aligning_rotation(const Vector3<Scalar>& a, const Vector3<Scalar>& b) {
  if (!(a.norm() > Scalar(0)) || !(b.norm() > Scalar(0))) throw Error("zero-length bone");
  const Vector3<Scalar> ua = a.normalized();
  const Vector3<Scalar> ub = b.normalized();
  const Vector3<Scalar> axis = ua.cross(ub);
  const Scalar s = axis.norm();
  const Scalar c = ua.dot(ub);
  constexpr Scalar eps = Scalar(1e-12);
  if (s <= eps && c > 0) return Matrix3<Scalar>::Identity();
  if (s <= eps) {
    // Anti-parallel: half turn about the coordinate axis least aligned with a,
    // projected to be orthogonal to a.
    Eigen::Index k = 0;
    ua.cwiseAbs().minCoeff(&k);
    Vector3<Scalar> e = Vector3<Scalar>::Unit(k);
    const Vector3<Scalar> ortho = (e - e.dot(ua) * ua).normalized();
    return Eigen::AngleAxis<Scalar>(std::numbers::pi_v<Scalar>, ortho).toRotationMatrix();
  }
  return Eigen::AngleAxis<Scalar>(std::atan2(s, c), axis / s).toRotationMatrix();
}

template <typename Scalar>
EulerXYZ<Scalar> bone_rotation_angles(const Vector3<Scalar>& a, const Vector3<Scalar>& b) {
  return decompose_euler_xyz<Scalar>(aligning_rotation<Scalar>(a, b));
}

}  // namespace actdisc
