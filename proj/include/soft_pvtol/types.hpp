#pragma once

#include <Eigen/Dense>

namespace soft_pvtol {

template <typename T>
using Vector5 = Eigen::Matrix<T, 5, 1>;
template <typename T>
using Matrix5 = Eigen::Matrix<T, 5, 5>;

using Vector5d = Vector5<double>;
using Matrix5d = Matrix5<double>;
using Vector2d = Eigen::Vector2d;
using Vector4d = Eigen::Vector4d;

/// Indices into the generalized coordinates (x_v, z_v, theta, q_l, q_r).
enum Coord : int { kX = 0, kZ = 1, kTheta = 2, kQl = 3, kQr = 4 };

/// Generalized coordinates q.
using GenCoords = Vector5d;

/// Generalized forces (tau_x, tau_z, tau_theta, tau_l, tau_r).
using ControlVector = Vector5d;

struct GenState {
  GenCoords q = GenCoords::Zero();
  Vector5d qdot = Vector5d::Zero();
};

}  // namespace soft_pvtol
