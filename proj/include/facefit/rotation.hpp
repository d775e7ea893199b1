#pragma once

#include "facefit/types.hpp"

namespace facefit {

Mat3 skew(const Vec3& v);

/// Rodrigues formula. Below ||omega|| = 1e-8 falls back to the
/// second-order Taylor expansion so the map stays smooth at zero.
Mat3 rotation_from_axis_angle(const Vec3& omega);

/// Left Jacobian of the exponential map: d exp([w + dw]x) =
/// [J_l(w) dw]x exp([w]x). Used for the compact closed-form rotation
/// derivatives.
Mat3 so3_left_jacobian(const Vec3& omega);

/// Derivative of R(omega) * v with respect to omega: the 3x3 matrix
/// -[R v]x * J_l(omega).
Mat3 rotate_point_jacobian(const Vec3& omega, const Mat3& rotation, const Vec3& v);

/// Map omega to the equivalent axis-angle with ||omega|| < pi.
Vec3 canonicalize_axis_angle(const Vec3& omega);

} // namespace facefit
