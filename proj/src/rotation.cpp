#include "facefit/rotation.hpp"

#include <cmath>

namespace facefit {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kPi = 3.1415926535897932384626433832795;
} // namespace

Mat3 skew(const Vec3& v) {
    Mat3 m;
    m << 0.0, -v.z(), v.y(),
         v.z(), 0.0, -v.x(),
        -v.y(), v.x(), 0.0;
    return m;
}

Mat3 rotation_from_axis_angle(const Vec3& omega) {
    const double theta = omega.norm();
    if (theta < 1e-8) {
        // R = I + [w]x + [w]x^2 / 2, error O(theta^3)
        const Mat3 k = skew(omega);
        return Mat3::Identity() + k + 0.5 * k * k;
    }
    const Mat3 k = skew(omega / theta);
    return Mat3::Identity() + std::sin(theta) * k + (1.0 - std::cos(theta)) * k * k;
}

Mat3 so3_left_jacobian(const Vec3& omega) {
    const double theta = omega.norm();
    const Mat3 k = skew(omega);
    if (theta < 1e-5) {
        return Mat3::Identity() + 0.5 * k + (1.0 / 6.0) * k * k;
    }
    const double t2 = theta * theta;
    const double a = (1.0 - std::cos(theta)) / t2;
    const double b = (theta - std::sin(theta)) / (t2 * theta);
    return Mat3::Identity() + a * k + b * k * k;
}

Mat3 rotate_point_jacobian(const Vec3& omega, const Mat3& rotation, const Vec3& v) {
    return -skew(rotation * v) * so3_left_jacobian(omega);
}

Vec3 canonicalize_axis_angle(const Vec3& omega) {
    double theta = omega.norm();
    if (theta < kPi) return omega;
    double reduced = std::fmod(theta, kTwoPi);
    if (reduced > kPi) reduced -= kTwoPi; // now in (-pi, pi]
    if (reduced >= kPi) reduced = kPi * (1.0 - 1e-15);
    return omega * (reduced / theta);
}

} // namespace facefit
