#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "facefit/errors.hpp"

namespace facefit {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

namespace dims {
inline constexpr int geometry = 80;   // alpha
inline constexpr int reflectance = 80; // beta
inline constexpr int expression = 64; // delta
inline constexpr int illumination = 27; // gamma, 9 per R/G/B channel
inline constexpr int rotation = 3;    // omega, axis-angle
inline constexpr int translation = 3; // t
inline constexpr int code = 257;

inline constexpr int alpha_offset = 0;
inline constexpr int beta_offset = 80;
inline constexpr int delta_offset = 160;
inline constexpr int gamma_offset = 224;
inline constexpr int omega_offset = 251;
inline constexpr int t_offset = 254;

inline constexpr int landmarks = 48;
inline constexpr int sh_bands = 9; // bands 0..2
} // namespace dims

/// The 257-d parameter record describing one face image under the
/// formation model: geometry, reflectance, expression, illumination,
/// rotation and translation.
struct CodeVector {
    VecX alpha = VecX::Zero(dims::geometry);
    VecX beta = VecX::Zero(dims::reflectance);
    VecX delta = VecX::Zero(dims::expression);
    VecX gamma = VecX::Zero(dims::illumination); // channel-major: 9 R, 9 G, 9 B
    Vec3 omega = Vec3::Zero();
    Vec3 t = Vec3::Zero();

    /// Flatten to one 257-vector in the fixed block order
    /// [alpha | beta | delta | gamma | omega | t].
    VecX to_flat() const {
        VecX out(dims::code);
        out.segment(dims::alpha_offset, dims::geometry) = alpha;
        out.segment(dims::beta_offset, dims::reflectance) = beta;
        out.segment(dims::delta_offset, dims::expression) = delta;
        out.segment(dims::gamma_offset, dims::illumination) = gamma;
        out.segment(dims::omega_offset, dims::rotation) = omega;
        out.segment(dims::t_offset, dims::translation) = t;
        return out;
    }

    static CodeVector from_flat(const VecX& flat) {
        if (flat.size() != dims::code)
            throw data_error("code vector must have 257 entries, got " +
                             std::to_string(flat.size()));
        CodeVector c;
        c.alpha = flat.segment(dims::alpha_offset, dims::geometry);
        c.beta = flat.segment(dims::beta_offset, dims::reflectance);
        c.delta = flat.segment(dims::delta_offset, dims::expression);
        c.gamma = flat.segment(dims::gamma_offset, dims::illumination);
        c.omega = flat.segment(dims::omega_offset, dims::rotation);
        c.t = flat.segment(dims::t_offset, dims::translation);
        return c;
    }

    bool all_finite() const { return to_flat().allFinite(); }
};

} // namespace facefit
