#pragma once

#include <vector>

#include "facefit/camera.hpp"
#include "facefit/types.hpp"

namespace facefit {

/// c_i = b_i * sum_j gamma_j H_j(R(omega) n_i) per channel. gamma is
/// channel-major: entries 0-8 light the R channel, 9-17 G, 18-26 B.
/// reflectance/normals are flat 3N; returns flat 3N colors.
VecX shade_vertices(const VecX& reflectance, const VecX& normals, const Vec3& omega,
                    const VecX& gamma);

struct VisibilityMask {
    std::vector<bool> visible;
    int count = 0; // |V|
};

/// A vertex is visible when it projects inside the frustum and its
/// camera-space normal faces the camera: dot(R n_i, p_i) < 0 with p_i the
/// camera-space position (the view direction toward the camera is -p_i).
VisibilityMask visibility_mask(const VecX& normals, const Vec3& omega,
                               const VecX& camera_positions,
                               const ProjectedVertices& projected);

} // namespace facefit
