#include "facefit/shading.hpp"

#include "facefit/rotation.hpp"
#include "facefit/sh.hpp"

namespace facefit {

VecX shade_vertices(const VecX& reflectance, const VecX& normals, const Vec3& omega,
                    const VecX& gamma) {
    if (gamma.size() != dims::illumination)
        throw data_error("gamma must have 27 entries, got " + std::to_string(gamma.size()));
    if (reflectance.size() != normals.size())
        throw data_error("reflectance/normal vertex counts differ");
    const Mat3 rot = rotation_from_axis_angle(omega);
    const int n = static_cast<int>(normals.size() / 3);
    VecX colors(3 * n);
    for (int i = 0; i < n; ++i) {
        const Vec3 rotated = rot * normals.segment<3>(3 * i);
        const auto basis = sh_basis_unchecked(rotated);
        for (int ch = 0; ch < 3; ++ch) {
            double shade = 0.0;
            for (int j = 0; j < dims::sh_bands; ++j)
                shade += gamma[ch * dims::sh_bands + j] * basis[static_cast<std::size_t>(j)];
            colors[3 * i + ch] = reflectance[3 * i + ch] * shade;
        }
    }
    return colors;
}

VisibilityMask visibility_mask(const VecX& normals, const Vec3& omega,
                               const VecX& camera_positions,
                               const ProjectedVertices& projected) {
    const Mat3 rot = rotation_from_axis_angle(omega);
    const int n = static_cast<int>(normals.size() / 3);
    VisibilityMask mask;
    mask.visible.assign(static_cast<std::size_t>(n), false);
    for (int i = 0; i < n; ++i) {
        if (!projected.in_frustum[static_cast<std::size_t>(i)]) continue;
        const Vec3 rotated = rot * normals.segment<3>(3 * i);
        if (rotated.dot(camera_positions.segment<3>(3 * i)) < 0.0) {
            mask.visible[static_cast<std::size_t>(i)] = true;
            ++mask.count;
        }
    }
    return mask;
}

} // namespace facefit
