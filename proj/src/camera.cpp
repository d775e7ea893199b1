#include "facefit/camera.hpp"

#include "facefit/rotation.hpp"

namespace facefit {

VecX transform_points(const VecX& positions, const RigidPose& pose) {
    const Mat3 rot = rotation_from_axis_angle(pose.omega);
    const int n = static_cast<int>(positions.size() / 3);
    VecX out(positions.size());
    for (int i = 0; i < n; ++i)
        out.segment<3>(3 * i) = rot * positions.segment<3>(3 * i) + pose.t;
    return out;
}

Vec2 project_point(const Vec3& p, const Camera& camera) {
    const Vec2 pp = camera.principal_point();
    return Vec2(pp.x() - camera.focal_length * p.x() / p.z(),
                pp.y() + camera.focal_length * p.y() / p.z());
}

ProjectedVertices project(const VecX& camera_positions, const Camera& camera) {
    camera.validate();
    const int n = static_cast<int>(camera_positions.size() / 3);
    ProjectedVertices out;
    out.uv.resize(static_cast<std::size_t>(n));
    out.depth.resize(static_cast<std::size_t>(n));
    out.in_frustum.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const Vec3 p = camera_positions.segment<3>(3 * i);
        const double d = -p.z(); // homogeneous coordinate, positive in front
        out.depth[static_cast<std::size_t>(i)] = d;
        if (p.z() == 0.0) {
            out.uv[static_cast<std::size_t>(i)] = Vec2::Zero();
            out.in_frustum[static_cast<std::size_t>(i)] = false;
            continue;
        }
        // uv is computed even behind the camera so landmark gradients stay
        // defined for wild poses; the frustum flag gates everything else.
        const Vec2 uv = project_point(p, camera);
        out.uv[static_cast<std::size_t>(i)] = uv;
        out.in_frustum[static_cast<std::size_t>(i)] =
            d > camera.near && d < camera.far && uv.x() >= 0.0 &&
            uv.x() < camera.image_width && uv.y() >= 0.0 && uv.y() < camera.image_height;
    }
    return out;
}

} // namespace facefit
