#pragma once

#include <vector>

#include "facefit/types.hpp"

namespace facefit {

/// Pinhole camera, right-handed, sitting at the origin and looking down
/// -z; a point is in front of the camera when its z is negative. The
/// principal point is fixed at the image center.
struct Camera {
    double focal_length = 0.0; // pixels
    int image_width = 0;
    int image_height = 0;
    double near = 0.01; // depth clip bounds, model units
    double far = 1000.0;

    Vec2 principal_point() const {
        return Vec2(0.5 * image_width, 0.5 * image_height);
    }

    /// f = 1.5 * max(W, H) unless overridden.
    static Camera with_default_focal(int width, int height) {
        Camera cam;
        cam.image_width = width;
        cam.image_height = height;
        cam.focal_length = 1.5 * std::max(width, height);
        return cam;
    }

    void validate() const {
        if (focal_length <= 0.0) throw data_error("camera focal length must be positive");
        if (image_width <= 0 || image_height <= 0) throw data_error("camera image size must be positive");
        if (!(near < far)) throw data_error("camera near plane must be closer than far plane");
    }
};

struct RigidPose {
    Vec3 omega = Vec3::Zero(); // axis-angle, ||omega|| < pi canonical
    Vec3 t = Vec3::Zero();
};

struct ProjectedVertices {
    std::vector<Vec2> uv;       // pixel coordinates after homogeneous division
    std::vector<double> depth;  // positive in front of the camera
    std::vector<bool> in_frustum;
};

/// x_i' = R(omega) x_i + t for every vertex. Positions are flat 3N.
VecX transform_points(const VecX& positions, const RigidPose& pose);

/// Perspective projection of camera-space points:
///   u = W/2 - f * x/z,  v = H/2 + f * y/z,  depth = -z.
/// in_frustum requires depth in (near, far) and uv inside [0,W) x [0,H).
ProjectedVertices project(const VecX& camera_positions, const Camera& camera);

/// Projection of a single camera-space point (no frustum test).
Vec2 project_point(const Vec3& p, const Camera& camera);

} // namespace facefit
