#pragma once

#include "facefit/camera.hpp"
#include "facefit/image.hpp"
#include "facefit/mesh.hpp"
#include "facefit/shading.hpp"

namespace facefit {

struct SplatResult {
    Image image;
    std::vector<bool> coverage; // per pixel, row-major
};

/// Z-buffered nearest-pixel splat of visible, shaded vertices. Debug and
/// synthetic-data output only; the fitting loss never rasterizes.
/// `splat_radius` paints the (2r+1)^2 block around the nearest pixel with
/// the same depth test (r = 0 is a single pixel).
SplatResult render_pointsplat(const Mesh& mesh, const RigidPose& pose, const Camera& camera,
                              const VecX& gamma, int splat_radius = 0);

/// Fill uncovered pixels adjacent to covered ones with the average of
/// their covered neighbors, `rounds` times. Synthetic-data plumbing.
void fill_holes(SplatResult& splat, int rounds);

/// Per-vertex color overrides for the debug rows: shading-only
/// (reflectance = 1) and camera-space normals mapped to (n+1)/2.
VecX shading_only_colors(const Mesh& mesh, const Vec3& omega, const VecX& gamma);
VecX normal_colors(const Mesh& mesh, const Vec3& omega);

/// Splat arbitrary per-vertex colors with the same visibility rules.
SplatResult render_colors_pointsplat(const VecX& colors, const Mesh& mesh, const RigidPose& pose,
                                     const Camera& camera, int splat_radius = 0);

} // namespace facefit
