#include "facefit/render.hpp"

#include <cmath>
#include <limits>

#include "facefit/rotation.hpp"
#include "facefit/sh.hpp"

namespace facefit {

SplatResult render_colors_pointsplat(const VecX& colors, const Mesh& mesh, const RigidPose& pose,
                                     const Camera& camera, int splat_radius) {
    camera.validate();
    const int n = mesh.n_vertices();
    const VecX cam_positions = transform_points(mesh.positions, pose);
    const ProjectedVertices projected = project(cam_positions, camera);
    const VisibilityMask mask = visibility_mask(mesh.normals, pose.omega, cam_positions, projected);

    SplatResult out;
    out.image = Image(camera.image_width, camera.image_height, 0.0);
    out.coverage.assign(static_cast<std::size_t>(camera.image_width) * camera.image_height, false);
    std::vector<double> zbuf(out.coverage.size(), std::numeric_limits<double>::infinity());

    for (int i = 0; i < n; ++i) {
        if (!mask.visible[static_cast<std::size_t>(i)]) continue;
        const Vec2 uv = projected.uv[static_cast<std::size_t>(i)];
        const double depth = projected.depth[static_cast<std::size_t>(i)];
        const int cx = static_cast<int>(std::lround(uv.x()));
        const int cy = static_cast<int>(std::lround(uv.y()));
        for (int dy = -splat_radius; dy <= splat_radius; ++dy) {
            for (int dx = -splat_radius; dx <= splat_radius; ++dx) {
                const int px = cx + dx, py = cy + dy;
                if (px < 0 || px >= camera.image_width || py < 0 || py >= camera.image_height)
                    continue;
                const std::size_t idx =
                    static_cast<std::size_t>(py) * camera.image_width + static_cast<std::size_t>(px);
                if (depth < zbuf[idx]) {
                    zbuf[idx] = depth;
                    out.image.set_pixel(px, py, colors.segment<3>(3 * i));
                    out.coverage[idx] = true;
                }
            }
        }
    }
    return out;
}

SplatResult render_pointsplat(const Mesh& mesh, const RigidPose& pose, const Camera& camera,
                              const VecX& gamma, int splat_radius) {
    const VecX shaded = mesh.shaded_colors.size() == mesh.positions.size()
                            ? mesh.shaded_colors
                            : shade_vertices(mesh.reflectance, mesh.normals, pose.omega, gamma);
    return render_colors_pointsplat(shaded, mesh, pose, camera, splat_radius);
}

void fill_holes(SplatResult& splat, int rounds) {
    const int w = splat.image.width, h = splat.image.height;
    for (int round = 0; round < rounds; ++round) {
        std::vector<bool> next_cov = splat.coverage;
        Image next = splat.image;
        bool changed = false;
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const std::size_t idx = static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x);
                if (splat.coverage[idx]) continue;
                Vec3 sum = Vec3::Zero();
                int count = 0;
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int nx = x + dx, ny = y + dy;
                        if (nx < 0 || nx >= w || ny < 0 || ny >= h || (dx == 0 && dy == 0)) continue;
                        const std::size_t nidx =
                            static_cast<std::size_t>(ny) * w + static_cast<std::size_t>(nx);
                        if (splat.coverage[nidx]) {
                            sum += splat.image.pixel(nx, ny);
                            ++count;
                        }
                    }
                if (count >= 3) {
                    next.set_pixel(x, y, sum / count);
                    next_cov[idx] = true;
                    changed = true;
                }
            }
        }
        splat.image = std::move(next);
        splat.coverage = std::move(next_cov);
        if (!changed) break;
    }
}

VecX shading_only_colors(const Mesh& mesh, const Vec3& omega, const VecX& gamma) {
    return shade_vertices(VecX::Ones(mesh.positions.size()), mesh.normals, omega, gamma);
}

VecX normal_colors(const Mesh& mesh, const Vec3& omega) {
    const Mat3 rot = rotation_from_axis_angle(omega);
    const int n = mesh.n_vertices();
    VecX colors(3 * n);
    for (int i = 0; i < n; ++i)
        colors.segment<3>(3 * i) = 0.5 * (rot * mesh.normal(i) + Vec3::Ones());
    return colors;
}

} // namespace facefit
