#include "facefit/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "facefit/fitting.hpp"
#include "facefit/mesh.hpp"
#include "facefit/render.hpp"
#include "facefit/rng.hpp"
#include "facefit/rotation.hpp"

namespace facefit {

SyntheticVideo generate_synthetic_video(const MorphableBasis& basis, const Camera& camera,
                                        std::uint64_t seed, int n_frames,
                                        const SyntheticVideoConfig& config) {
    if (n_frames < 1) throw data_error("synthetic video needs at least one frame");
    camera.validate();
    Rng rng(seed);

    const double init_z = default_init_z(basis, camera);

    CodeVector code;
    for (int i = 0; i < dims::geometry; ++i) code.alpha[i] = rng.normal(0.0, config.identity_scale);
    for (int i = 0; i < dims::reflectance; ++i)
        code.beta[i] = rng.normal(0.0, config.identity_scale);
    for (int i = 0; i < dims::expression; ++i)
        code.delta[i] = rng.normal(0.0, config.expression_scale * std::pow(config.expression_decay, i));
    for (int ch = 0; ch < 3; ++ch) {
        code.gamma[ch * dims::sh_bands] = config.sh_band0 + rng.normal(0.0, config.sh_band0_jitter);
        for (int j = 1; j < dims::sh_bands; ++j)
            code.gamma[ch * dims::sh_bands + j] = rng.normal(0.0, config.sh_higher_scale);
    }
    code.omega[0] = rng.normal(0.0, config.pitch_scale);
    code.omega[1] = rng.normal(0.0, config.yaw_scale);
    code.omega[2] = rng.normal(0.0, config.roll_scale);
    code.t = Vec3(rng.normal(0.0, config.translation_jitter * std::abs(init_z)),
                  rng.normal(0.0, config.translation_jitter * std::abs(init_z)),
                  init_z * (1.0 + rng.normal(0.0, 0.5 * config.translation_jitter)));

    SyntheticVideo out;
    for (int f = 0; f < n_frames; ++f) {
        if (f > 0) {
            for (int i = 0; i < dims::expression; ++i)
                code.delta[i] +=
                    rng.normal(0.0, config.expression_walk * std::pow(config.expression_decay, i));
            for (int ch = 0; ch < 3; ++ch)
                for (int j = 0; j < dims::sh_bands; ++j)
                    code.gamma[ch * dims::sh_bands + j] += rng.normal(0.0, config.sh_walk);
            for (int a = 0; a < 3; ++a) code.omega[a] += rng.normal(0.0, config.rotation_walk);
            code.omega = canonicalize_axis_angle(code.omega);
            code.t += Vec3(rng.normal(0.0, config.translation_walk * std::abs(init_z)),
                           rng.normal(0.0, config.translation_walk * std::abs(init_z)),
                           rng.normal(0.0, config.translation_walk * std::abs(init_z)));
        }

        Mesh mesh = evaluate_mesh(basis, code.alpha, code.beta, code.delta);
        const RigidPose pose{code.omega, code.t};
        SplatResult splat = render_pointsplat(mesh, pose, camera, code.gamma, config.splat_radius);
        fill_holes(splat, config.hole_fill_rounds);
        if (config.pixel_noise > 0.0)
            for (double& v : splat.image.data)
                v = std::clamp(v + rng.normal(0.0, config.pixel_noise), 0.0, 1.0);

        FrameObservation obs;
        obs.image = std::move(splat.image);
        obs.frame_index = f;
        obs.crop_rect = {0.0, 0.0, static_cast<double>(camera.image_width - 1),
                         static_cast<double>(camera.image_height - 1)};
        const VecX cam_positions = transform_points(mesh.positions, pose);
        const ProjectedVertices projected = project(cam_positions, camera);
        for (int j = 0; j < dims::landmarks; ++j) {
            const auto k = static_cast<std::size_t>(
                basis.landmark_vertex_indices[static_cast<std::size_t>(j)]);
            obs.landmarks.points[static_cast<std::size_t>(j)] = projected.uv[k];
            obs.landmarks.validity[static_cast<std::size_t>(j)] =
                projected.depth[k] > 0.0 && projected.uv[k].x() >= 0.0 &&
                projected.uv[k].x() < camera.image_width && projected.uv[k].y() >= 0.0 &&
                projected.uv[k].y() < camera.image_height;
        }
        out.frames.push_back(std::move(obs));
        out.ground_truth.push_back(code);
    }
    return out;
}

} // namespace facefit
