#include "facefit/gradcheck.hpp"

#include <cmath>

#include "facefit/fitting.hpp"
#include "facefit/gradient.hpp"
#include "facefit/rng.hpp"

namespace facefit {

namespace {

Image affine_image(Rng& rng, int size) {
    // exactly affine per channel, values kept inside [0.1, 0.9]
    Image image(size, size);
    for (int ch = 0; ch < 3; ++ch) {
        const double a = rng.uniform(-0.15, 0.15) / size;
        const double b = rng.uniform(-0.15, 0.15) / size;
        const double c = rng.uniform(0.4, 0.6);
        for (int y = 0; y < size; ++y)
            for (int x = 0; x < size; ++x) image.at(x, y, ch) = c + a * x + b * y;
    }
    return image;
}

struct DrawnConfig {
    CodeVector code;
    FrameObservation frame;
};

// Margins sized for an fd step of 1e-4: an omega step tilts camera-space
// normals by at most 1e-4 rad and moves projections by a few 1e-3 px, so
// a facing margin of 3e-4 and a border margin of 0.05 px guarantee the
// visibility mask and bilinear validity cannot flip inside the stencil.
bool config_is_smooth(const ForwardCache& cache, const Camera& camera, int min_used) {
    if (cache.used_count < min_used) return false;
    const int n = static_cast<int>(cache.positions.size() / 3);
    const double facing_margin = 3e-4;
    const double border_margin = 0.05;
    const double residual_margin = 1e-3;
    for (int i = 0; i < n; ++i) {
        const std::size_t si = static_cast<std::size_t>(i);
        const Vec3 p = cache.cam_positions.segment<3>(3 * i);
        if (-p.z() < 0.5) return false; // keep everything well in front
        const Vec3 rn = cache.rotated_normals.segment<3>(3 * i);
        if (std::abs(rn.dot(p.normalized())) < facing_margin) return false;
        if (cache.facing[si]) {
            const Vec2 uv = cache.projected.uv[si];
            for (double b : {0.0, static_cast<double>(camera.image_width - 1),
                             static_cast<double>(camera.image_width)})
                if (std::abs(uv.x() - b) < border_margin) return false;
            for (double b : {0.0, static_cast<double>(camera.image_height - 1),
                             static_cast<double>(camera.image_height)})
                if (std::abs(uv.y() - b) < border_margin) return false;
        }
        if (cache.used[si] && cache.residual_norms[si] < residual_margin) return false;
        if (cache.vertex_normals.degenerate[si]) return false;
    }
    return true;
}

DrawnConfig draw_config(Rng& rng, const MorphableBasis& basis, const Camera& camera) {
    DrawnConfig out;
    CodeVector& code = out.code;
    for (int i = 0; i < dims::geometry; ++i) code.alpha[i] = rng.normal(0.0, 0.3);
    for (int i = 0; i < dims::reflectance; ++i) code.beta[i] = rng.normal(0.0, 0.3);
    for (int i = 0; i < dims::expression; ++i) code.delta[i] = rng.normal(0.0, 0.3);
    for (int ch = 0; ch < 3; ++ch) {
        code.gamma[ch * dims::sh_bands] = 2.0 + rng.normal(0.0, 0.1);
        for (int j = 1; j < dims::sh_bands; ++j)
            code.gamma[ch * dims::sh_bands + j] = rng.normal(0.0, 0.1);
    }
    for (int a = 0; a < 3; ++a) code.omega[a] = rng.normal(0.0, 0.08);
    const double z0 = default_init_z(basis, camera);
    code.t = Vec3(rng.normal(0.0, 0.01 * std::abs(z0)), rng.normal(0.0, 0.01 * std::abs(z0)),
                  z0 * (1.0 + rng.normal(0.0, 0.02)));

    out.frame.image = affine_image(rng, camera.image_width);

    // annotations = projected landmark vertices plus a few pixels of offset
    const VecX positions = evaluate_geometry(basis, code.alpha, code.delta);
    const VecX cam_positions = transform_points(positions, RigidPose{code.omega, code.t});
    const ProjectedVertices projected = project(cam_positions, camera);
    for (int j = 0; j < dims::landmarks; ++j) {
        const auto k =
            static_cast<std::size_t>(basis.landmark_vertex_indices[static_cast<std::size_t>(j)]);
        out.frame.landmarks.points[static_cast<std::size_t>(j)] =
            projected.uv[k] + Vec2(rng.normal(0.0, 3.0), rng.normal(0.0, 3.0));
        out.frame.landmarks.validity[static_cast<std::size_t>(j)] = true;
    }
    return out;
}

} // namespace

GradCheckReport run_gradcheck(const MorphableBasis& basis, const GradCheckConfig& config) {
    Camera camera = Camera::with_default_focal(config.image_size, config.image_size);
    const EnergyWeights weights;
    Rng rng(config.seed);
    GradCheckReport report;
    report.block_max.fill(0.0);

    const std::array<int, 7> block_edges = {dims::alpha_offset, dims::beta_offset,
                                            dims::delta_offset, dims::gamma_offset,
                                            dims::omega_offset, dims::t_offset, dims::code};

    for (int cfg = 0; cfg < config.n_configs; ++cfg) {
        DrawnConfig drawn;
        bool smooth = false;
        for (int attempt = 0; attempt < 200 && !smooth; ++attempt) {
            drawn = draw_config(rng, basis, camera);
            const ForwardCache cache =
                run_forward(drawn.code, basis, camera, drawn.frame.image);
            smooth = config_is_smooth(cache, camera, basis.n_vertices / 10);
            if (!smooth) ++report.redraws;
        }
        if (!smooth)
            throw numerical_error("gradcheck could not draw a smooth configuration");

        const EnergyGradient analytic =
            energy_gradient(drawn.code, basis, camera, drawn.frame, weights);

        VecX flat = drawn.code.to_flat();
        for (int d = 0; d < dims::code; ++d) {
            VecX plus = flat, minus = flat;
            plus[d] += config.fd_step;
            minus[d] -= config.fd_step;
            const double e_plus = total_energy(CodeVector::from_flat(plus), basis, camera,
                                               drawn.frame, weights)
                                      .total;
            const double e_minus = total_energy(CodeVector::from_flat(minus), basis, camera,
                                                drawn.frame, weights)
                                       .total;
            const double fd = (e_plus - e_minus) / (2.0 * config.fd_step);
            const double an = analytic.gradient[d];
            const double rel =
                std::abs(fd - an) / std::max(std::abs(fd) + std::abs(an), config.denom_floor);
            if (rel > report.max_rel_error) {
                report.max_rel_error = rel;
                report.worst_dim = d;
                report.worst_config = cfg;
            }
            for (std::size_t b = 0; b < 6; ++b)
                if (d >= block_edges[b] && d < block_edges[b + 1])
                    report.block_max[b] = std::max(report.block_max[b], rel);
        }
        ++report.configs_run;
    }
    report.passed = report.max_rel_error < config.tolerance;
    return report;
}

} // namespace facefit
