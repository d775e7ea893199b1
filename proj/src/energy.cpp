#include "facefit/energy.hpp"

#include <cmath>

#include "facefit/rotation.hpp"
#include "facefit/sh.hpp"

namespace facefit {

double landmark_loss(const ProjectedVertices& projected,
                     const std::array<std::uint32_t, dims::landmarks>& landmark_indices,
                     const LandmarkSet& landmarks) {
    double sum = 0.0;
    int valid = 0;
    for (int j = 0; j < dims::landmarks; ++j) {
        if (!landmarks.validity[static_cast<std::size_t>(j)]) continue;
        const auto k = static_cast<std::size_t>(landmark_indices[static_cast<std::size_t>(j)]);
        const Vec2 diff = projected.uv[k] - landmarks.points[static_cast<std::size_t>(j)];
        sum += diff.squaredNorm();
        ++valid;
    }
    if (valid == 0) throw data_error("landmark loss needs at least one valid landmark");
    return sum / valid;
}

PhotometricResult photometric_loss(const VecX& shaded, const ProjectedVertices& projected,
                                   const std::vector<bool>& visible, const Image& image) {
    const int n = static_cast<int>(shaded.size() / 3);
    PhotometricResult out;
    out.residual_norms.assign(static_cast<std::size_t>(n), 0.0);
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        if (!visible[static_cast<std::size_t>(i)]) continue;
        const BilinearSample sample = bilinear_sample(image, projected.uv[static_cast<std::size_t>(i)]);
        if (!sample.valid) continue;
        const Vec3 residual = Vec3(shaded.segment<3>(3 * i)) - sample.color;
        const double norm = residual.norm();
        out.residual_norms[static_cast<std::size_t>(i)] = norm;
        sum += norm;
        ++out.used_count;
    }
    if (out.used_count == 0)
        throw numerical_error("photometric loss has no visible vertices; pose needs re-initialization");
    out.loss = sum / out.used_count;
    return out;
}

double regularization(const VecX& alpha, const VecX& beta, const VecX& delta,
                      const EnergyWeights& weights) {
    return weights.w_alpha * alpha.squaredNorm() + weights.w_beta * beta.squaredNorm() +
           weights.w_delta * delta.squaredNorm();
}

ForwardCache run_forward(const CodeVector& code, const MorphableBasis& basis,
                         const Camera& camera, const Image& image) {
    ForwardCache cache;
    const int n = basis.n_vertices;
    cache.focal_length = camera.focal_length;
    cache.positions = evaluate_geometry(basis, code.alpha, code.delta);
    cache.reflectance = evaluate_reflectance(basis, code.beta);
    cache.vertex_normals = compute_vertex_normals(cache.positions, basis.triangles);
    cache.rotation = rotation_from_axis_angle(code.omega);

    cache.cam_positions.resize(3 * n);
    cache.rotated_normals.resize(3 * n);
    for (int i = 0; i < n; ++i) {
        cache.cam_positions.segment<3>(3 * i) =
            cache.rotation * cache.positions.segment<3>(3 * i) + code.t;
        cache.rotated_normals.segment<3>(3 * i) =
            cache.rotation * cache.vertex_normals.normals.segment<3>(3 * i);
    }
    cache.projected = project(cache.cam_positions, camera);

    cache.shade.resize(3 * n);
    cache.colors.resize(3 * n);
    for (int i = 0; i < n; ++i) {
        const auto basis_values = sh_basis_unchecked(cache.rotated_normals.segment<3>(3 * i));
        for (int ch = 0; ch < 3; ++ch) {
            double s = 0.0;
            for (int j = 0; j < dims::sh_bands; ++j)
                s += code.gamma[ch * dims::sh_bands + j] * basis_values[static_cast<std::size_t>(j)];
            cache.shade[3 * i + ch] = s;
            cache.colors[3 * i + ch] = cache.reflectance[3 * i + ch] * s;
        }
    }

    cache.facing.assign(static_cast<std::size_t>(n), false);
    cache.used.assign(static_cast<std::size_t>(n), false);
    cache.samples.resize(static_cast<std::size_t>(n));
    cache.residuals.assign(static_cast<std::size_t>(n), Vec3::Zero());
    cache.residual_norms.assign(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
        const std::size_t si = static_cast<std::size_t>(i);
        const Vec3 rn = cache.rotated_normals.segment<3>(3 * i);
        const Vec3 cp = cache.cam_positions.segment<3>(3 * i);
        cache.facing[si] = rn.dot(cp) < 0.0;
        if (!cache.projected.in_frustum[si] || !cache.facing[si]) continue;
        cache.samples[si] = bilinear_sample_grad(image, cache.projected.uv[si]);
        if (!cache.samples[si].valid) continue;
        cache.used[si] = true;
        ++cache.used_count;
        cache.residuals[si] = Vec3(cache.colors.segment<3>(3 * i)) - cache.samples[si].color;
        cache.residual_norms[si] = cache.residuals[si].norm();
    }
    return cache;
}

EnergyBreakdown energy_from_cache(const ForwardCache& cache, const CodeVector& code,
                                  const MorphableBasis& basis, const FrameObservation& frame,
                                  const EnergyWeights& weights) {
    EnergyBreakdown out;
    out.valid_landmarks = frame.landmarks.valid_count();
    if (weights.w_land != 0.0 || out.valid_landmarks > 0)
        out.e_land = landmark_loss(cache.projected, basis.landmark_vertex_indices, frame.landmarks);

    out.visible_count = cache.used_count;
    if (cache.used_count > 0) {
        double sum = 0.0;
        for (double r : cache.residual_norms) sum += r;
        out.e_vert = sum / cache.used_count;
    } else if (weights.w_vert != 0.0) {
        throw numerical_error("photometric loss has no visible vertices; pose needs re-initialization");
    }

    out.e_reg = regularization(code.alpha, code.beta, code.delta, weights);
    out.total = weights.w_land * out.e_land + weights.w_vert * out.e_vert + out.e_reg;
    return out;
}

EnergyBreakdown total_energy(const CodeVector& code, const MorphableBasis& basis,
                             const Camera& camera, const FrameObservation& frame,
                             const EnergyWeights& weights) {
    const ForwardCache cache = run_forward(code, basis, camera, frame.image);
    return energy_from_cache(cache, code, basis, frame, weights);
}

} // namespace facefit
