#include "facefit/gradient.hpp"

#include <cmath>

#include "facefit/rotation.hpp"
#include "facefit/sh.hpp"

namespace facefit {

namespace {

void check_block_finite(const VecX& grad, int offset, int len, const char* name) {
    if (!grad.segment(offset, len).allFinite())
        throw numerical_error(std::string("non-finite gradient in block ") + name);
}

} // namespace

EnergyGradient energy_gradient_from_cache(const ForwardCache& cache, const CodeVector& code,
                                          const MorphableBasis& basis,
                                          const FrameObservation& frame,
                                          const EnergyWeights& weights) {
    const int n = basis.n_vertices;
    EnergyGradient out;
    out.breakdown = energy_from_cache(cache, code, basis, frame, weights);

    VecX grad_alpha = 2.0 * weights.w_alpha * code.alpha;
    VecX grad_beta = 2.0 * weights.w_beta * code.beta;
    VecX grad_delta = 2.0 * weights.w_delta * code.delta;
    VecX grad_gamma = VecX::Zero(dims::illumination);
    Vec3 grad_omega = Vec3::Zero();
    Vec3 grad_t = Vec3::Zero();

    const Mat3 left_jacobian = so3_left_jacobian(code.omega);
    const Mat3 left_jacobian_t = left_jacobian.transpose();

    // Per-vertex accumulators for the three upstream quantities that feed
    // shared parameters: projected uv, model-space normal, reflectance.
    std::vector<Vec2> uv_grad(static_cast<std::size_t>(n), Vec2::Zero());
    VecX normal_grad = VecX::Zero(3 * n);
    VecX reflectance_grad = VecX::Zero(3 * n);

    // Landmark term: d/d uv of w_land * (1/|F|) sum ||uv - l||^2.
    const int valid_landmarks = out.breakdown.valid_landmarks;
    if (weights.w_land != 0.0 && valid_landmarks > 0) {
        const double scale = weights.w_land * 2.0 / valid_landmarks;
        for (int j = 0; j < dims::landmarks; ++j) {
            if (!frame.landmarks.validity[static_cast<std::size_t>(j)]) continue;
            const auto k = static_cast<std::size_t>(
                basis.landmark_vertex_indices[static_cast<std::size_t>(j)]);
            uv_grad[k] += scale * (cache.projected.uv[k] - frame.landmarks.points[static_cast<std::size_t>(j)]);
        }
    }

    // Photometric term: residual r_i = ||c_i - s(uv_i)||, mean over |V|.
    if (weights.w_vert != 0.0 && cache.used_count > 0) {
        const double inv_count = weights.w_vert / cache.used_count;
        for (int i = 0; i < n; ++i) {
            const std::size_t si = static_cast<std::size_t>(i);
            if (!cache.used[si]) continue;
            const double r = cache.residual_norms[si];
            if (r < 1e-12) continue; // subgradient 0 at the kink
            const Vec3 y = (inv_count / r) * cache.residuals[si];

            // color = reflectance (.) shade
            const Vec3 shade = cache.shade.segment<3>(3 * i);
            const Vec3 refl = cache.reflectance.segment<3>(3 * i);
            reflectance_grad.segment<3>(3 * i) += y.cwiseProduct(shade);
            const Vec3 shade_grad = y.cwiseProduct(refl);

            // shade_ch = sum_j gamma[ch,j] H_j(rotated normal)
            const Vec3 rotated = cache.rotated_normals.segment<3>(3 * i);
            const auto sh_values = sh_basis_unchecked(rotated);
            const auto sh_grads = sh_basis_gradient(rotated);
            Vec3 rotated_normal_grad = Vec3::Zero();
            for (int j = 0; j < dims::sh_bands; ++j) {
                double coeff = 0.0;
                for (int ch = 0; ch < 3; ++ch) {
                    grad_gamma[ch * dims::sh_bands + j] +=
                        shade_grad[ch] * sh_values[static_cast<std::size_t>(j)];
                    coeff += shade_grad[ch] * code.gamma[ch * dims::sh_bands + j];
                }
                rotated_normal_grad += coeff * sh_grads[static_cast<std::size_t>(j)];
            }
            // rotated normal = R n: the omega path uses the compact form,
            // the model-normal path goes through R^T.
            grad_omega += left_jacobian_t * rotated.cross(rotated_normal_grad);
            normal_grad.segment<3>(3 * i) += cache.rotation.transpose() * rotated_normal_grad;

            // image sample: d r / d uv = -y^T J_img
            uv_grad[si].x() -= y.dot(cache.samples[si].d_du);
            uv_grad[si].y() -= y.dot(cache.samples[si].d_dv);
        }
    }

    // uv -> camera-space position -> (omega, t, model position).
    VecX position_grad = VecX::Zero(3 * n);
    for (int i = 0; i < n; ++i) {
        const std::size_t si = static_cast<std::size_t>(i);
        if (uv_grad[si].isZero(0.0)) continue;
        const Vec3 p = cache.cam_positions.segment<3>(3 * i);
        if (p.z() == 0.0) continue;
        // u = W/2 - f x/z, v = H/2 + f y/z
        const double focal = cache.focal_length;
        const double inv_z = 1.0 / p.z();
        const Vec3 du_dp(-focal * inv_z, 0.0, focal * p.x() * inv_z * inv_z);
        const Vec3 dv_dp(0.0, focal * inv_z, -focal * p.y() * inv_z * inv_z);
        const Vec3 gp = uv_grad[si].x() * du_dp + uv_grad[si].y() * dv_dp;
        grad_t += gp;
        grad_omega += left_jacobian_t * (p - code.t).cross(gp);
        position_grad.segment<3>(3 * i) += cache.rotation.transpose() * gp;
    }

    // normals -> positions (1-ring chain rule)
    if (!normal_grad.isZero(0.0))
        position_grad += backprop_vertex_normals(cache.positions, basis.triangles,
                                                 cache.vertex_normals, normal_grad);

    // positions -> alpha/delta, reflectance -> beta
    grad_alpha.noalias() +=
        basis.geometry_stds.cwiseProduct(basis.geometry_components.transpose() * position_grad);
    grad_delta.noalias() +=
        basis.expression_stds.cwiseProduct(basis.expression_components.transpose() * position_grad);
    grad_beta.noalias() += basis.reflectance_stds.cwiseProduct(
        basis.reflectance_components.transpose() * reflectance_grad);

    out.gradient.segment(dims::alpha_offset, dims::geometry) = grad_alpha;
    out.gradient.segment(dims::beta_offset, dims::reflectance) = grad_beta;
    out.gradient.segment(dims::delta_offset, dims::expression) = grad_delta;
    out.gradient.segment(dims::gamma_offset, dims::illumination) = grad_gamma;
    out.gradient.segment(dims::omega_offset, dims::rotation) = grad_omega;
    out.gradient.segment(dims::t_offset, dims::translation) = grad_t;

    check_block_finite(out.gradient, dims::alpha_offset, dims::geometry, "alpha");
    check_block_finite(out.gradient, dims::beta_offset, dims::reflectance, "beta");
    check_block_finite(out.gradient, dims::delta_offset, dims::expression, "delta");
    check_block_finite(out.gradient, dims::gamma_offset, dims::illumination, "gamma");
    check_block_finite(out.gradient, dims::omega_offset, dims::rotation, "omega");
    check_block_finite(out.gradient, dims::t_offset, dims::translation, "t");
    return out;
}

EnergyGradient energy_gradient(const CodeVector& code, const MorphableBasis& basis,
                               const Camera& camera, const FrameObservation& frame,
                               const EnergyWeights& weights) {
    const ForwardCache cache = run_forward(code, basis, camera, frame.image);
    return energy_gradient_from_cache(cache, code, basis, frame, weights);
}

} // namespace facefit
