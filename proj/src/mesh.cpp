#include "facefit/mesh.hpp"

#include <string>

namespace facefit {

namespace {

void check_length(const VecX& v, int expected, const char* name) {
    if (v.size() != expected)
        throw data_error(std::string(name) + " must have " + std::to_string(expected) +
                         " entries, got " + std::to_string(v.size()));
}

} // namespace

VecX evaluate_geometry(const MorphableBasis& basis, const VecX& alpha, const VecX& delta) {
    check_length(alpha, dims::geometry, "alpha");
    check_length(delta, dims::expression, "delta");
    VecX x = basis.mean_geometry + basis.mean_expression;
    x.noalias() += basis.geometry_components * (alpha.cwiseProduct(basis.geometry_stds));
    x.noalias() += basis.expression_components * (delta.cwiseProduct(basis.expression_stds));
    return x;
}

VecX evaluate_reflectance(const MorphableBasis& basis, const VecX& beta) {
    check_length(beta, dims::reflectance, "beta");
    VecX b = basis.mean_reflectance;
    b.noalias() += basis.reflectance_components * (beta.cwiseProduct(basis.reflectance_stds));
    return b;
}

VertexNormals compute_vertex_normals(const VecX& positions,
                                     const std::vector<std::array<std::uint32_t, 3>>& triangles) {
    const int n = static_cast<int>(positions.size() / 3);
    VertexNormals out;
    out.accumulated = VecX::Zero(3 * n);
    out.normals = VecX::Zero(3 * n);
    out.degenerate.assign(static_cast<std::size_t>(n), false);

    for (const auto& tri : triangles) {
        const Vec3 a = positions.segment<3>(3 * static_cast<int>(tri[0]));
        const Vec3 b = positions.segment<3>(3 * static_cast<int>(tri[1]));
        const Vec3 c = positions.segment<3>(3 * static_cast<int>(tri[2]));
        const Vec3 face = (b - a).cross(c - a); // area-weighted, unnormalized
        for (auto idx : tri) out.accumulated.segment<3>(3 * static_cast<int>(idx)) += face;
    }

    for (int i = 0; i < n; ++i) {
        const Vec3 acc = out.accumulated.segment<3>(3 * i);
        const double norm = acc.norm();
        if (norm < 1e-12) {
            out.degenerate[static_cast<std::size_t>(i)] = true;
            out.normals.segment<3>(3 * i) = Vec3(0.0, 0.0, 1.0);
        } else {
            out.normals.segment<3>(3 * i) = acc / norm;
        }
    }
    return out;
}

VecX backprop_vertex_normals(const VecX& positions,
                             const std::vector<std::array<std::uint32_t, 3>>& triangles,
                             const VertexNormals& cache, const VecX& normal_grad) {
    const int n = static_cast<int>(positions.size() / 3);
    // d n / d g for unit n = g/|g|: (I - n n^T)/|g|; degenerate vertices
    // hold a constant normal, so their gradient is zero.
    VecX acc_grad = VecX::Zero(3 * n);
    for (int i = 0; i < n; ++i) {
        if (cache.degenerate[static_cast<std::size_t>(i)]) continue;
        const Vec3 q = normal_grad.segment<3>(3 * i);
        if (q.isZero(0.0)) continue;
        const Vec3 nrm = cache.normals.segment<3>(3 * i);
        const double len = cache.accumulated.segment<3>(3 * i).norm();
        acc_grad.segment<3>(3 * i) = (q - nrm * nrm.dot(q)) / len;
    }

    VecX pos_grad = VecX::Zero(3 * n);
    for (const auto& tri : triangles) {
        const int ia = static_cast<int>(tri[0]);
        const int ib = static_cast<int>(tri[1]);
        const int ic = static_cast<int>(tri[2]);
        const Vec3 qs = acc_grad.segment<3>(3 * ia) + acc_grad.segment<3>(3 * ib) +
                        acc_grad.segment<3>(3 * ic);
        if (qs.isZero(0.0)) continue;
        const Vec3 a = positions.segment<3>(3 * ia);
        const Vec3 b = positions.segment<3>(3 * ib);
        const Vec3 c = positions.segment<3>(3 * ic);
        // dN/dx_a = [c - b]x and cyclic; transpose flips the cross product.
        pos_grad.segment<3>(3 * ia) += qs.cross(c - b);
        pos_grad.segment<3>(3 * ib) += qs.cross(a - c);
        pos_grad.segment<3>(3 * ic) += qs.cross(b - a);
    }
    return pos_grad;
}

Mesh evaluate_mesh(const MorphableBasis& basis, const VecX& alpha, const VecX& beta,
                   const VecX& delta) {
    Mesh mesh;
    mesh.positions = evaluate_geometry(basis, alpha, delta);
    mesh.reflectance = evaluate_reflectance(basis, beta);
    VertexNormals vn = compute_vertex_normals(mesh.positions, basis.triangles);
    mesh.normals = std::move(vn.normals);
    mesh.degenerate = std::move(vn.degenerate);
    return mesh;
}

} // namespace facefit
