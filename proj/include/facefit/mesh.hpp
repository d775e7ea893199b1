#pragma once

#include <vector>

#include "facefit/basis.hpp"
#include "facefit/types.hpp"

namespace facefit {

/// Evaluated point cloud with per-vertex attributes. Positions,
/// reflectance, normals and shaded colors are flattened 3N vectors in
/// vertex-major xyz/rgb order.
struct Mesh {
    VecX positions;
    VecX reflectance;
    VecX normals;
    VecX shaded_colors; // empty until shading runs
    std::vector<bool> degenerate; // per-vertex normal degeneracy flags

    int n_vertices() const { return static_cast<int>(positions.size() / 3); }
    Vec3 position(int i) const { return positions.segment<3>(3 * i); }
    Vec3 normal(int i) const { return normals.segment<3>(3 * i); }
};

/// X = A_id + sum alpha_i sigma_id_i P_id_i + A_exp + sum delta_i sigma_exp_i P_exp_i
VecX evaluate_geometry(const MorphableBasis& basis, const VecX& alpha, const VecX& delta);

/// B = A_tex + sum beta_i sigma_tex_i P_tex_i. Values are intentionally
/// not clamped to [0,1]; clamping happens only at image export.
VecX evaluate_reflectance(const MorphableBasis& basis, const VecX& beta);

struct VertexNormals {
    VecX normals;                  // unit, 3N
    VecX accumulated;              // pre-normalization area-weighted sums, 3N
    std::vector<bool> degenerate;  // flagged vertices carry normal (0,0,1)
};

/// Per-vertex normals as the normalized sum of area-weighted (unscaled
/// cross product) face normals over the 1-ring. Vertices with no incident
/// triangles or a near-zero sum are flagged and assigned (0,0,1).
VertexNormals compute_vertex_normals(const VecX& positions,
                                     const std::vector<std::array<std::uint32_t, 3>>& triangles);

/// Chain rule through compute_vertex_normals: given dL/dn for every vertex,
/// accumulates dL/dpositions. `normal_grad` and the returned vector are 3N.
VecX backprop_vertex_normals(const VecX& positions,
                             const std::vector<std::array<std::uint32_t, 3>>& triangles,
                             const VertexNormals& cache, const VecX& normal_grad);

/// Convenience: evaluate geometry + reflectance + normals for a code.
Mesh evaluate_mesh(const MorphableBasis& basis, const VecX& alpha, const VecX& beta,
                   const VecX& delta);

} // namespace facefit
