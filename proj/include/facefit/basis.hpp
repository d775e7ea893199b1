#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "facefit/types.hpp"

namespace facefit {

/// PCA means, components and standard deviations for geometry, expression
/// and reflectance, plus triangle topology and the 48 landmark vertices.
///
/// All per-vertex fields are stored flattened as 3N vectors in vertex-major
/// xyz order ([v0.x v0.y v0.z v1.x ...]); component matrices are 3N x K with
/// one component per column.
struct MorphableBasis {
    int n_vertices = 0;
    VecX mean_geometry;          // A_id, 3N
    VecX mean_expression;        // A_exp, 3N
    MatX geometry_components;    // P_id, 3N x 80
    VecX geometry_stds;          // sigma_id, 80
    MatX expression_components;  // P_exp, 3N x 64
    VecX expression_stds;        // sigma_exp, 64
    VecX mean_reflectance;       // A_tex, 3N, nominal [0,1]
    MatX reflectance_components; // P_tex, 3N x 80
    VecX reflectance_stds;       // sigma_tex, 80
    std::vector<std::array<std::uint32_t, 3>> triangles;
    std::array<std::uint32_t, dims::landmarks> landmark_vertex_indices{};

    /// Checks index bounds, positive stds and the landmark count contract.
    /// Throws data_error on violation.
    void validate() const;

    /// Axis-aligned bounding box of the mean face (A_id + A_exp),
    /// as (min, max) corners.
    std::pair<Vec3, Vec3> mean_bounding_box() const;
};

struct SyntheticBasisConfig {
    double head_width = 0.75;   // ellipsoid semi-axis x
    double head_height = 1.0;   // semi-axis y
    double head_depth = 0.8;    // semi-axis z
    double geometry_std0 = 0.02;    // leading std per unit RMS displacement
    double expression_std0 = 0.04;
    double reflectance_std0 = 0.05;
    double std_decay = 0.99;    // geometric decay of component stds
    double depth_axis_weight = 0.45; // z content of displacement fields vs x/y
};

/// Deterministic stand-in for a licensed face model: a coarse ellipsoidal
/// front-facing head patch with random smooth displacement fields,
/// orthonormalized across all geometry/expression components. Rejects
/// n_vertices too small to carry 48 distinct landmarks.
MorphableBasis generate_synthetic_basis(std::uint64_t seed, int n_vertices,
                                        const SyntheticBasisConfig& config = {});

/// FMB1 binary basis format.
void save_basis(const MorphableBasis& basis, const std::string& path);
MorphableBasis load_basis(const std::string& path);

} // namespace facefit
