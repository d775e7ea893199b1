#pragma once

#include <array>

#include "facefit/types.hpp"

namespace facefit {

/// Real spherical harmonics basis, bands 0-2, evaluated at a unit vector.
/// Order: (0,0), (1,-1), (1,0), (1,1), (2,-2), (2,-1), (2,0), (2,1), (2,2),
/// i.e. [1, y, z, x, xy, yz, 3z^2-1, xz, x^2-y^2] with the standard
/// Lambertian constants. Rejects non-unit input (tolerance 1e-6).
std::array<double, dims::sh_bands> sh_basis(const Vec3& normal);

/// sh_basis without the unit-norm check, for inner loops that already
/// guarantee unit input.
std::array<double, dims::sh_bands> sh_basis_unchecked(const Vec3& normal);

/// Gradient of each basis function with respect to the input vector.
/// grad[j] = d H_j / d n, evaluated at n.
std::array<Vec3, dims::sh_bands> sh_basis_gradient(const Vec3& normal);

} // namespace facefit
