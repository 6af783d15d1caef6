#pragma once

// Seeded generators for structures, matrices and dense test data.

#include "gblr/gblr_matrix.hpp"

#include <random>

namespace gblr {

using Rng = std::mt19937_64;

[[nodiscard]] double standard_normal(Rng& rng);
[[nodiscard]] RealVector random_vector(int size, Rng& rng);
[[nodiscard]] DenseMatrix random_dense(int rows, int cols, Rng& rng);

/// Uniform widths in [0, rows] / [0, cols] and uniform locations.
[[nodiscard]] BlockStructure random_structure(int rows, int cols, int blocks, Rng& rng);

/// Random structure whose average width does not exceed `s`.
[[nodiscard]] BlockStructure random_structure_within(int rows, int cols, int blocks, double s, Rng& rng);

/// Standard-normal cropped content for the given structure.
[[nodiscard]] GblrMatrix random_gblr(const BlockStructure& structure, Rng& rng);

/// K blocks of size width x width at uniformly random (cyclic) positions.
[[nodiscard]] GblrMatrix planted_gblr(int rows, int cols, int blocks, int width, Rng& rng);

}  // namespace gblr
