#pragma once

#include "freeent/matcore.hpp"

namespace freeent {

/// Scaling of the off-diagonal parts produced by block_split.
enum class BlockScaling {
  /// Y_ij = (X_ij + X_ij^*) / 2 for i > j and (X_ij - X_ij^*) / 2i for i < j.
  /// ||Z||_HS^2 = sum_i ||Y_ii||^2 + 2 sum_{i != j} ||Y_ij||^2, so this map
  /// scales Lebesgue measure by 2^(-k'^2 N(N-1)/2) per variable.
  Halved,
  /// The same parts multiplied by sqrt 2: an isometry, hence measure preserving.
  Orthonormal,
};

/// Splits each z_r of dimension N k' into its N x N blocks X_ij and returns
/// the self-adjoint parts Y_ij. Output order mirrors the coordinate layout of
/// Hermitian: for each variable r, the diagonal blocks Y_11..Y_NN, then for
/// each pair i < j (row-major) Y_ji followed by Y_ij. For N = 2, k' = 1 and
/// z = [[a, b + ic], [b - ic, d]] the output is (a, d, b, c).
MatrixTuple block_split(const MatrixTuple& z, int N, BlockScaling scaling = BlockScaling::Halved);

/// Inverse of block_split.
MatrixTuple block_assemble(const MatrixTuple& entries, int N, BlockScaling scaling = BlockScaling::Halved);

}  // namespace freeent
