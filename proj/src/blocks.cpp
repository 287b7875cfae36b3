#include "freeent/blocks.hpp"

#include <cmath>
#include <stdexcept>

namespace freeent {

namespace {

double off_scale(BlockScaling s) { return s == BlockScaling::Orthonormal ? std::sqrt(2.0) : 1.0; }

}  // namespace

MatrixTuple block_split(const MatrixTuple& z, int N, BlockScaling scaling) {
  if (N < 1) throw std::invalid_argument("block_split: N must be positive");
  if (z.empty()) return {};
  if (z.dim() % N != 0) throw std::invalid_argument("block_split: dimension is not divisible by N");
  const int kp = z.dim() / N;
  const double c = off_scale(scaling);
  const Complex i_unit(0.0, 1.0);
  std::vector<Hermitian> out;
  for (const auto& zr : z.matrices()) {
    const CMatrix& m = zr.matrix();
    auto block = [&](int i, int j) -> CMatrix { return m.block(i * kp, j * kp, kp, kp); };
    for (int i = 0; i < N; ++i) out.emplace_back(block(i, i));
    for (int i = 0; i < N; ++i) {
      for (int j = i + 1; j < N; ++j) {
        const CMatrix lower = block(j, i);  // X_ji, j > i
        const CMatrix upper = block(i, j);  // X_ij, i < j
        out.emplace_back(CMatrix(c * 0.5 * (lower + lower.adjoint())));
        out.emplace_back(CMatrix(c * (upper - upper.adjoint()) / (2.0 * i_unit)));
      }
    }
  }
  return MatrixTuple(std::move(out));
}

MatrixTuple block_assemble(const MatrixTuple& entries, int N, BlockScaling scaling) {
  if (N < 1) throw std::invalid_argument("block_assemble: N must be positive");
  const std::size_t per = static_cast<std::size_t>(N) * static_cast<std::size_t>(N);
  if (entries.size() % per != 0) throw std::invalid_argument("block_assemble: entry count is not a multiple of N^2");
  if (entries.empty()) return {};
  const int kp = entries.dim();
  const double c = off_scale(scaling);
  const Complex i_unit(0.0, 1.0);
  std::vector<Hermitian> out;
  for (std::size_t r = 0; r < entries.size() / per; ++r) {
    CMatrix m = CMatrix::Zero(N * kp, N * kp);
    std::size_t pos = r * per;
    for (int i = 0; i < N; ++i) m.block(i * kp, i * kp, kp, kp) = entries[pos++].matrix();
    for (int i = 0; i < N; ++i) {
      for (int j = i + 1; j < N; ++j) {
        const CMatrix re = entries[pos++].matrix() / c;
        const CMatrix im = entries[pos++].matrix() / c;
        const CMatrix upper = re + i_unit * im;  // X_ij
        m.block(i * kp, j * kp, kp, kp) = upper;
        m.block(j * kp, i * kp, kp, kp) = upper.adjoint();
      }
    }
    out.emplace_back(m);
  }
  return MatrixTuple(std::move(out));
}

}  // namespace freeent
