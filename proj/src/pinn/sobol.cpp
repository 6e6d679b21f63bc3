#include "invlab/pinn/sobol.hpp"

#include <array>
#include <bit>
#include <cstdint>

namespace invlab::pinn {

namespace {

constexpr int kBits = 32;

// Dimension 1: van der Corput. Dimension 2: primitive polynomial x + 1 with m_1 = 1,
// i.e. m_k = m_{k-1} xor 2 m_{k-1}.
std::array<std::array<std::uint32_t, kBits>, 2> direction_numbers() {
  std::array<std::array<std::uint32_t, kBits>, 2> v{};
  std::uint32_t m = 1;
  for (int k = 0; k < kBits; ++k) {
    v[0][k] = std::uint32_t{1} << (kBits - 1 - k);
    if (k > 0) m = m ^ (m << 1);
    v[1][k] = m << (kBits - 1 - k);
  }
  return v;
}

}  // namespace

Matrix sobol_2d(int n, int skip) {
  if (n < 1) throw DomainError("sobol_2d: n must be >= 1");
  if (skip < 0) throw DomainError("sobol_2d: skip must be >= 0");
  static const auto v = direction_numbers();
  Matrix pts(n, 2);
  std::uint32_t x0 = 0, x1 = 0;
  const double scale = 1.0 / 4294967296.0;
  const long total = static_cast<long>(skip) + n;
  for (long i = 0; i < total; ++i) {
    if (i >= skip) {
      pts(i - skip, 0) = x0 * scale;
      pts(i - skip, 1) = x1 * scale;
    }
    // Flip the direction number at the lowest zero bit of i.
    const int c = std::countr_one(static_cast<std::uint64_t>(i));
    if (c >= kBits) throw DomainError("sobol_2d: sequence exhausted");
    x0 ^= v[0][c];
    x1 ^= v[1][c];
  }
  return pts;
}

}  // namespace invlab::pinn
