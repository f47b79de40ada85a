#pragma once

// Independent reference computations used by the unit tests. None of these
// call into the library's recursion code.

#include <complex>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "hellinger/operator_model.hpp"

namespace oracle {

using cd = std::complex<long double>;

/// Scalar recursion up(j) u_{j+1} = (z - diag(j)) u_j - low(j-1) u_{j-1}
/// with low(-1) = -1, in long double. Returns u_{-1}..u_J. The left
/// equation is the same recursion with up and low exchanged.
template <class Up, class Diag, class Low>
std::vector<cd> scalar_solution(Up up, Diag diag, Low low, cd z, cd u_m1, cd u_0, int J) {
  std::vector<cd> u{u_m1, u_0};
  for (int j = 0; j < J; ++j) {
    const cd back = j == 0 ? cd(-1) : cd(low(j - 1));
    u.push_back(((z - cd(diag(j))) * u[j + 1] - back * u[j]) / cd(up(j)));
  }
  return u;
}

/// Product of odd numbers over product of even numbers, (2m-1)!!/(2m)!!.
inline long double double_factorial_ratio_even(int m) {
  long double r = 1.0L;
  for (int i = 1; i <= m; ++i) r *= static_cast<long double>(2 * i - 1) / static_cast<long double>(2 * i);
  return r;
}

/// (2m)!!/(2m+1)!!.
inline long double double_factorial_ratio_odd(int m) {
  long double r = 1.0L;
  for (int i = 1; i <= m; ++i) r *= static_cast<long double>(2 * i) / static_cast<long double>(2 * i + 1);
  return r;
}

struct RandomCase {
  hellinger::OperatorFamily family;
  std::vector<hellinger::Complex> z;
  int n;
};

/// n cycles through {1,2,3,4}; z drawn from the disc |z| <= 2.
inline std::vector<RandomCase> random_cases(int count, int z_per_family, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::vector<RandomCase> out;
  for (int c = 0; c < count; ++c) {
    const int n = 1 + c % 4;
    RandomCase rc{hellinger::random_family(n, seed * 1000 + static_cast<std::uint64_t>(c)), {}, n};
    for (int k = 0; k < z_per_family; ++k) rc.z.push_back({2.0 * unit(gen) / 1.5, 2.0 * unit(gen) / 1.5});
    out.push_back(std::move(rc));
  }
  return out;
}

inline hellinger::MatrixC random_matrix(int rows, int cols, std::mt19937_64& gen) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  hellinger::MatrixC m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = {unit(gen), unit(gen)};
  }
  return m;
}

}  // namespace oracle
