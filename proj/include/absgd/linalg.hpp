#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace absgd {

// Eigenvalues of a dense symmetric matrix (row-major, n x n) by cyclic
// Jacobi rotations, returned in ascending order. Throws if the matrix is
// not symmetric to a small relative tolerance.
std::vector<double> symmetric_eigenvalues(std::span<const double> a, std::int32_t n);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

}  // namespace absgd
