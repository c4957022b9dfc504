#pragma once

#include <random>
#include <string>

#include "chronospec/linalg.hpp"

namespace chronospec::testing {

inline MatrixXc random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937& rng) {
  std::normal_distribution<double> g;
  MatrixXc m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = {g(rng), g(rng)};
  return m;
}

inline VectorXc random_vector(Eigen::Index n, std::mt19937& rng) { return random_matrix(n, 1, rng); }

/// Kronecker product of single-site 2x2 matrices, built independently of the
/// library's Pauli code. text[0] acts on the highest qubit.
inline MatrixXc kron_pauli(const std::string& text) {
  const cplx i{0.0, 1.0};
  MatrixXc out = MatrixXc::Identity(1, 1);
  for (char c : text) {
    MatrixXc s(2, 2);
    switch (c) {
      case 'X': s << 0, 1, 1, 0; break;
      case 'Y': s << 0, -i, i, 0; break;
      case 'Z': s << 1, 0, 0, -1; break;
      default: s << 1, 0, 0, 1;
    }
    MatrixXc next(out.rows() * 2, out.cols() * 2);
    for (Eigen::Index r = 0; r < out.rows(); ++r)
      for (Eigen::Index q = 0; q < out.cols(); ++q) next.block(2 * r, 2 * q, 2, 2) = out(r, q) * s;
    out = next;
  }
  return out;
}

inline std::string random_pauli_text(int n, std::mt19937& rng) {
  static constexpr char kOps[] = {'I', 'X', 'Y', 'Z'};
  std::uniform_int_distribution<int> pick(0, 3);
  std::string s;
  for (int q = 0; q < n; ++q) s += kOps[pick(rng)];
  return s;
}

}  // namespace chronospec::testing
