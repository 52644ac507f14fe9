#include "clfcbf/projection.hpp"

#include <cmath>

#include "clfcbf/errors.hpp"

namespace clfcbf {

namespace {

void check_g_orthogonal(const Eigen::MatrixXd& Z, const Eigen::MatrixXd& G, double tol) {
  const Eigen::MatrixXd gram = Z.transpose() * G * Z;
  const double scale = std::max(1.0, gram.cwiseAbs().maxCoeff());
  for (int i = 0; i < gram.rows(); ++i)
    for (int j = 0; j < gram.cols(); ++j)
      if (i != j && std::abs(gram(i, j)) > tol * scale)
        throw InvalidInput("oblique_projection: columns of Z are not G-orthogonal");
}

}  // namespace

Eigen::MatrixXd oblique_projection(const Eigen::MatrixXd& Z, const Eigen::MatrixXd& G,
                                   const Eigen::VectorXd& N1_diag, double tol) {
  if (Z.rows() != G.rows() || G.rows() != G.cols())
    throw InvalidInput("oblique_projection: dimension mismatch");
  if (N1_diag.size() != Z.cols()) throw InvalidInput("oblique_projection: N1 size mismatch");
  if (N1_diag.minCoeff() <= 0.0) throw InvalidInput("oblique_projection: N1 must be positive");
  check_g_orthogonal(Z, G, tol);
  const int n = static_cast<int>(Z.rows());
  return Eigen::MatrixXd::Identity(n, n) - G * Z * N1_diag.asDiagonal() * Z.transpose();
}

ProjectionSequence projection_sequence(const Eigen::VectorXd& N1_diag, const Eigen::MatrixXd& Z,
                                       const Eigen::MatrixXd& G, int k) {
  if (k < 1) throw InvalidInput("projection_sequence: k >= 1 required");
  check_g_orthogonal(Z, G, 1e-10);
  const Eigen::VectorXd d = (Z.transpose() * G * Z).diagonal();
  ProjectionSequence seq;
  seq.N_diag.reserve(static_cast<size_t>(k));
  Eigen::VectorXd cur = N1_diag;
  seq.N_diag.push_back(cur);
  seq.all_positive_definite = cur.minCoeff() > 0.0;
  // N_{k+1} = N_1 + N_k - N_1 D N_k, elementwise on the diagonals; this is the
  // sequence for which (P_Z)^k = I - G Z N_k Z^T holds identically.
  for (int i = 1; i < k; ++i) {
    cur = (N1_diag.array() + cur.array() - N1_diag.array() * d.array() * cur.array()).matrix();
    seq.N_diag.push_back(cur);
    if (cur.minCoeff() <= 0.0) seq.all_positive_definite = false;
  }
  return seq;
}

}  // namespace clfcbf
