#ifndef CLFCBF_PROJECTION_HPP
#define CLFCBF_PROJECTION_HPP

#include <vector>

#include <Eigen/Core>

namespace clfcbf {

/// P_Z = I - G Z N1 Z^T for columns of Z pairwise G-orthogonal and diagonal
/// N1 > 0. Throws InvalidInput when the orthogonality residual exceeds tol.
Eigen::MatrixXd oblique_projection(const Eigen::MatrixXd& Z, const Eigen::MatrixXd& G,
                                   const Eigen::VectorXd& N1_diag, double tol = 1e-10);

struct ProjectionSequence {
  std::vector<Eigen::VectorXd> N_diag;  // N_1 .. N_k
  bool all_positive_definite = true;    // the "generalized" qualification
};

/// Diagonal sequence with (P_Z)^k = I - G Z N_k Z^T exactly:
/// N_{k+1} = N_1 + N_k - N_1 (Z^T G Z) N_k  (all factors diagonal).
ProjectionSequence projection_sequence(const Eigen::VectorXd& N1_diag, const Eigen::MatrixXd& Z,
                                       const Eigen::MatrixXd& G, int k);

}  // namespace clfcbf

#endif  // CLFCBF_PROJECTION_HPP
