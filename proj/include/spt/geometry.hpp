#pragma once

#include <Eigen/Dense>

#include "spt/model.hpp"

namespace spt {

// Internal coordinates of the N-particle problem: radii and pair angle
// cosines (unit diagonal, symmetric).
struct InternalCoordinates {
  Eigen::VectorXd radii;   // size N, all > 0
  Eigen::MatrixXd gammas;  // N x N, symmetric, unit diagonal, positive definite
};

// Diagonal of the inverse angle-cosine Gramian. Throws std::invalid_argument
// naming the first non-positive leading minor when the Gramian is not
// positive definite.
Eigen::VectorXd gramian_inverse_diagonal(const Eigen::MatrixXd& gammas);

// Scaled large-D effective potential over full internal coordinates:
//   sum_i [ (Gamma^-1)_ii / (2 r_i^2) + r_i^2 / 2 ]
//     + w * sum_{i<j} v(rho_ij),  rho_ij = sqrt(r_i^2 + r_j^2 - 2 r_i r_j g_ij)
// with the pair interaction evaluated at delta = 0.
double effective_potential(const InternalCoordinates& coords, const InteractionModel& model,
                           const SystemSpec& spec);

// Totally symmetric restriction V(r, g): all radii equal, all cosines equal.
double restricted_potential(double r, double g, int n, double weight,
                            const InteractionModel& model);

struct SymmetricMinimum {
  double r_infinity = 0.0;
  double gamma_infinity = 0.0;
  double e_infinity = 0.0;          // scaled energy at the minimum
  Eigen::Matrix2d reduced_hessian;  // curvature of the restricted potential
  double pair_weight = 0.0;
  int n = 0;
  int iterations = 0;
};

// Damped Newton minimization of the restricted potential from (r, g) = (1, 0).
// Gradient norm < 1e-10 at the returned point; throws on non-convergence or
// when the reduced Hessian is not positive definite (saddle).
SymmetricMinimum find_symmetric_minimum(const InteractionModel& model, const SystemSpec& spec);

// Closed form of the symmetric-configuration inverse-Gramian entries:
// diagonal (1+(N-2)g) / ((1-g)(1+(N-1)g)), off-diagonal -g / ((1-g)(1+(N-1)g)).
double symmetric_gramian_inverse_diagonal(int n, double g);
double symmetric_gramian_inverse_offdiagonal(int n, double g);

}  // namespace spt
