#pragma once

#include <map>
#include <string>
#include <vector>

#include "spt/geometry.hpp"

namespace spt {

// S_N-invariant pattern scalars of the harmonic-order F (potential curvature)
// and G (kinetic) matrices at the symmetric minimum. Index classes:
//   radial block  (N x N):        a (diagonal), b (off-diagonal)
//   pair block    (P x P, P=N(N-1)/2): c1 (same pair), c2 (share one index),
//                                      c3 (disjoint pairs)
//   radial<->pair coupling:       e1 (radial index in the pair), e2 (not in it)
struct FGPatterns {
  int n = 0;
  double r = 0.0;      // symmetric radius the patterns were evaluated at
  double gamma = 0.0;  // symmetric angle cosine
  double f_a = 0, f_b = 0, f_c1 = 0, f_c2 = 0, f_c3 = 0, f_e1 = 0, f_e2 = 0;
  double g_a = 0, g_b = 0, g_c1 = 0, g_c2 = 0, g_c3 = 0, g_e1 = 0, g_e2 = 0;
  // Max spread of each F class over distinct representative index tuples
  // (exact-zero spread is the S_N-invariance witness).
  double residual = 0.0;
};

// Analytic second derivatives of the effective potential plus the
// internal-coordinate kinetic tensor, both at the symmetric minimum.
// Throws when the class-consistency residual exceeds 1e-8.
FGPatterns build_fg_patterns(const SymmetricMinimum& minimum, const InteractionModel& model,
                             const SystemSpec& spec);

// Closed-form eigenvalues of a pair-indexed pattern matrix (Johnson scheme
// J(N,2)): sectors [N], [N-1,1], [N-2,2] with multiplicities 1, N-1, N(N-3)/2.
struct JohnsonEigenvalues {
  double sym = 0.0;    // [N]
  double mixed = 0.0;  // [N-1,1]
  double pair = 0.0;   // [N-2,2] (meaningful for N >= 4)
};
JohnsonEigenvalues johnson_eigenvalues(double c1, double c2, double c3, int n);

// Five distinct normal-mode roots with multiplicities. Mode labels:
//   0+ (center of mass), 0- (breathing): [N] sector, d = 1 each
//   1+, 1- (single-particle):            [N-1,1] sector, d = N-1 each
//   2 (phonon):                          [N-2,2] sector, d = N(N-3)/2
// N = 3 has no "2" sector; N = 2 has modes {0+, 0-, 1-} only.
struct NormalModeSpectrum {
  int n = 0;
  std::map<std::string, double> omega;
  std::map<std::string, int> multiplicity;
  std::map<std::string, std::string> character;
  double v0 = 0.0;

  int total_modes() const;  // sum of multiplicities == N(N+1)/2
};

// Sector-reduced generalized eigensolve. Contraction coefficients are obtained
// by applying the pattern matrices to explicit normalized sector basis
// vectors (never hand-derived sector formulas). Throws on negative roots
// (saddle point).
NormalModeSpectrum reduced_eigensolve(const FGPatterns& patterns, int n);

// Dense oracle: materializes F and G from the patterns and solves the full
// P+N dimensional generalized problem; returns all N(N+1)/2 eigenvalues
// (lambda = omega^2), ascending.
std::vector<double> full_eigensolve(const FGPatterns& patterns, int n);

// The delta-linear constant of the harmonic expansion: first-derivative and
// Jacobian contributions of the scaled kinetic operator at the minimum plus
// the delta-slope of the interaction. Includes an internal consistency check
// of the quadratic-in-D extraction against the centrifugal term.
double compute_v0(const SymmetricMinimum& minimum, const FGPatterns& patterns,
                  const SystemSpec& spec);

}  // namespace spt
