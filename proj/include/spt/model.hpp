#pragma once

#include <map>
#include <string>

#include "spt/interaction.hpp"

namespace spt {

// Version tag for the scaling/derivation conventions; embedded in cache keys
// so convention changes invalidate stored entries.
inline constexpr const char* kConventionsVersion = "spt-v1";

// Full problem statement.
struct SystemSpec {
  int n_up = 1;
  int n_down = 1;
  double trap_frequency = 1.0;  // omega_ho; all inputs in its oscillator units
  InteractionModel interaction{};
  int dimension_target = 3;

  int n() const { return n_up + n_down; }
  // Throws std::invalid_argument on violated invariants.
  void validate() const;
};

// Dimensional-scaling bookkeeping.
//
// Convention (hbar = m = 1, inputs in oscillator units of omega):
//   delta       = 1/D
//   kappa       = 2/(D*omega)        — scaled energy Ebar = kappa * E; equals
//                                      D^2/omega_bar with omega_bar = D^3*omega/2
//   length_unit = sqrt(D/(2*omega))  — lab length r = length_unit * rbar
// With these choices the scaled kinetic prefactor is 4*delta^2 and the
// D-dimensional oscillator is exactly linear in D, which pins the convention
// through the ideal-gas exactness anchor.
struct ScalingFrame {
  int dimension = 3;
  double trap_frequency = 1.0;
  double delta = 1.0 / 3.0;
  double kappa = 2.0 / 3.0;
  double energy_unit = 1.5;  // = 1/kappa; E = energy_unit * Ebar
  double length_unit = 1.0;
};

// Throws std::invalid_argument for dimension < 2 (angle-cosine geometry
// undefined) or non-positive trap frequency.
ScalingFrame build_scaling_frame(int dimension, double trap_frequency = 1.0);

double scale_energy(double lab_energy, const ScalingFrame& frame);
double unscale_energy(double scaled_energy, const ScalingFrame& frame);

// Assembled harmonic-order energy.
struct EnergyResult {
  double e_infinity_scaled = 0.0;
  double harmonic_term_scaled = 0.0;  // delta * [sum_mu (n_mu + d_mu/2) w_mu + v0]
  double total_scaled = 0.0;
  double total_unscaled = 0.0;  // units of hbar*omega_ho
  // Scaled per-mode contributions delta*(n_mu + d_mu/2)*w_mu keyed by mode
  // label, plus "v0" -> delta*v0; entries sum to harmonic_term_scaled.
  std::map<std::string, double> breakdown;
  // Shell quanta added above the minimal filling to reach an occupancy
  // compatible with the parity constraints (0 when the minimal filling works).
  int promoted_quanta = 0;
};

// Effective unlike-pair weight applied uniformly to every pair:
//   SquareWellContinued: N1*N2 / (N*(N-1)/2)  (preserves the unlike-pair count)
//   HarmonicPair:        1                    (all-pairs validation model)
//   NonInteracting:      0
double pair_weight(const SystemSpec& spec);

}  // namespace spt
