#pragma once

#include <string>

namespace spt {

enum class InteractionKind { NonInteracting, HarmonicPair, SquareWellContinued };

// Pair-interaction models in scaled (barred) units: evaluate_pair_potential
// returns the potential exactly as it enters the effective potential.
//
// The dimensionally continued square well is the one-parameter family
//   v(r, delta) = V0(delta) * [1 - tanh((r - 3*delta*Rbar) / (1 - 3*delta))],
//   V0(delta)   = -(vbar_d / 2) * (1 - b) / (1 - 3*b*delta),
// where Rbar = R / sqrt(3/2) is the well radius in scaled length units,
// vbar_d = (2/3) * v_depth is the scaled physical well depth, and the depth
// parameter b encodes the depth via vbar_d = 2 / (b - 1).  At delta = 1/3 the
// family is exactly the attractive well -vbar_d * [r < Rbar]; at delta = 0 it
// is the smooth slice (1 - tanh r) with unit prefactor.  The family has a pole
// at delta = 1/(3b), slightly below 1/3 for b > 1; the pipeline only ever
// evaluates at delta = 0 (value, r-derivatives, delta-slope) and near the
// delta = 1/3 endpoint, never at the pole.
struct InteractionModel {
  InteractionKind kind = InteractionKind::NonInteracting;
  double lambda = 0.0;           // HarmonicPair coupling
  double range = 0.0;            // SquareWell radius R, lab oscillator units
  double depth_parameter = 0.0;  // SquareWell b; <= 0 means "tune at use"

  static InteractionModel non_interacting();
  static InteractionModel harmonic_pair(double lambda);
  static InteractionModel square_well(double range, double depth_parameter);
  // Square well tuned to the first zero-energy resonance (unitarity) for the
  // given radius; runs the scattering solver once.
  static InteractionModel unitary_well(double range);

  bool is_square_well() const { return kind == InteractionKind::SquareWellContinued; }
  // Scaled physical depth vbar_d implied by the depth parameter.
  double scaled_depth() const;
  // Well radius in scaled length units at D = 3.
  double scaled_range() const;
  // Stable identity string used in cache keys.
  std::string fingerprint() const;
};

struct PotentialTerms {
  double value = 0.0;
  double first = 0.0;   // d/dr
  double second = 0.0;  // d^2/dr^2
};

// v(r, delta) in scaled units. Throws std::invalid_argument for delta outside
// [0, 1/3] on the continued well.
double evaluate_pair_potential(const InteractionModel& model, double r, double delta);

// Closed-form value and first/second r-derivatives.
PotentialTerms pair_potential_derivatives(const InteractionModel& model, double r, double delta);

// d/d delta of v(r, delta) at delta = 0 (feeds the linear-in-delta energy
// constant).
double pair_potential_delta_slope(const InteractionModel& model, double r);

// Zero-energy s-wave scattering off the physical D = 3 square well
// (depth v_depth > 0, radius R), reduced mass m/2, oscillator units.
struct ScatteringResult {
  double scattering_length = 0.0;
  double inverse_scattering_length = 0.0;
  std::string method;  // "closed-form" | "numerical-integration"
  bool near_resonance = false;
};

// Closed form a_s = R * (1 - tan(kR)/(kR)), k = sqrt(v_depth).
ScatteringResult compute_scattering_length(double v_depth, double R);
// Independent fixed-step RK4 integration of the zero-energy radial equation,
// matched outside the well.
ScatteringResult integrate_scattering_length(double v_depth, double R);

struct TuneResult {
  double depth_parameter = 0.0;  // b
  double v_depth = 0.0;          // physical depth at unitarity
  double inverse_scattering_length = 0.0;  // residual |1/a_s|
};

// Bisection on 1/a_s around the first resonance; |1/a_s| < 1e-10 a_ho^-1.
TuneResult tune_unitarity(double R);

}  // namespace spt
