#include "spt/model.hpp"

#include <cmath>
#include <stdexcept>

namespace spt {

void SystemSpec::validate() const {
  if (n_up < 1) throw std::invalid_argument("SystemSpec: n_up must be >= 1");
  if (n_down < 0) throw std::invalid_argument("SystemSpec: n_down must be >= 0");
  if (!(trap_frequency > 0.0)) throw std::invalid_argument("SystemSpec: trap_frequency must be > 0");
  if (dimension_target < 2)
    throw std::invalid_argument("SystemSpec: dimension_target must be >= 2");
  if (interaction.is_square_well() && !(interaction.range > 0.0))
    throw std::invalid_argument("SystemSpec: square-well range must be > 0");
}

ScalingFrame build_scaling_frame(int dimension, double trap_frequency) {
  if (dimension < 2)
    throw std::invalid_argument("build_scaling_frame: dimension must be >= 2 "
                                "(angle-cosine geometry undefined below 2)");
  if (!(trap_frequency > 0.0))
    throw std::invalid_argument("build_scaling_frame: trap_frequency must be > 0");
  ScalingFrame frame;
  frame.dimension = dimension;
  frame.trap_frequency = trap_frequency;
  frame.delta = 1.0 / dimension;
  frame.kappa = 2.0 / (dimension * trap_frequency);
  frame.energy_unit = 1.0 / frame.kappa;
  frame.length_unit = std::sqrt(dimension / (2.0 * trap_frequency));
  return frame;
}

double scale_energy(double lab_energy, const ScalingFrame& frame) {
  if (!std::isfinite(lab_energy)) throw std::invalid_argument("scale_energy: non-finite input");
  return frame.kappa * lab_energy;
}

double unscale_energy(double scaled_energy, const ScalingFrame& frame) {
  if (!std::isfinite(scaled_energy))
    throw std::invalid_argument("unscale_energy: non-finite input");
  return frame.energy_unit * scaled_energy;
}

double pair_weight(const SystemSpec& spec) {
  switch (spec.interaction.kind) {
    case InteractionKind::NonInteracting:
      return 0.0;
    case InteractionKind::HarmonicPair:
      return 1.0;
    case InteractionKind::SquareWellContinued: {
      const double n = spec.n();
      if (n < 2) return 0.0;
      return (static_cast<double>(spec.n_up) * spec.n_down) / (n * (n - 1) / 2.0);
    }
  }
  return 0.0;
}

}  // namespace spt
