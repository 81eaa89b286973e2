#ifndef SEVPR_SNN_LIF_HPP
#define SEVPR_SNN_LIF_HPP

#include <cmath>

namespace sevpr::snn {

// Leaky integrate-and-fire neuron constants. Dynamics per time step:
//   u <- decay * u * (1 - s_prev) + I    (hard reset to zero after a spike)
//   s  = 1 if u >= v_threshold else 0
// The arctan surrogate stands in for the spike Heaviside during training.
struct LifParams {
  double v_threshold = 1.0;
  double decay = 0.5; // in [0, 1)
  double surrogate_alpha = 2.0;
};

// d(spike)/d(u_c) at centered membrane u_c = u - v_threshold.
inline double surrogate_deriv(double u_c, double alpha) {
  const double z = 1.5707963267948966 * alpha * u_c; // pi*alpha*u_c/2
  return alpha / (2.0 * (1.0 + z * z));
}

// Primitive of surrogate_deriv; the smooth spike used by the
// finite-difference oracle mode. Maps R -> (0,1) with value 1/2 at u_c = 0.
inline double surrogate_smooth(double u_c, double alpha) {
  return std::atan(1.5707963267948966 * alpha * u_c) / 3.141592653589793 + 0.5;
}

// Forward mode. Spiking emits binary spikes. Smoothed replaces the
// Heaviside with surrogate_smooth (and count-binarization with identity) so
// the forward is differentiable; the reset decision stays on the hard
// threshold in both modes, which is exactly what the analytic backward
// assumes when it treats reset gating as constant.
enum class Mode { Spiking, Smoothed };

} // namespace sevpr::snn

#endif
