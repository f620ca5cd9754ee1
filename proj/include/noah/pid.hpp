#pragma once

// Feedback controller that adjusts the budget handed to the optimizer from
// observed consumption, plus a linear test plant for closed-loop runs.

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>
#include <span>
#include <vector>

#include "noah/common.hpp"

namespace noah {

struct PidGains {
  double kp = 0.5;
  double ki = 0.2;
  double kd = 0.0;
};

struct ControllerState {
  PidGains gains;
  double target = 1.0;  // true budget C
  double c_max = 2.0;   // output clamp [0, c_max]
  double windup_cap = 5.0;
  double integral = 0.0;
  double prev_error = 0.0;

  /// Defaults scale with the target: c_max = 2C, |integral| <= 5C.
  static ControllerState for_target(double target, PidGains gains = {}) {
    ControllerState s;
    s.gains = gains;
    s.target = target;
    s.c_max = 2.0 * target;
    s.windup_cap = 5.0 * target;
    s.check();
    return s;
  }

  void check() const {
    if (!std::isfinite(gains.kp) || !std::isfinite(gains.ki) || !std::isfinite(gains.kd))
      throw ValidationError("pid: gains must be finite");
    if (!(target >= 0.0) || !std::isfinite(target)) throw ValidationError("pid: target must be nonnegative");
    if (!(c_max >= 0.0) || !std::isfinite(c_max)) throw ValidationError("pid: c_max must be nonnegative");
    if (!(windup_cap >= 0.0)) throw ValidationError("pid: windup_cap must be nonnegative");
  }
};

struct ControlOutput {
  ControllerState state;
  double c_star = 0.0;
  double error = 0.0;
};

/// e = observed - C; C* = clamp(C - (kp e + ki I + kd (e - e_prev)), 0, c_max)
/// with the running error sum I clamped to +-windup_cap.
inline ControlOutput controller_step(const ControllerState& s, double observed) {
  s.check();
  if (!std::isfinite(observed)) throw ValidationError("pid: observed consumption must be finite");
  ControlOutput out;
  out.state = s;
  const double e = observed - s.target;
  out.state.integral = std::clamp(s.integral + e, -s.windup_cap, s.windup_cap);
  const double u = s.gains.kp * e + s.gains.ki * out.state.integral + s.gains.kd * (e - s.prev_error);
  out.state.prev_error = e;
  out.c_star = std::clamp(s.target - u, 0.0, s.c_max);
  out.error = e;
  return out;
}

struct PlantConfig {
  double gain = 1.0;
  double noise_sd = 0.0;
  double drift = 0.0;  // added drift * t at step t (t from 1)
  double initial_input = -1.0;  // budget fed at step 1; negative means the target

  void check() const {
    if (!std::isfinite(gain) || !(noise_sd >= 0.0) || !std::isfinite(drift) || !std::isfinite(initial_input))
      throw ValidationError("plant: invalid parameters");
  }
};

struct PlantStep {
  std::size_t step = 0;
  double c_star = 0.0;    // budget fed to the plant this step
  double observed = 0.0;  // consumption reported back
  double error = 0.0;     // observed - C
};

/// observed_t = gain * C*_t + noise + drift * t; the controller then sets C*_{t+1}.
inline std::vector<PlantStep> simulate_plant(ControllerState controller, const PlantConfig& plant, std::size_t steps,
                                             Rng& rng) {
  controller.check();
  plant.check();
  if (steps < 1) throw ValidationError("simulate_plant: steps must be at least 1");
  std::normal_distribution<double> noise(0.0, 1.0);
  double input = plant.initial_input < 0.0 ? controller.target : plant.initial_input;
  std::vector<PlantStep> trace;
  trace.reserve(steps);
  for (std::size_t t = 1; t <= steps; ++t) {
    double observed = plant.gain * input + plant.drift * static_cast<double>(t);
    if (plant.noise_sd > 0.0) observed += plant.noise_sd * noise(rng);
    trace.push_back({t, input, observed, observed - controller.target});
    const auto out = controller_step(controller, observed);
    controller = out.state;
    input = out.c_star;
  }
  return trace;
}

inline void write_plant_trace_csv(std::ostream& os, std::span<const PlantStep> trace) {
  os << "step,C_star,observed,error\n";
  for (const auto& s : trace)
    os << s.step << ',' << fmt_double(s.c_star) << ',' << fmt_double(s.observed) << ',' << fmt_double(s.error) << '\n';
}

}  // namespace noah
