#pragma once

#include <stdexcept>
#include <vector>

#include "firedrift/structure.hpp"

namespace firedrift {

struct DomainError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Fire spread configuration. A compartment fire heats an element in two
// stages: a linear ramp with slope `c` [degC/min] until the spread front
// arrives at t1 [min], then a standard cellulosic log curve on top of the
// linear part. The arrival parameters depend on whether the element sits
// above, on, or below the fire story; the per-story attenuation ratios and
// base times below are tuned for an unprotected steel frame and are plain
// configuration, so e.g. protective coatings can be modeled by raising the
// beta bases and ratios and lowering the alphas.
struct SpreadParams {
  double r_up = 0.95;    // per-story attenuation going up
  double r_down = 0.97;  // per-story attenuation going down

  double beta_up_base = 16.0;     // minutes
  double beta_horizontal = 18.0;  // minutes
  double beta_down_base = 30.0;   // minutes

  double alpha_up = 10.0;          // meters
  double alpha_horizontal = 18.0;  // meters
  double alpha_down = 5.0;         // meters

  double t_threshold = 60.0;  // minutes, end of the modeled fire
  double ambient = 20.0;      // degC; temperatures below are rises over this
};

// Per-element temperature evolution: rise = c * t for t <= t1, then
// c * t1 + 345 * log10(8 * (t - t1) + 1).
struct TempCurve {
  double c = 0.0;   // degC/min
  double t1 = 0.0;  // minutes
};

// Linear-stage slope from the element story h and the fire story h_f.
// Throws DomainError on negative story indices.
double rate_c(int h, int h_f);

// Arrival time of the growth stage. Same-story spread runs over the plan
// distance L_p; vertical spread over the spatial distance L_s.
double arrival_t1(int h, int h_f, double plan_dist, double spatial_dist,
                  const SpreadParams& params = {});

// Temperature rise over ambient at time t minutes. Throws DomainError when
// t < 0 or t > params.t_threshold.
double temperature_at(double t, const TempCurve& curve,
                      const SpreadParams& params = {});

TempCurve element_curve(const Structure& s, const Element& e,
                        const FirePoint& fire, const SpreadParams& params = {});

// Temperature rises for every element at time t, aligned with s.elements.
std::vector<double> element_temperatures(const Structure& s,
                                         const FirePoint& fire,
                                         double t,
                                         const SpreadParams& params = {});

}  // namespace firedrift
