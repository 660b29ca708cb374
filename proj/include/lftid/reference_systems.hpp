#pragma once

#include "lftid/igs.hpp"
#include "lftid/model.hpp"

namespace lftid {

// Mass-spring-damper  H(s) = 100 / (m s^2 + mu s + k)  with
// theta = (m - 1, mu - 7, k - 25). Four-state LFT realization around the
// nominal denominator d(s) = s^2 + 7 s + 25, so that
//   G_yu = 100/d, G_zu = 1, G_zv = -[s^2 s 1]/d, G_yv = G_yu G_zv.
LftPlant mass_spring_plant();

// Two rotation blocks [[sigma_i, omega_i], [-omega_i, sigma_i]], xi(0) = (1,1,1,1),
// Pi = [0.25 0.25 0.5 0.5].
InputGenerator two_tone_generator(double sigma1 = 0.0, double sigma2 = 0.0, double omega1 = 3.0,
                                  double omega2 = 4.5);

// Parameter value used for the single-trial checks: m = 1.1852, mu = 7.5126, k = 31.2582.
ParameterVector mass_spring_reference_theta();

}  // namespace lftid
