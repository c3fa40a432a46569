#pragma once

#include <algorithm>
#include <cmath>

#include "qdetect/pde_verifier.hpp"

namespace qdetect {

/// Three-point coefficients of eps*u'' + b*u' at an interior node:
/// (lower*u[i-1] - (lower+upper)*u[i] + upper*u[i+1]).
struct Stencil1D {
  double lower = 0.0;
  double upper = 0.0;
};

inline double fitted_diffusion(double epsilon, double drift, double d) {
  const double half_peclet = std::abs(drift) * d / (2.0 * epsilon);
  if (half_peclet < 1e-6) return epsilon * (1.0 + half_peclet * half_peclet / 3.0);
  return epsilon * half_peclet / std::tanh(half_peclet);
}

inline Stencil1D stencil_1d(double epsilon, double drift, double d, AdvectionScheme scheme) {
  const double d2 = d * d;
  switch (scheme) {
    case AdvectionScheme::Upwind:
      return {epsilon / d2 + std::max(-drift, 0.0) / d, epsilon / d2 + std::max(drift, 0.0) / d};
    case AdvectionScheme::Centered:
      return {epsilon / d2 - drift / (2.0 * d), epsilon / d2 + drift / (2.0 * d)};
    case AdvectionScheme::ExponentialFitted:
      break;
  }
  const double diffusion = fitted_diffusion(epsilon, drift, d);
  return {diffusion / d2 - drift / (2.0 * d), diffusion / d2 + drift / (2.0 * d)};
}

}  // namespace qdetect
