#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "qdetect/montecarlo.hpp"
#include "qdetect/pde_verifier.hpp"

namespace qdetect {

/// |value - reference| <= max(se_multiple * se, rel_tol * |reference|).
bool agrees_within(double value, double reference, double se, double rel_tol = 0.1,
                   double se_multiple = 3.0);

struct CrossValParams {
  std::vector<double> thresholds{4.0, 5.0, 6.0};
  std::size_t replications = 20000;
  double dt = 0.02;
  HorizonPolicy horizon{};
  std::uint64_t seed = 11;
  unsigned threads = 0;
  Monitoring monitoring = Monitoring::BrownianBridge;
  PdeOptions pde{};
  double rel_tol = 0.1;
  double se_multiple = 3.0;
};

/// Three estimates of the two-sensor false-alarm energy at threshold h: simulation, the
/// finite-difference corner value divided by eps = 1/h, and (1/2) e^h.
struct CrossValRow {
  double threshold = 0.0;
  double epsilon = 0.0;
  std::size_t n_cells = 0;
  double mc_gamma = 0.0;
  double mc_se = 0.0;
  double fd_gamma = 0.0;
  double asymptote = 0.0;
  bool mc_fd = false;
  bool mc_asymptote = false;
  bool fd_asymptote = false;

  bool all_agree() const noexcept { return mc_fd && mc_asymptote && fd_asymptote; }
};

/// All thresholds share one set of two-sensor paths (one pass records every level).
std::vector<CrossValRow> cross_validate(const CrossValParams& params);

}  // namespace qdetect
