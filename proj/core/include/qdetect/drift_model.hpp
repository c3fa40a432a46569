#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <variant>

namespace qdetect {

/// alpha_t = level for every sensor.
struct ConstantDrift {
  double level = 1.0;
};

/// alpha_t = -rate * sum_j Z_t^(j), identical across sensors.
struct CoupledAutoregressiveDrift {
  double rate = 0.5;
};

/// Two-sensor example whose displayed equation is a constant skew matrix times dt.
///   ConstantVector: alpha = (1, -1), the row sums of [[0, 1], [-1, 0]].
///   StateRotation:  alpha = (Z2, -Z1), the matrix acting on the state.
enum class RotationMode { ConstantVector, StateRotation };

struct RotationalPairDrift {
  RotationMode mode = RotationMode::ConstantVector;
};

/// Symmetric drift rule shared by all sensors. Evaluation is deterministic and draws no randomness.
class DriftModel {
 public:
  using Kind = std::variant<ConstantDrift, CoupledAutoregressiveDrift, RotationalPairDrift>;

  DriftModel() = default;
  explicit DriftModel(Kind kind);

  static DriftModel constant(double level) { return DriftModel{ConstantDrift{level}}; }
  static DriftModel coupled_autoregressive(double rate) {
    return DriftModel{CoupledAutoregressiveDrift{rate}};
  }
  static DriftModel rotational_pair(RotationMode mode = RotationMode::ConstantVector) {
    return DriftModel{RotationalPairDrift{mode}};
  }

  /// Parses "constant:<level>", "ar:<rate>", "rotational" or "rotational:state".
  static DriftModel parse(std::string_view text);
  std::string describe() const;

  const Kind& kind() const noexcept { return kind_; }

  /// Throws InvalidArgument when the model cannot drive n_sensors sensors.
  void validate(std::size_t n_sensors) const;

  /// True when alpha depends on the observed state.
  bool state_dependent() const noexcept;

  /// Whether the accumulated energy of alpha diverges almost surely, so CUSUM stopping times are
  /// finite. A zero constant drift fails this condition.
  bool has_sufficient_energy() const noexcept;

  /// Model drift for every sensor at time t given the current observation vector z.
  void evaluate(double t, std::span<const double> z, std::span<double> out) const;

 private:
  Kind kind_{ConstantDrift{}};
};

}  // namespace qdetect
