#include "qdetect/drift_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "qdetect/errors.hpp"

namespace qdetect {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double parse_real(std::string_view text, std::string_view what) {
  std::string buf(text);
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(buf, &used);
  } catch (const std::exception&) {
    throw InvalidArgument("bad " + std::string(what) + " '" + buf + "'");
  }
  if (used != buf.size() || !std::isfinite(value)) {
    throw InvalidArgument("bad " + std::string(what) + " '" + buf + "'");
  }
  return value;
}

}  // namespace

DriftModel::DriftModel(Kind kind) : kind_(kind) {
  std::visit(overloaded{
                 [](const ConstantDrift& c) {
                   if (!std::isfinite(c.level)) throw InvalidArgument("constant drift must be finite");
                 },
                 [](const CoupledAutoregressiveDrift& a) {
                   if (!std::isfinite(a.rate) || a.rate <= 0.0) {
                     throw InvalidArgument("autoregressive rate must be finite and > 0");
                   }
                 },
                 [](const RotationalPairDrift&) {},
             },
             kind_);
}

DriftModel DriftModel::parse(std::string_view text) {
  const auto colon = text.find(':');
  const std::string_view name = text.substr(0, colon);
  const std::string_view arg = colon == std::string_view::npos ? std::string_view{} : text.substr(colon + 1);
  if (name == "constant") {
    return constant(arg.empty() ? 1.0 : parse_real(arg, "constant drift level"));
  }
  if (name == "ar" || name == "autoregressive") {
    return coupled_autoregressive(arg.empty() ? 0.5 : parse_real(arg, "autoregressive rate"));
  }
  if (name == "rotational") {
    if (arg.empty() || arg == "constant") return rotational_pair(RotationMode::ConstantVector);
    if (arg == "state") return rotational_pair(RotationMode::StateRotation);
    throw InvalidArgument("unknown rotational mode '" + std::string(arg) + "'");
  }
  throw InvalidArgument("unknown drift model '" + std::string(text) + "'");
}

std::string DriftModel::describe() const {
  std::ostringstream os;
  os.precision(17);
  std::visit(overloaded{
                 [&](const ConstantDrift& c) { os << "constant:" << c.level; },
                 [&](const CoupledAutoregressiveDrift& a) { os << "ar:" << a.rate; },
                 [&](const RotationalPairDrift& r) {
                   os << (r.mode == RotationMode::ConstantVector ? "rotational" : "rotational:state");
                 },
             },
             kind_);
  return os.str();
}

void DriftModel::validate(std::size_t n_sensors) const {
  if (n_sensors == 0) throw InvalidArgument("n_sensors must be >= 1");
  if (std::holds_alternative<RotationalPairDrift>(kind_) && n_sensors != 2) {
    throw InvalidArgument("rotational drift model requires exactly 2 sensors (got " +
                          std::to_string(n_sensors) + ")");
  }
}

bool DriftModel::state_dependent() const noexcept {
  return std::visit(overloaded{
                        [](const ConstantDrift&) { return false; },
                        [](const CoupledAutoregressiveDrift&) { return true; },
                        [](const RotationalPairDrift& r) { return r.mode == RotationMode::StateRotation; },
                    },
                    kind_);
}

bool DriftModel::has_sufficient_energy() const noexcept {
  return std::visit(overloaded{
                        [](const ConstantDrift& c) { return c.level != 0.0; },
                        [](const CoupledAutoregressiveDrift&) { return true; },
                        [](const RotationalPairDrift&) { return true; },
                    },
                    kind_);
}

void DriftModel::evaluate(double /*t*/, std::span<const double> z, std::span<double> out) const {
  std::visit(overloaded{
                 [&](const ConstantDrift& c) { std::fill(out.begin(), out.end(), c.level); },
                 [&](const CoupledAutoregressiveDrift& a) {
                   const double total = std::accumulate(z.begin(), z.end(), 0.0);
                   std::fill(out.begin(), out.end(), -a.rate * total);
                 },
                 [&](const RotationalPairDrift& r) {
                   if (r.mode == RotationMode::ConstantVector) {
                     out[0] = 1.0;
                     out[1] = -1.0;
                   } else {
                     out[0] = z[1];
                     out[1] = -z[0];
                   }
                 },
             },
             kind_);
}

}  // namespace qdetect
