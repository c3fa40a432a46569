#include <gtest/gtest.h>

#include <vector>

#include "qdetect/drift_model.hpp"
#include "qdetect/errors.hpp"

using namespace qdetect;

TEST(DriftModel, ConstantIgnoresStateAndTime) {
  const auto m = DriftModel::constant(1.5);
  std::vector<double> z{3.0, -2.0, 7.0}, out(3);
  m.evaluate(12.0, z, out);
  EXPECT_EQ(out, (std::vector<double>{1.5, 1.5, 1.5}));
  EXPECT_FALSE(m.state_dependent());
}

TEST(DriftModel, CoupledAutoregressiveIsMinusRateTimesSum) {
  const auto m = DriftModel::coupled_autoregressive(0.5);
  std::vector<double> z{1.0, 3.0}, out(2);
  m.evaluate(0.0, z, out);
  EXPECT_DOUBLE_EQ(out[0], -2.0);
  EXPECT_DOUBLE_EQ(out[1], -2.0);
  EXPECT_TRUE(m.state_dependent());
}

TEST(DriftModel, RotationalVariants) {
  std::vector<double> z{0.25, -4.0}, out(2);
  DriftModel::rotational_pair(RotationMode::ConstantVector).evaluate(0.0, z, out);
  EXPECT_EQ(out, (std::vector<double>{1.0, -1.0}));
  DriftModel::rotational_pair(RotationMode::StateRotation).evaluate(0.0, z, out);
  EXPECT_EQ(out, (std::vector<double>{-4.0, -0.25}));
}

TEST(DriftModel, RotationalRequiresTwoSensors) {
  const auto m = DriftModel::parse("rotational");
  EXPECT_NO_THROW(m.validate(2));
  EXPECT_THROW(m.validate(3), InvalidArgument);
  EXPECT_THROW(m.validate(1), InvalidArgument);
}

TEST(DriftModel, ParseAndDescribeRoundTrip) {
  for (const char* text : {"constant:1", "constant:-0.25", "ar:0.5", "rotational", "rotational:state"}) {
    EXPECT_EQ(DriftModel::parse(DriftModel::parse(text).describe()).describe(), DriftModel::parse(text).describe());
  }
  EXPECT_EQ(DriftModel::parse("constant:2").describe(), "constant:2");
  EXPECT_THROW(DriftModel::parse("sinus"), InvalidArgument);
  EXPECT_THROW(DriftModel::parse("constant:abc"), InvalidArgument);
  EXPECT_THROW(DriftModel::parse("ar:-1"), InvalidArgument);
  EXPECT_THROW(DriftModel::parse("constant:inf"), InvalidArgument);
}

TEST(DriftModel, EnergyCondition) {
  EXPECT_FALSE(DriftModel::constant(0.0).has_sufficient_energy());
  EXPECT_TRUE(DriftModel::constant(-0.5).has_sufficient_energy());
  EXPECT_TRUE(DriftModel::coupled_autoregressive(0.5).has_sufficient_energy());
}
