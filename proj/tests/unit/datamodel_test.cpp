#include <doctest.h>

#include <cmath>

#include "floc/datamodel.hpp"

using namespace floc;

TEST_CASE("class labels") {
  CHECK(label(DoClass::Shallow) == "shallow");
  CHECK(label(DoClass::Low) == "low");
  CHECK(label(DoClass::Average) == "average");
  CHECK(label(DoClass::High) == "high");
  CHECK(do_class_from_int(2) == DoClass::Average);
  CHECK_FALSE(do_class_from_int(4));
  CHECK_FALSE(do_class_from_int(-1));
}

TEST_CASE("severity strings") {
  CHECK(to_string(Severity::Critical) == "critical");
  CHECK(severity_from_string("warning") == Severity::Warning);
  CHECK_FALSE(severity_from_string("Warning"));
  CHECK(Severity::Info < Severity::Warning);
  CHECK(Severity::Warning < Severity::Critical);
}

TEST_CASE("device ids") {
  CHECK(is_valid_device_id("TANK-A"));
  CHECK(is_valid_device_id("a_1"));
  CHECK(is_valid_device_id(std::string(32, 'x')));
  CHECK_FALSE(is_valid_device_id(""));
  CHECK_FALSE(is_valid_device_id(std::string(33, 'x')));
  CHECK_FALSE(is_valid_device_id("TANK A"));
  CHECK_FALSE(is_valid_device_id("TANK,A"));
}

TEST_CASE("water sample invariants") {
  CHECK_FALSE(validate(WaterSample{29.5, 6.9, 1.7, 10.0, 6.3}));
  CHECK(validate(WaterSample{60.0, 6.9, 1.7, 10.0, {}}));
  CHECK(validate(WaterSample{-0.1, 6.9, 1.7, 10.0, {}}));
  CHECK(validate(WaterSample{29.5, 14.1, 1.7, 10.0, {}}));
  CHECK_FALSE(validate(WaterSample{29.5, 14.0, 1.7, 10.0, {}}));
  CHECK(validate(WaterSample{29.5, 6.9, -1, 10.0, {}}));
  CHECK(validate(WaterSample{29.5, 6.9, 1.7, std::nan(""), {}}));
  CHECK(validate(WaterSample{29.5, 6.9, 1.7, 10.0, -0.5}));
}

TEST_CASE("frames carry no DO") {
  SensorFrame f{"TANK-A", 1, 1602998400, {29.5, 6.9, 1.7, 10.0, {}}};
  CHECK_FALSE(validate(f));
  f.sample.do_mg_l = 6.3;
  CHECK(validate(f));
}

TEST_CASE("norm stats need positive std") {
  NormStats n{{0, 0, 0, 0}, {1, 1, 1, 1}};
  CHECK_FALSE(validate(n));
  n.std[3] = 0;
  REQUIRE(validate(n));
  CHECK(validate(n)->find("floc") != std::string::npos);
}

TEST_CASE("advisory invariants") {
  Advisory a;
  a.probabilities = {0.25, 0.25, 0.25, 0.25};
  CHECK_FALSE(validate(a));
  a.severity = Severity::Warning;
  CHECK(validate(a));
  a.actions = {"filter out excess bioflocs"};
  CHECK_FALSE(validate(a));
  a.probabilities = {0.5, 0.5, 0.5, 0.0};
  CHECK(validate(a));
}
