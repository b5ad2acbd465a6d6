#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "floc/dataset.hpp"
#include "support.hpp"

using namespace floc;
using dataset::DatasetError;
using dataset::ErrorKind;

namespace {

const auto kTable3 = test::kSourceDir / "data" / "table3.csv";

ErrorKind parse_error(std::string_view text, bool header = true) {
  try {
    dataset::parse_csv(text, header);
  } catch (const DatasetError& e) {
    return e.kind();
  }
  FAIL("expected DatasetError");
  return ErrorKind::Io;
}

}  // namespace

TEST_CASE("bundled table3.csv") {
  const auto data = dataset::load_csv(kTable3, true);
  REQUIRE(data.size() == 24);
  CHECK(data.samples[0] == WaterSample{29.5, 6.9, 1.7, 10.0, 6.3});
  CHECK(data.labels[0] == DoClass::Average);

  // Only the average and high bins occur; six rows have DO >= 7.
  const auto high = std::count(data.labels.begin(), data.labels.end(), DoClass::High);
  const auto average = std::count(data.labels.begin(), data.labels.end(), DoClass::Average);
  CHECK(high == 6);
  CHECK(average == 18);

  for (std::size_t i = 0; i < data.size(); ++i) CHECK(dataset::bin_do(*data.samples[i].do_mg_l) == data.labels[i]);
}

TEST_CASE("bin_do edges are half-open") {
  CHECK(dataset::bin_do(6.3) == DoClass::Average);
  CHECK(dataset::bin_do(7.3) == DoClass::High);
  CHECK(dataset::bin_do(3.0) == DoClass::Low);
  CHECK(dataset::bin_do(0.0) == DoClass::Shallow);
  CHECK(dataset::bin_do(2.999) == DoClass::Shallow);
  CHECK(dataset::bin_do(5.0) == DoClass::Average);
  CHECK(dataset::bin_do(7.0) == DoClass::High);
  CHECK(dataset::bin_do(4.0, {1.0, 2.0, 3.0}) == DoClass::High);
  CHECK_THROWS_AS(dataset::bin_do(std::nan("")), DatasetError);
}

TEST_CASE("csv parsing errors") {
  CHECK(parse_error("temp,do,ph,tds,floc\n29.5,abc,6.9,1.7,10\n") == ErrorKind::RowParse);
  CHECK(parse_error("temp,do,ph,tds\n29.5,6.3,6.9,1.7\n") == ErrorKind::MissingColumn);
  CHECK(parse_error("temp,ph,do,tds,floc\n29.5,6.3,6.9,1.7,10\n") == ErrorKind::MissingColumn);
  CHECK(parse_error("temp,do,ph,tds,floc\n") == ErrorKind::EmptyFile);
  CHECK(parse_error("") == ErrorKind::EmptyFile);
  CHECK(parse_error("temp,do,ph,tds,floc\n29.5,-1,6.9,1.7,10\n") == ErrorKind::InvariantViolation);
  CHECK(parse_error("29.5,6.3,6.9,1.7\n", false) == ErrorKind::RowParse);

  try {
    dataset::parse_csv("temp,do,ph,tds,floc\n29.5,6.3,6.9,1.7,10\n29.5,abc,6.9,1.7,10\n", true);
    FAIL("no throw");
  } catch (const DatasetError& e) {
    CHECK(e.line() == 3);
    CHECK(e.field() == "do");
  }

  try {
    dataset::load_csv("missing.csv", true);
    FAIL("no throw");
  } catch (const DatasetError& e) {
    CHECK(e.kind() == ErrorKind::Io);
    CHECK(std::string(e.what()).find("missing.csv") != std::string::npos);
  }
}

TEST_CASE("csv header is optional and case-insensitive") {
  const auto a = dataset::parse_csv("TEMP,DO,PH,TDS,FLOC\r\n29.5,6.3,6.9,1.7,10\r\n", true);
  const auto b = dataset::parse_csv("29.5,6.3,6.9,1.7,10", false);
  CHECK(a.samples == b.samples);
  CHECK(a.labels == b.labels);
}

TEST_CASE("write_csv round-trips") {
  test::TempDir dir;
  const auto data = dataset::load_csv(kTable3, true);
  dataset::write_csv(dir / "out.csv", data);
  const auto back = dataset::load_csv(dir / "out.csv", true);
  CHECK(back.samples == data.samples);
  CHECK(back.labels == data.labels);
  CHECK(dataset::fingerprint(back) == dataset::fingerprint(data));
}

TEST_CASE("fit_norm and apply_norm") {
  SUBCASE("two-point case") {
    dataset::LabeledDataset d;
    d.push_back({1.0, 7.0, 1.0, 10.0, 6.0});
    d.push_back({3.0, 8.0, 2.0, 20.0, 6.0});
    const auto stats = dataset::fit_norm(d);
    CHECK(stats.mean[0] == 2.0);
    CHECK(stats.std[0] == 1.0);
    CHECK(dataset::apply_norm(stats, d.samples[1])[0] == 1.0);
    const WaterSample at_mean{stats.mean[0], stats.mean[1], stats.mean[2], stats.mean[3], {}};
    CHECK(dataset::apply_norm(stats, at_mean) == FeatureVector{0.0, 0.0, 0.0, 0.0});
  }
  SUBCASE("constant feature is named") {
    dataset::LabeledDataset d;
    d.push_back({1.0, 7.0, 1.0, 10.0, 6.0});
    d.push_back({3.0, 8.0, 2.0, 10.0, 6.0});
    try {
      dataset::fit_norm(d);
      FAIL("no throw");
    } catch (const DatasetError& e) {
      CHECK(e.kind() == ErrorKind::ConstantFeature);
      CHECK(e.field() == "floc");
    }
  }
  SUBCASE("table3 statistics match an independent computation") {
    const auto stats = dataset::fit_norm(dataset::load_csv(kTable3, true));
    // Population mean/std from Python's statistics module.
    const FeatureVector mean{28.712500000000002, 7.179166666666667, 3.1916666666666664, 49.166666666666664};
    const FeatureVector sd{1.4163663897452523, 0.4924252622367062, 2.1815355193583765, 47.776970277413874};
    for (std::size_t k = 0; k < 4; ++k) {
      CHECK(stats.mean[k] == doctest::Approx(mean[k]).epsilon(1e-13));
      CHECK(stats.std[k] == doctest::Approx(sd[k]).epsilon(1e-13));
    }
  }
  SUBCASE("normalized training features are standardized") {
    const auto data = dataset::load_csv(kTable3, true);
    const auto s = dataset::split(data, 0.8, 7);
    const auto stats = dataset::fit_norm(s.train);
    FeatureVector sum{}, sq{};
    for (const auto& x : s.train.samples) {
      const auto z = dataset::apply_norm(stats, x);
      for (std::size_t k = 0; k < 4; ++k) sum[k] += z[k];
    }
    const double n = static_cast<double>(s.train.size());
    for (const auto& x : s.train.samples) {
      const auto z = dataset::apply_norm(stats, x);
      for (std::size_t k = 0; k < 4; ++k) sq[k] += (z[k] - sum[k] / n) * (z[k] - sum[k] / n);
    }
    for (std::size_t k = 0; k < 4; ++k) {
      CHECK(std::abs(sum[k] / n) < 1e-9);
      CHECK(std::abs(std::sqrt(sq[k] / n) - 1.0) < 1e-9);
    }
  }
}

TEST_CASE("split") {
  const auto data = dataset::load_csv(kTable3, true);
  const auto a = dataset::split(data, 0.8, 7);
  CHECK(a.train.size() == 19);
  CHECK(a.test.size() == 5);

  const auto b = dataset::split(data, 0.8, 7);
  CHECK(a.train_indices == b.train_indices);
  CHECK(a.test_indices == b.test_indices);

  std::set<std::size_t> all(a.train_indices.begin(), a.train_indices.end());
  for (auto i : a.test_indices) CHECK(all.insert(i).second);
  CHECK(all.size() == 24);
  CHECK(*all.rbegin() == 23);

  for (std::size_t i = 0; i < a.train.size(); ++i) {
    CHECK(a.train.samples[i] == data.samples[a.train_indices[i]]);
    CHECK(a.train.labels[i] == dataset::bin_do(*a.train.samples[i].do_mg_l));
  }

  CHECK(dataset::split(data, 0.8, 8).train_indices != a.train_indices);

  dataset::LabeledDataset one;
  one.push_back({29.5, 6.9, 1.7, 10.0, 6.3});
  CHECK_THROWS_AS(dataset::split(one, 0.8, 7), DatasetError);
  try {
    dataset::split(one, 0.8, 7);
  } catch (const DatasetError& e) {
    CHECK(e.kind() == ErrorKind::DegenerateSplit);
  }
  dataset::LabeledDataset two = one;
  two.push_back({29.7, 6.9, 3.8, 50.0, 5.7});
  CHECK_THROWS_AS(dataset::split(two, 0.4, 7), DatasetError);  // floor(0.8) = 0
  CHECK(dataset::split(two, 0.5, 7).train.size() == 1);
}

TEST_CASE("fingerprint is stable and content-sensitive") {
  auto data = dataset::load_csv(kTable3, true);
  const auto fp = dataset::fingerprint(data);
  CHECK(fp.rfind("fnv1a64:", 0) == 0);
  CHECK(fp.size() == 8 + 16);
  CHECK(dataset::fingerprint(data) == fp);
  data.samples[3].floc += 1;
  CHECK(dataset::fingerprint(data) != fp);
}
