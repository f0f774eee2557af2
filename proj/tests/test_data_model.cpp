#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "cartqubo/dataset.hpp"
#include "cartqubo/error.hpp"
#include "cartqubo/rng.hpp"
#include "doctest.h"

using namespace cartqubo;

namespace {

std::string temp_file(const std::string& name, const std::string& content) {
  const auto path = std::filesystem::temp_directory_path() / ("cartqubo_test_" + name);
  std::ofstream(path, std::ios::binary) << content;
  return path.string();
}

Dataset numbers(std::size_t n) {
  Column x;
  x.schema = {"x", ColumnKind::numeric, {}};
  std::vector<double> y;
  for (std::size_t i = 0; i < n; ++i) {
    x.values.push_back(static_cast<double>(i));
    y.push_back(static_cast<double>(i));
  }
  return Dataset({x}, "y", y);
}

}  // namespace

TEST_CASE("rng: reference stream and reproducibility") {
  // SplitMix64 from state 0: first outputs are the published reference values.
  std::uint64_t s = 0;
  CHECK(splitmix64(s) == 0xe220a8397b1dcdafULL);
  CHECK(splitmix64(s) == 0x6e789e6aa1b965f4ULL);
  Rng a(42), b(42), c(43);
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next();
    CHECK(x == b.next());
    (void)c.next();
  }
  CHECK(Rng(42).next() != Rng(43).next());
}

TEST_CASE("rng: distribution moments") {
  Rng r(7);
  const int n = 200000;
  double su = 0, sn = 0, sn2 = 0, sg = 0, sl = 0;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    su += u;
    const double z = r.normal();
    sn += z;
    sn2 += z * z;
    sg += r.gamma(2.0, 3.0);
    sl += std::log(r.lognormal(1.0, 0.5));
  }
  CHECK(su / n == doctest::Approx(0.5).epsilon(0.01));
  CHECK(std::fabs(sn / n) < 0.01);
  CHECK(sn2 / n == doctest::Approx(1.0).epsilon(0.01));
  CHECK(sg / n == doctest::Approx(6.0).epsilon(0.01));
  CHECK(sl / n == doctest::Approx(1.0).epsilon(0.01));
  std::vector<int> hist(7, 0);
  for (int i = 0; i < 70000; ++i) ++hist[r.below(7)];
  for (int h : hist) CHECK(std::abs(h - 10000) < 500);
  Rng g(3);
  double small = 0;
  for (int i = 0; i < 100000; ++i) small += g.gamma(0.5, 2.0);
  CHECK(small / 100000 == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("load_csv: three rows, categories in first-appearance order") {
  const auto path = temp_file("three.csv", "Color,Y\nRed,1.5\nBlue,2\n Red ,3\n");
  const Dataset d = load_csv(path, {{"Color", ColumnKind::categorical, {}}}, "Y");
  CHECK(d.rows() == 3);
  const auto& c = d.column(0);
  REQUIRE(c.schema.categories.size() == 2);
  CHECK(c.schema.categories[0] == "Red");
  CHECK(c.schema.categories[1] == "Blue");
  CHECK(c.codes == std::vector<std::int32_t>{0, 1, 0});
  CHECK(d.response()[2] == 3.0);
}

TEST_CASE("load_csv: errors") {
  const auto bad = temp_file("bad.csv", "Color,Y\nRed,1\nBlue,abc\n");
  try {
    (void)load_csv(bad, {{"Color", ColumnKind::categorical, {}}}, "Y");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("row 1") != std::string::npos);
  }
  CHECK_THROWS_AS(load_csv("/nonexistent/file.csv", {}, "Y"), Error);
  const auto empty = temp_file("empty.csv", "Color,Y\n");
  CHECK_THROWS_AS(load_csv(empty, {{"Color", ColumnKind::categorical, {}}}, "Y"), Error);
  const auto ok = temp_file("ok.csv", "Color,Y\nRed,1\n");
  CHECK_THROWS_AS(load_csv(ok, {{"Shade", ColumnKind::categorical, {}}}, "Y"), Error);
  CHECK_THROWS_AS(load_csv(ok, {{"Color", ColumnKind::numeric, {}}}, "Y"), Error);
  CHECK_THROWS_AS(load_csv(ok, {{"Color", ColumnKind::categorical, {"Blue"}}}, "Y"), Error);
  const auto missing = temp_file("missing.csv", "Color,Y\n,1\n");
  CHECK_THROWS_AS(load_csv(missing, {{"Color", ColumnKind::categorical, {}}}, "Y"), Error);
  const auto binary = temp_file("binary.csv", "B,Y\n2,1\n");
  CHECK_THROWS_AS(load_csv(binary, {{"B", ColumnKind::binary, {}}}, "Y"), Error);
}

TEST_CASE("load_csv: quoted fields and precomputed response") {
  // Ratio response supplied as its own column; extra columns are ignored.
  const auto path = temp_file("quoted.csv",
                              "Exposure,VehBody,\"Note\",Y\n0.5,\"sedan, large\",\"a \"\"b\"\"\",200\n"
                              "1,cabriolet,\"multi\nline\",50\n");
  const Dataset d = load_csv(path, parse_schema_spec("Exposure:numeric,VehBody:categorical"), "Y");
  CHECK(d.rows() == 2);
  CHECK(d.column(1).schema.categories[0] == "sedan, large");
  CHECK(d.column(0).values[0] == 0.5);
  CHECK(d.response()[1] == 50.0);
}

TEST_CASE("schema spec and inference") {
  const auto s = parse_schema_spec("Brand:categorical, Mileage_km:numeric,HasClaim:binary");
  REQUIRE(s.size() == 3);
  CHECK(s[2].kind == ColumnKind::binary);
  CHECK_THROWS_AS(parse_schema_spec("Brand"), Error);
  CHECK_THROWS_AS(parse_schema_spec("Brand:text"), Error);
  const auto path = temp_file("infer.csv", "A,B,C,Y\nx,1,0,1\ny,2.5,1,2\n");
  const auto inferred = infer_csv_schema(path, "Y");
  REQUIRE(inferred.size() == 3);
  CHECK(inferred[0].kind == ColumnKind::categorical);
  CHECK(inferred[1].kind == ColumnKind::numeric);
  CHECK(inferred[2].kind == ColumnKind::binary);
}

TEST_CASE("write_csv round trip is exact") {
  const Dataset d = generate_datagen(300, 5);
  std::ostringstream os;
  write_csv(d, os);
  std::istringstream is(os.str());
  const Dataset back = read_csv(is, d.schema(), d.response_name());
  REQUIRE(back.rows() == d.rows());
  for (std::size_t i = 0; i < d.rows(); ++i) CHECK(back.response()[i] == d.response()[i]);
  CHECK(back.column(2).values == d.column(2).values);
  CHECK(back.column(0).codes == d.column(0).codes);
}

TEST_CASE("partition sizes and determinism") {
  auto sizes = [](const Partition& p) {
    return std::array<std::size_t, 3>{p.train_rows.size(), p.validation_rows.size(), p.test_rows.size()};
  };
  CHECK(sizes(partition(numbers(100), {})) == std::array<std::size_t, 3>{50, 25, 25});
  CHECK(sizes(partition(numbers(101), {})) == std::array<std::size_t, 3>{51, 25, 25});
  const Dataset d = numbers(1000);
  const Partition a = partition(d, {});
  const Partition b = partition(d, {});
  CHECK(a.train_rows == b.train_rows);
  CHECK(a.test_rows == b.test_rows);
  std::set<RowIndex> all;
  for (const auto* part : {&a.train_rows, &a.validation_rows, &a.test_rows}) {
    CHECK(std::is_sorted(part->begin(), part->end()));
    all.insert(part->begin(), part->end());
  }
  CHECK(all.size() == 1000);
  SplitSpecification other;
  other.seed = 2;
  CHECK(partition(d, other).train_rows != a.train_rows);
  CHECK(a.train.response()[0] == static_cast<double>(a.train_rows[0]));
  SplitSpecification bad;
  bad.train = 0.6;
  CHECK_THROWS_AS(partition(d, bad), Error);
  CHECK_THROWS_AS(partition(numbers(3), {}), Error);
}

TEST_CASE("generate_df: shape and claim rules") {
  const Dataset d = generate_df(20000, 123);
  CHECK(d.rows() == 20000);
  REQUIRE(d.column_count() == 4);
  CHECK(d.column(0).schema.name == "Brand");
  CHECK(d.column(1).schema.name == "Color");
  CHECK(d.column(2).schema.name == "Mileage_km");
  CHECK(d.column(3).schema.name == "HasClaim");
  CHECK(d.response_name() == "ClaimAmount");
  std::size_t claims = 0;
  for (std::size_t i = 0; i < d.rows(); ++i) {
    const double y = d.response()[i];
    const double km = d.column(2).values[i];
    CHECK(km <= 250000.0);
    if (d.column(3).values[i] == 0.0) {
      CHECK(y == 0.0);
    } else {
      ++claims;
      CHECK(y >= 100.0);
    }
  }
  CHECK(claims > 0);
  CHECK(claims < d.rows());
  std::ostringstream a, b;
  write_csv(generate_df(500, 9), a);
  write_csv(generate_df(500, 9), b);
  CHECK(a.str() == b.str());
  CHECK(a.str().rfind("Brand,Color,Mileage_km,HasClaim,ClaimAmount\n", 0) == 0);
  CHECK_THROWS_AS(generate_df(0, 1), Error);
}

TEST_CASE("generate_datagen: floors and claim frequency") {
  const Dataset d = generate_datagen(10000, 1);
  std::size_t claims = 0;
  for (std::size_t i = 0; i < d.rows(); ++i) {
    CHECK(d.column(2).values[i] <= 300000.0);
    if (d.column(3).values[i] == 1.0) {
      ++claims;
      CHECK(d.response()[i] >= 50.0);
    } else {
      CHECK(d.response()[i] == 0.0);
    }
  }
  const double freq = static_cast<double>(claims) / static_cast<double>(d.rows());
  CHECK(freq >= 0.01);
  CHECK(freq <= 0.9);
  CHECK_THROWS_AS(generate_datagen(0, 1), Error);
}
