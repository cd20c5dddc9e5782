#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>

#include "helpers.hpp"
#include "wfcm/io.hpp"

using namespace wfcm;
using doctest::Approx;

TEST_CASE("shortest round-trip formatting") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 123456789.0, 6.02214076e23}) {
    CHECK(std::stod(format_double(v)) == v);
  }
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(2.0) == "2");
}

TEST_CASE("CSV round trip is exact") {
  const Dataset data = testing::blobs({{0.0, 0.0, 0.0}, {1.0, -1.0, 2.0}}, 25, 1.7, 4);
  const Dataset back = parse_csv(to_csv(data));
  CHECK(back.values() == data.values());
  CHECK(to_csv(back) == to_csv(data));
}

TEST_CASE("CSV parsing") {
  const Dataset d = parse_csv("a,b\n1,2\n3.5,-4e-1\n\n");
  CHECK(d.n() == 2);
  CHECK(d.dim() == 2);
  CHECK(d.values()(1, 1) == Approx(-0.4));
  CHECK(d.column_names() == std::vector<std::string>{"a", "b"});

  CHECK_THROWS_WITH_AS(parse_csv("a,b\n1,2\n3\n"), doctest::Contains("line 3"), Error);
  CHECK_THROWS_WITH_AS(parse_csv("a,b\n1,x\n"), doctest::Contains("csv-parse"), Error);
  CHECK_THROWS_AS(parse_csv("a,b\n1,nan\n"), Error);
  CHECK_THROWS_AS(parse_csv("a,b\n"), Error);
  CHECK_THROWS_AS(read_csv("/nonexistent/path/data.csv"), Error);
}

TEST_CASE("membership and CI tables") {
  RowMatrix u(2, 2);
  u << 0.25, 0.75, 1.0, 0.0;
  const std::string csv = memberships_csv(MembershipMatrix(u));
  CHECK(csv == "u1,u2,label\n0.25,0.75,2\n1,0,1\n");

  const auto p = testing::make_params(1.5, {{0.0}, {3.0}}, {0.4, 0.6}, 2.0);
  const auto q = testing::make_params(1.7, {{0.2}, {2.8}}, {0.5, 0.5}, 2.0);
  FitResult ref{p, 0.0, IsEstimate{}, MembershipMatrix(RowMatrix::Constant(1, 2, 0.5))};
  const BootstrapReport r = summarize_replicates(ref, {p, q}, 0.05);
  const std::string table = ci_table_csv(r);
  CHECK(table.rfind("Parameter,Mean ± Std.,\"95% CI\"\n", 0) == 0);
  CHECK(table.find("sigma,1.6000 ± 0.1414,\"(1.5050, 1.6950)\"") != std::string::npos);
}

TEST_CASE("parameter JSON round trip") {
  const auto p = testing::make_params(1.25, {{0.0, 1.0}, {2.0, -3.0}}, {0.3, 0.7}, 1.8);
  const ModelParams back = params_from_json(to_json(p));
  CHECK(back.sigma() == p.sigma());
  CHECK(back.centers() == p.centers());
  CHECK(back.weights() == p.weights());
  CHECK(back.fuzziness() == p.fuzziness());
  CHECK_THROWS_WITH_AS(params_from_json(Json{{"sigma", 1.0}}), doctest::Contains("config-invalid"), Error);
}

TEST_CASE("SHA-256 known vectors") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("text files") {
  const auto dir = std::filesystem::temp_directory_path() / "wfcm_io_test" / "nested";
  std::filesystem::remove_all(dir.parent_path());
  write_text(dir / "x.txt", "hello\n");
  CHECK(read_text(dir / "x.txt") == "hello\n");
  std::filesystem::remove_all(dir.parent_path());
}
