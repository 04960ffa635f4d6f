#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "edenmech/cli.hpp"

using namespace edenmech;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("edenmech_test_" + name)).string();
}

std::string write_temp(const std::string& name, const std::string& text) {
  const std::string path = temp_path(name);
  std::ofstream(path) << text;
  return path;
}

ErrorKind load_failure(const nlohmann::json& doc) {
  try {
    load_system(doc);
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected rejection of " << doc.dump();
  return ErrorKind::SyntaxError;
}

}  // namespace

TEST(Config, SchemaChecks) {
  using nlohmann::json;
  EXPECT_EQ(load_failure(json{{"template", "heisenberg"}, {"colour", 1}}), ErrorKind::ConfigError);
  EXPECT_EQ(load_failure(json{{"template", "nope"}}), ErrorKind::ConfigError);
  EXPECT_EQ(load_failure(json{{"potential", "0"}}), ErrorKind::ConfigError);  // custom needs a dimension
  EXPECT_EQ(load_failure(json{{"template", "heisenberg"}, {"dimension", 4}}), ErrorKind::ConfigError);
  EXPECT_EQ(load_failure(json{{"dimension", 2}, {"potential", "0"}, {"metric", "euclid"}}), ErrorKind::ConfigError);
  EXPECT_EQ(load_failure(json{{"dimension", 2}, {"potential", "p1"}}), ErrorKind::MechanicalTypeViolation);
  EXPECT_EQ(load_failure(json{{"dimension", 2}, {"potential", "0"}, {"parameters", {{"a", "x"}}}}),
            ErrorKind::ConfigError);
  EXPECT_EQ(load_failure(json{{"dimension", 2}, {"potential", "q1 *"}}), ErrorKind::SyntaxError);
  EXPECT_EQ(load_failure(json{{"template", "heisenberg"}, {"parameters", {{"alpha", 1}}}, {"potential", "beta*z"}}),
            ErrorKind::UnknownIdentifier);
}

TEST(Config, TemplatesOverridesAndFiles) {
  const LoadedSystem free6 = load_system(nlohmann::json{{"template", "free_particle"}, {"dimension", 6}});
  EXPECT_EQ(free6.system.dim(), 6);
  const LoadedSystem heavy = load_template("knife_edge", {{"m", 4.0}});
  EXPECT_EQ(heavy.system.metric_at(Vec::Zero(3))(0, 0), 4.0);
  EXPECT_EQ(heavy.mechanical_observables.size(), 2u);

  const std::string path = write_temp("heis.json", R"({"template": "heisenberg", "parameters": {"alpha": 2}})");
  EXPECT_EQ(load_system_file(path).system.params().at("alpha"), 2.0);
  EXPECT_THROW(load_system_file(write_temp("broken.json", "{ not json")), Error);
  EXPECT_THROW(load_system_file(temp_path("missing.json")), Error);
}

TEST(PointParsing, Shapes) {
  const PhasePoint x = cli::parse_point("1,2;3,4;5");
  EXPECT_EQ(x.q, (Vec{{1.0, 2.0}}));
  EXPECT_EQ(x.p, (Vec{{3.0, 4.0}}));
  EXPECT_EQ(x.z, 5.0);
  EXPECT_THROW(cli::parse_point("1,2;3;5"), cli::UsageError);
  EXPECT_THROW(cli::parse_point("1;2;3", 2), cli::UsageError);
  EXPECT_THROW(cli::parse_point("1;2"), cli::UsageError);
  EXPECT_THROW(cli::parse_point("1;x;3"), cli::UsageError);
}

TEST(Cli, BracketExamples) {
  Outcome r = run_cli({"bracket", "--f", "q1", "--g", "p1", "--point", "0.3,0.1;1,2;0.5"});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "-1\n");
  r = run_cli({"bracket", "--f", "q1", "--g", "q2", "--point", "0.3,0.1;1,2;0.5", "--kind", "contact"});
  EXPECT_EQ(r.out, "0\n");
  r = run_cli({"bracket", "--template", "heisenberg", "--kind", "eden", "--f", "q1", "--g", "p1", "--point",
               "0,0,0;1,2,3;0"});
  EXPECT_EQ(r.code, 4);
  r = run_cli({"bracket", "--template", "heisenberg", "--kind", "eden", "--f", "q1", "--g", "p1", "--point",
               "0,0,0;1,2,0;0"});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "-1\n");
  r = run_cli({"bracket", "--f", "q1*(p2", "--g", "p1", "--point", "0,0;0,0;0"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("column 7"), std::string::npos) << r.err;
  r = run_cli({"bracket", "--f", "log(q1)", "--g", "p1", "--point", "-1;0;0"});
  EXPECT_EQ(r.code, 3);
}

TEST(Cli, ProjectExamples) {
  Outcome r = run_cli({"project", "--template", "heisenberg", "--point", "0,0,0;1,2,3;0"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto doc = nlohmann::json::parse(r.out);
  EXPECT_EQ(doc["p"], (std::vector<double>{1.0, 2.0, 0.0}));
  EXPECT_EQ(doc["P"], (std::vector<std::vector<double>>{{1, 0, 0}, {0, 1, 0}, {0, 0, 0}}));

  r = run_cli({"project", "--template", "heisenberg", "--point", "0.5,1,0;1,1,1;0.25"});
  ASSERT_EQ(r.code, 0);
  const auto on = nlohmann::json::parse(r.out);
  EXPECT_EQ(on["p"], (std::vector<double>{1.0, 1.0, 1.0}));
  EXPECT_EQ(on["z"], 0.25);
  Mat p(3, 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) p(i, j) = on["P"][static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  EXPECT_LT((p * p - p).lpNorm<Eigen::Infinity>(), 1e-15);

  EXPECT_EQ(run_cli({"project", "--point", "0,0,0;1,2,3;0"}).code, 2);
}

TEST(Cli, SimulateWritesCsvAndChecksArity) {
  const std::string path = temp_path("free.csv");
  Outcome r = run_cli({"simulate", "--template", "free_particle", "--initial", "0,0,0;1,2,3;0", "--t1", "1", "--dt",
                       "0.001", "--output", path});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("steps 1000"), std::string::npos);
  std::ifstream in(path);
  const CsvTable table = read_csv(in);
  EXPECT_EQ(table.columns.front(), "t");
  EXPECT_EQ(table.rows.size(), 1001u);
  const auto h_col = static_cast<std::size_t>(std::find(table.columns.begin(), table.columns.end(), "H") -
                                              table.columns.begin());
  for (const auto& row : table.rows) EXPECT_NEAR(row[h_col], 7.0, 1e-12);

  r = run_cli({"simulate", "--template", "heisenberg", "--initial", "0.2,0.3,0.1;1,0.5,0.3;0", "--t1", "1", "--dt",
               "0.001", "--constrained", "--output", path});
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream in2(path);
  double worst = 0.0;
  for (const auto& row : read_csv(in2).rows) worst = std::max(worst, std::abs(row.back()));
  EXPECT_LT(worst, 1e-6);

  EXPECT_EQ(run_cli({"simulate", "--template", "heisenberg", "--initial", "0,0;1,0;0", "--t1", "1", "--dt", "0.1",
                     "--output", path})
                .code,
            2);
  EXPECT_EQ(run_cli({"simulate", "--template", "heisenberg", "--initial", "0,0,0;0,0,1;0", "--t1", "1", "--dt",
                     "0.1", "--constrained", "--output", path})
                .code,
            4);
  EXPECT_EQ(run_cli({"simulate", "--template", "heisenberg", "--template", "knife_edge", "--initial",
                     "0,0,0;0,0,0;0", "--t1", "1", "--dt", "0.1", "--output", path})
                .code,
            2);
}

TEST(Cli, VerifyIsDeterministicAndHonoursSeed) {
  const Outcome a = run_cli({"verify", "--template", "heisenberg", "--samples", "20", "--seed", "42"});
  const Outcome b = run_cli({"verify", "--template", "heisenberg", "--samples", "20", "--seed", "42"});
  ASSERT_EQ(a.code, 0) << a.out;
  EXPECT_EQ(a.out, b.out);
  const auto doc = nlohmann::json::parse(a.out);
  EXPECT_EQ(doc["seed"], 42);
  EXPECT_EQ(doc["properties"].size(), 14u);

  const Outcome c = run_cli({"verify", "--template", "heisenberg", "--samples", "20", "--seed", "7"});
  EXPECT_NE(a.out, c.out);

  ::setenv("EDENMECH_SEED", "7", 1);
  const Outcome d = run_cli({"verify", "--template", "heisenberg", "--samples", "20"});
  ::unsetenv("EDENMECH_SEED");
  EXPECT_EQ(c.out, d.out);
}

TEST(Cli, VerifyNegativeControlAndOverrides) {
  const Outcome bad = run_cli({"verify", "--template", "heisenberg", "--samples", "20", "--corrupt-gamma", "1.01"});
  EXPECT_EQ(bad.code, 1);
  const auto doc = nlohmann::json::parse(bad.out);
  for (const auto& p : doc["properties"]) {
    if (p["property_id"] == "P7") {
      EXPECT_FALSE(p["pass"].get<bool>());
    }
  }
  const Outcome strict = run_cli({"verify", "--template", "heisenberg", "--samples", "5", "--tol", "P1=0"});
  EXPECT_EQ(strict.code, 1);
  EXPECT_EQ(run_cli({"verify", "--template", "heisenberg", "--tol", "P15=1"}).code, 2);

  const std::string report = temp_path("report.json");
  const Outcome file = run_cli({"verify", "--template", "knife_edge", "--samples", "10", "--report", report});
  EXPECT_EQ(file.code, 0);
  EXPECT_NE(file.out.find("PASS P14"), std::string::npos);
  std::ifstream in(report);
  EXPECT_TRUE(nlohmann::json::parse(in)["pass"].get<bool>());
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run_cli({}).code, 2);
  EXPECT_EQ(run_cli({"dance"}).code, 2);
  EXPECT_EQ(run_cli({"verify", "--system", temp_path("missing.json")}).code, 2);
  EXPECT_EQ(run_cli({"--help"}).code, 0);
}
