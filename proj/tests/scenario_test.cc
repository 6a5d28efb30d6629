#include "qobs/scenario.h"

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "qobs/errors.h"
#include "test_util.h"

namespace qobs {
namespace {

using testing::Eye;

const std::filesystem::path kScenarioDir = QOBS_SCENARIO_DIR;

std::string ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

constexpr std::string_view kMinimal = R"({
  "name": "minimal",
  "n": 2,
  "n_w": 2,
  "n_y": 2,
  "theta": {"kind": "canonical"},
  "A": [[0, 0], [0, 0]],
  "B": [[0, 0], [0, 0]],
  "C": [[0, 0], [0, 0]],
  "D": [[1, 0], [0, 1]]
})";

std::string ParseErrorOf(std::string_view text) {
  try {
    ParseScenario(text, "input.json");
  } catch (const ParseError& e) {
    return e.what();
  }
  return "";
}

std::string Patched(std::string_view from, std::string_view to) {
  std::string text(kMinimal);
  const auto pos = text.find(from);
  EXPECT_NE(pos, std::string::npos) << from;
  return text.replace(pos, from.size(), to);
}

class FixtureTest : public ::testing::TestWithParam<std::string> {};

TEST_P(FixtureTest, SerializationReproducesFile) {
  const std::filesystem::path path = kScenarioDir / (GetParam() + ".json");
  const std::string text = ReadFile(path);
  ASSERT_FALSE(text.empty()) << path;
  const Scenario s = ParseScenario(text, path.string());
  EXPECT_EQ(SerializeScenario(s), text);
  EXPECT_EQ(s.name, GetParam());
  EXPECT_NO_THROW(s.System());
}

INSTANTIATE_TEST_SUITE_P(Fixtures, FixtureTest,
                         ::testing::Values("cavity", "squeezer", "dpa",
                                           "atom_cavity",
                                           "all_optical_feedback", "zero",
                                           "not_pr"));

TEST(ScenarioTest, FixturesMatchBuilders) {
  const std::vector<std::pair<std::string, QuantumLinearSystem>> cases = {
      {"cavity", testing::Cavity(0.1)},
      {"squeezer", testing::Squeezer(0.1, 0.2, 0.01)},
      {"dpa", testing::Dpa(0.1, 0.01, 0.01)},
      {"atom_cavity", testing::AtomCavity(0.1, 0.1, 0.01)},
      {"all_optical_feedback", testing::AllOpticalFeedback(1.0, M_PI / 3)},
  };
  for (const auto& [name, expected] : cases) {
    const QuantumLinearSystem sys =
        LoadScenario(kScenarioDir / (name + ".json")).System();
    EXPECT_LT(MaxAbs(sys.A() - expected.A()), 1e-15) << name;
    EXPECT_LT(MaxAbs(sys.B() - expected.B()), 1e-15) << name;
    EXPECT_LT(MaxAbs(sys.C() - expected.C()), 1e-15) << name;
    EXPECT_EQ(sys.D(), expected.D()) << name;
    EXPECT_EQ(sys.theta(), expected.theta()) << name;
  }
}

TEST(ScenarioTest, DefaultsAndOverrides) {
  const Scenario minimal = ParseScenario(kMinimal);
  EXPECT_EQ(minimal.InitialCovariance(), Eye(2));
  EXPECT_FALSE(minimal.coherent_enabled());
  EXPECT_FALSE(minimal.noise_kind.has_value());
  const SolverConfig defaults;
  EXPECT_EQ(minimal.Solver().dt, defaults.dt);
  EXPECT_EQ(minimal.Solver().horizon, defaults.horizon);

  const Scenario cavity = LoadScenario(kScenarioDir / "cavity.json");
  EXPECT_EQ(cavity.InitialCovariance(), 2.0 * Eye(2));
  EXPECT_EQ(cavity.Solver().horizon, 500.0);

  const Scenario squeezer = LoadScenario(kScenarioDir / "squeezer.json");
  EXPECT_TRUE(squeezer.coherent_enabled());
  EXPECT_EQ(squeezer.coherent->n_v, 2);
}

TEST(ScenarioTest, DegenerateThetaAndClassicalNoise) {
  const std::string text = R"({
    "name": "classical",
    "n": 3, "n_w": 3, "n_y": 1,
    "theta": {"kind": "degenerate", "n_prime": 3},
    "noise": {"kind": "classical"},
    "A": [[-1, 0, 0], [0, -1, 0], [0, 0, -1]],
    "B": [[1, 0, 0], [0, 1, 0], [0, 0, 1]],
    "C": [[1, 1, 1]],
    "D": [[1, 0, 0]]
  })";
  const Scenario s = ParseScenario(text);
  const QuantumLinearSystem sys = s.System();
  EXPECT_EQ(sys.theta(), Matrix::Zero(3, 3));
  EXPECT_EQ(sys.noise().SkewCoefficients(), Matrix::Zero(3, 3));
  EXPECT_EQ(ParseScenario(SerializeScenario(s)).A, s.A);
}

TEST(ScenarioTest, SyntaxErrorReportsLineAndColumn) {
  const std::string message = ParseErrorOf("{\n  \"name\": \"x\",,\n}");
  EXPECT_NE(message.find("input.json:2:"), std::string::npos) << message;
  EXPECT_NE(message.find("syntax error"), std::string::npos) << message;
}

TEST(ScenarioTest, FieldErrorsReportJsonPointer) {
  const std::vector<std::pair<std::string, std::string>> cases = {
      {Patched("\"D\": [[1, 0], [0, 1]]", "\"D\": [[1, 0], [0, 1, 3]]"),
       "/D/1"},
      {Patched("\"name\": \"minimal\",", "\"name\": \"minimal\", \"bogus\": 1,"),
       "/bogus"},
      {Patched("\"n\": 2,", "\"n\": \"two\","), "/n"},
      {Patched("\"kind\": \"canonical\"", "\"kind\": \"weird\""),
       "/theta/kind"},
      {Patched("\"D\": [[1, 0], [0, 1]]",
               "\"D\": [[1, 0], [0, 1]], \"P0\": [[1, 2], [0, 1]]"),
       "/P0"},
      {Patched("\"D\": [[1, 0], [0, 1]]",
               "\"D\": [[1, 0], [0, 1]], \"coherent\": {\"enabled\": true, "
               "\"n_v\": 3}"),
       "/coherent/n_v"},
      {Patched("\"D\": [[1, 0], [0, 1]]",
               "\"D\": [[1, 0], [0, 1]], \"solver\": {\"dt\": -1}"),
       "/solver/dt"},
      {Patched("\"A\": [[0, 0], [0, 0]]", "\"A\": [[0, \"x\"], [0, 0]]"),
       "/A/0/1"},
  };
  for (const auto& [text, pointer] : cases) {
    const std::string message = ParseErrorOf(text);
    EXPECT_NE(message.find("input.json: " + pointer + ":"), std::string::npos)
        << pointer << " -> " << message;
  }
}

TEST(ScenarioTest, MissingFieldAndInvalidSystem) {
  std::string no_name(kMinimal);
  no_name.erase(no_name.find("\"name\""), std::string("\"name\": \"minimal\",").size());
  EXPECT_NE(ParseErrorOf(no_name).find("name"), std::string::npos);
  const std::string odd = Patched("\"n\": 2,", "\"n\": 3,");
  EXPECT_FALSE(ParseErrorOf(odd).empty());
}

TEST(ScenarioTest, MissingFileIsParseError) {
  EXPECT_THROW(LoadScenario(kScenarioDir / "does_not_exist.json"), ParseError);
}

TEST(ScenarioTest, NumbersRoundTripExactly) {
  std::string text = Patched("\"A\": [[0, 0], [0, 0]]",
                             "\"A\": [[0.1, -1e-300], [3.141592653589793, 2.5e10]]");
  const Scenario s = ParseScenario(text);
  const Scenario again = ParseScenario(SerializeScenario(s));
  EXPECT_EQ(again.A, s.A);
  EXPECT_EQ(SerializeScenario(again), SerializeScenario(s));
}

}  // namespace
}  // namespace qobs
