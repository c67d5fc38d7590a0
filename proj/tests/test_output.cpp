#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "lqmp/error.hpp"
#include "lqmp/output.hpp"
#include "lqmp/problem_io.hpp"
#include "lqmp/sequencing.hpp"
#include "lqmp/submersible.hpp"
#include "support.hpp"

using namespace lqmp;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

SequenceCandidate perturbed_floor(PrimitiveLibrary& lib) {
  return solve_sequence(lib, {{JunctionKind::kTouch, {0}}});
}

}  // namespace

TEST(ProblemIo, RoundTrip) {
  const auto p = build_problem(submersible_scenario(SubmersibleVariant::kPerturbed));
  const auto q = parse_problem(problem_to_json(p));
  EXPECT_EQ(p.A, q.A);
  EXPECT_EQ(p.Q, q.Q);
  EXPECT_EQ(p.N, q.N);
  EXPECT_EQ(p.e, q.e);
  EXPECT_EQ(p.x0, q.x0);
  EXPECT_EQ(p.T, q.T);
  EXPECT_EQ(q.coordinates, Coordinates::kBrunovsky);
  EXPECT_EQ(q.constraint_names, p.constraint_names);
}

TEST(ProblemIo, OptionalBlocks) {
  const auto p = parse_problem(R"({"A": [[0]], "B": [[1]], "Q": [[1]], "R": [[1]], "x0": [1], "xT": [0], "T": 2})");
  EXPECT_EQ(p.N.rows(), 1);
  EXPECT_EQ(p.N(0, 0), 0.0);
  EXPECT_EQ(p.num_constraints(), 0);
}

TEST(ProblemIo, Diagnostics) {
  auto code_and_message = [](const std::string& text) {
    try {
      parse_problem(text);
    } catch (const Error& e) {
      return std::make_pair(e.code(), std::string(e.what()));
    }
    return std::make_pair(ErrorCode::kNoRoot, std::string());
  };
  auto [c1, m1] = code_and_message("{\n\"A\": [[0]],\n\"B\": [[1]] oops\n}");
  EXPECT_EQ(c1, ErrorCode::kInvalidInput);
  EXPECT_NE(m1.find("line 3"), std::string::npos) << m1;
  auto [c2, m2] = code_and_message(R"({"A": [[0]], "B": [[1]], "Q": [[1]], "R": [[1]], "x0": [1], "xT": [0], "T": 2, "W": 1})");
  EXPECT_EQ(c2, ErrorCode::kInvalidInput);
  EXPECT_NE(m2.find("'W'"), std::string::npos) << m2;
  auto [c3, m3] = code_and_message(R"({"A": [[0]], "B": [[1]], "Q": [[1]], "R": [[1]], "x0": [1], "xT": [0]})");
  EXPECT_EQ(c3, ErrorCode::kInvalidInput);
  EXPECT_NE(m3.find("'T'"), std::string::npos) << m3;
  auto [c4, m4] = code_and_message(R"({"A": [[0]], "B": [[1]], "Q": [[1]], "R": [[1]], "x0": [1], "xT": [0], "T": 2, "C": [[1]]})");
  EXPECT_EQ(c4, ErrorCode::kInvalidInput);
}

TEST(Csv, RoundTripAndRevalidate) {
  const auto p = build_problem(submersible_scenario(SubmersibleVariant::kPerturbed));
  auto form = fixtures::form_of(p);
  PrimitiveLibrary lib(form);
  const auto cand = perturbed_floor(lib);
  ASSERT_TRUE(cand.solved());
  write_trajectory_csv(*cand.trajectory, "floor.csv", 4001);
  const auto csv = read_trajectory_csv("floor.csv", 5, 2);
  // `samples` counts intervals; both ends are written.
  ASSERT_EQ(csv.t.size(), 4002);
  EXPECT_EQ(csv.header.front(), "t");
  EXPECT_EQ(csv.header.back(), "active_set");
  for (int k = 0; k < csv.t.size(); k += 250) {
    const auto pt = evaluate(*cand.trajectory, csv.t[k]);
    // 17 significant digits round-trip exactly.
    EXPECT_EQ(csv.x.row(k).transpose(), pt.x);
    EXPECT_EQ(csv.u.row(k).transpose(), pt.u);
  }
  EXPECT_LE(csv_max_violation(p, csv), 1e-8);
}

TEST(Summary, ByteIdenticalAcrossRuns) {
  const auto p = build_problem(submersible_scenario(SubmersibleVariant::kPerturbed));
  std::string first;
  for (int run = 0; run < 2; ++run) {
    auto form = fixtures::form_of(p);
    PrimitiveLibrary lib(form);
    const auto cand = perturbed_floor(lib);
    write_json(trajectory_summary(*cand.trajectory, &cand), "summary.json");
    const std::string text = slurp("summary.json");
    if (run == 0)
      first = text;
    else
      EXPECT_EQ(first, text);
  }
  const auto doc = nlohmann::json::parse(first);
  EXPECT_NEAR(doc["cost"].get<double>(), 8458.0, 0.01 * 8458.0);
  EXPECT_EQ(doc["junctions"].size(), 1u);
  EXPECT_EQ(doc["sequence"], "floor-touch");
}

TEST(Svg, WritesPanels) {
  auto form = fixtures::form_of(fixtures::double_integrator());
  PrimitiveLibrary lib(form);
  write_svg(trajectory_panels(solve_unconstrained(lib), 100), "di.svg");
  const std::string svg = slurp("di.svg");
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  EXPECT_NE(svg.find("polyline"), std::string::npos);
}
