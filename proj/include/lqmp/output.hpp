#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "lqmp/junctions.hpp"
#include "lqmp/oracle.hpp"
#include "lqmp/sequencing.hpp"

namespace lqmp {

/// Samples the trajectory on a uniform grid and writes
/// t,<states>,<controls>,arc_index,active_set in original coordinates with 17
/// significant digits.
void write_trajectory_csv(const Trajectory& trajectory, const std::string& path, int samples = 2000);

struct CsvTrajectory {
  std::vector<std::string> header;
  Eigen::VectorXd t;
  MatrixXd x, u;
  std::vector<int> arc;
};

CsvTrajectory read_trajectory_csv(const std::string& path, int num_states, int num_controls);

/// Largest C x + D u - e over the rows of a trajectory file.
double csv_max_violation(const LqProblem& problem, const CsvTrajectory& csv);

/// Rounds to `digits` significant digits so that dumps are reproducible.
double fixed(double value, int digits = 10);

nlohmann::json trajectory_summary(const Trajectory& trajectory, const SequenceCandidate* candidate = nullptr);
nlohmann::json oracle_summary(const CollocationResult& oracle, const BrunovskyForm& form, double analytic_cost);

struct PlotSeries {
  std::string name;
  std::vector<double> t, y;
};

struct PlotPanel {
  std::string title;
  std::vector<PlotSeries> series;
  std::vector<double> markers;  // vertical dashed lines
};

/// Static SVG with the panels stacked vertically.
void write_svg(const std::vector<PlotPanel>& panels, const std::string& path);

/// Panels of states and controls of a trajectory, junctions marked.
std::vector<PlotPanel> trajectory_panels(const Trajectory& trajectory, int samples = 1000);

void write_json(const nlohmann::json& doc, const std::string& path);

}  // namespace lqmp
