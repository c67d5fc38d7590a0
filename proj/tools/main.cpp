// lqmp command line: solve, bench, oracle, lqr-baseline.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include "CLI11.hpp"
#include "json.hpp"

#include "lqmp/error.hpp"
#include "lqmp/oracle.hpp"
#include "lqmp/output.hpp"
#include "lqmp/problem_io.hpp"
#include "lqmp/sequencing.hpp"
#include "lqmp/submersible.hpp"

namespace fs = std::filesystem;
using namespace lqmp;
using nlohmann::json;

namespace {

constexpr int kFeasible = 0;
constexpr int kInputError = 1;
constexpr int kInfeasible = 2;

struct RunConfig {
  std::string input;
  std::string out = "out";
  std::string sequence = "auto";
  int samples = 2000;
  int max_junctions = 2;
  std::string cache;
  std::string variant = "nominal";
  int oracle_nodes = 0;
  std::uint64_t seed = 1;
  int pop = 200;
  int iters = 2800;
  int elites = 10;
  int stall = 50;
  bool lqr = true;
  double feasibility_tolerance = 1e-8;
  double root_tolerance = 1e-8;
  std::string config;
};

// Keys a config file may set; anything else is rejected.
void apply_config(RunConfig& c) {
  std::ifstream in(c.config);
  if (!in) throw Error(ErrorCode::kInvalidInput, "cannot read config " + c.config);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kInvalidInput, c.config + ": " + e.what());
  }
  if (!doc.is_object()) throw Error(ErrorCode::kInvalidInput, c.config + ": expected an object");
  for (const auto& [key, v] : doc.items()) {
    try {
      if (key == "input") c.input = v.get<std::string>();
      else if (key == "out") c.out = v.get<std::string>();
      else if (key == "sequence") c.sequence = v.get<std::string>();
      else if (key == "samples") c.samples = v.get<int>();
      else if (key == "max_junctions") c.max_junctions = v.get<int>();
      else if (key == "cache") c.cache = v.get<std::string>();
      else if (key == "variant") c.variant = v.get<std::string>();
      else if (key == "oracle_nodes") c.oracle_nodes = v.get<int>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "pop") c.pop = v.get<int>();
      else if (key == "iters") c.iters = v.get<int>();
      else if (key == "elites") c.elites = v.get<int>();
      else if (key == "stall") c.stall = v.get<int>();
      else if (key == "lqr") c.lqr = v.get<bool>();
      else if (key == "feasibility_tolerance") c.feasibility_tolerance = v.get<double>();
      else if (key == "root_tolerance") c.root_tolerance = v.get<double>();
      else throw Error(ErrorCode::kInvalidInput, c.config + ": unknown key '" + key + "'");
    } catch (const json::type_error&) {
      throw Error(ErrorCode::kInvalidInput, c.config + ": wrong type for '" + key + "'");
    }
  }
}

SequencingOptions sequencing_options(const RunConfig& c) {
  SequencingOptions o;
  o.feasibility_tolerance = c.feasibility_tolerance;
  o.solve.tolerance = c.root_tolerance;
  return o;
}

GaOptions ga_options(const RunConfig& c) {
  GaOptions o;
  o.seed = c.seed;
  o.population = c.pop;
  o.max_generations = c.iters;
  o.elites = c.elites;
  o.stall_generations = c.stall;
  return o;
}

SequenceCandidate run_sequence(PrimitiveLibrary& lib, const RunConfig& c) {
  const SequencingOptions opt = sequencing_options(c);
  if (c.sequence == "auto") {
    try {
      return violation_heuristic(lib, opt);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kHeuristicExhausted) throw;
      std::cerr << e.what() << "; falling back to exhaustive comparison\n";
      return exhaustive_compare(lib, c.max_junctions, opt).best;
    }
  }
  if (c.sequence == "exhaustive") {
    ExhaustiveResult r = exhaustive_compare(lib, c.max_junctions, opt);
    for (const auto& cand : r.ranking)
      std::cerr << "  " << describe(cand.specs, lib.form()) << ": "
                << (cand.solved() ? std::to_string(cand.cost) : "infeasible (" + cand.reason + ")") << '\n';
    return r.best;
  }
  const std::string prefix = "explicit:";
  if (c.sequence.rfind(prefix, 0) == 0)
    return solve_sequence(lib, parse_sequence(c.sequence.substr(prefix.size()), lib.form()), opt);
  throw Error(ErrorCode::kInvalidInput, "--sequence must be auto, exhaustive or explicit:<spec>");
}

std::shared_ptr<const BrunovskyForm> load_form(const RunConfig& c, LqProblem& problem) {
  if (c.input.empty()) throw Error(ErrorCode::kInvalidInput, "no problem file given");
  problem = load_problem(c.input);
  require_valid(problem);
  return std::make_shared<const BrunovskyForm>(to_brunovsky(problem));
}

void write_solution(const Trajectory& traj, const SequenceCandidate& cand, const RunConfig& c) {
  fs::create_directories(c.out);
  write_trajectory_csv(traj, (fs::path(c.out) / "trajectory.csv").string(), c.samples);
  write_json(trajectory_summary(traj, &cand), (fs::path(c.out) / "summary.json").string());
  write_svg(trajectory_panels(traj), (fs::path(c.out) / "trajectory.svg").string());
}

int cmd_solve(const RunConfig& c) {
  LqProblem problem;
  auto form = load_form(c, problem);
  PrimitiveLibrary lib(form);
  if (!c.cache.empty() && fs::exists(c.cache)) std::cerr << "loaded " << lib.load(c.cache) << " primitives from " << c.cache << '\n';
  SequenceCandidate cand = run_sequence(lib, c);
  if (!c.cache.empty()) lib.save(c.cache);
  if (cand.trajectory) write_solution(*cand.trajectory, cand, c);
  if (c.oracle_nodes > 0 && cand.trajectory) {
    const CollocationResult o = collocate(problem, c.oracle_nodes);
    write_json(oracle_summary(o, *form, cand.cost), (fs::path(c.out) / "oracle.json").string());
  }
  std::cout << "sequence: " << describe(cand.specs, *form) << '\n';
  if (!cand.solved()) {
    std::cerr << "infeasible: " << cand.reason << '\n';
    return kInfeasible;
  }
  std::cout << "cost: " << cand.cost << '\n';
  return kFeasible;
}

int cmd_oracle(const RunConfig& c) {
  LqProblem problem;
  auto form = load_form(c, problem);
  PrimitiveLibrary lib(form);
  SequenceCandidate cand = run_sequence(lib, c);
  const int nodes = c.oracle_nodes > 0 ? c.oracle_nodes : 1600;
  const CollocationResult o = collocate(problem, nodes);
  fs::create_directories(c.out);
  write_json(oracle_summary(o, *form, cand.solved() ? cand.cost : NAN), (fs::path(c.out) / "oracle.json").string());
  if (cand.trajectory) write_solution(*cand.trajectory, cand, c);
  std::cout << "oracle cost (" << nodes << " intervals): " << o.cost << '\n';
  if (!cand.solved()) {
    std::cerr << "analytic solve infeasible: " << cand.reason << '\n';
    return kInfeasible;
  }
  std::cout << "analytic cost: " << cand.cost << "  relative gap: " << (cand.cost - o.cost) / o.cost << '\n';
  return kFeasible;
}

json lqr_json(const LqrBaseline& b) {
  auto mat = [](const MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      std::vector<double> row;
      for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(fixed(m(r, k)));
      rows.push_back(row);
    }
    return rows;
  };
  json doc;
  doc["energy"] = fixed(b.best.energy);
  doc["terminal_error"] = fixed(b.best.terminal_error);
  doc["fitness"] = fixed(b.best.fitness);
  doc["feasible"] = b.best.feasible;
  doc["gain"] = mat(b.best.gain);
  doc["Q"] = mat(b.search.best_weights.Q);
  doc["R"] = mat(b.search.best_weights.R);
  doc["N"] = mat(b.search.best_weights.N);
  doc["evaluations"] = b.search.evaluations;
  doc["infeasible_evaluations"] = b.search.infeasible_evaluations;
  doc["infeasible_fraction"] = fixed(b.search.infeasible_fraction(), 4);
  doc["generations"] = b.search.generations;
  doc["stalled"] = b.search.stalled;
  return doc;
}

void write_history(const GaResult& r, const std::string& path) {
  std::ofstream out(path);
  out << "generation,best_fitness,mean_feasible_fitness,infeasible\n";
  out.precision(17);
  for (const auto& g : r.history)
    out << g.generation << ',' << g.best_fitness << ',' << g.mean_feasible_fitness << ',' << g.infeasible << '\n';
}

void write_lqr_trajectory(const LqrEvaluation& ev, const BrunovskyForm& form, const std::string& path) {
  std::ofstream out(path);
  out << 't';
  for (const auto& s : form.state_names) out << ',' << s;
  for (const auto& s : form.control_names) out << ',' << s;
  out << '\n';
  out.precision(17);
  for (Eigen::Index k = 0; k < ev.t.size(); ++k) {
    out << ev.t[k];
    for (Eigen::Index i = 0; i < ev.z.cols(); ++i) out << ',' << ev.z(k, i);
    out << '\n';
  }
}

int cmd_lqr(const RunConfig& c) {
  std::shared_ptr<const BrunovskyForm> form;
  if (!c.input.empty()) {
    LqProblem problem;
    form = load_form(c, problem);
  } else {
    form = std::make_shared<const BrunovskyForm>(to_brunovsky(build_problem(submersible_scenario(parse_variant(c.variant)))));
  }
  const LqrBaseline b = run_lqr_baseline(*form, ga_options(c));
  fs::create_directories(c.out);
  write_history(b.search, (fs::path(c.out) / "lqr_history.csv").string());
  write_json(lqr_json(b), (fs::path(c.out) / "lqr_best.json").string());
  if (b.best.t.size()) write_lqr_trajectory(b.best, *form, (fs::path(c.out) / "lqr_trajectory.csv").string());
  std::cout << "best energy " << b.best.energy << ", terminal error " << b.best.terminal_error << ", infeasible fraction "
            << b.search.infeasible_fraction() << '\n';
  return b.best.feasible ? kFeasible : kInfeasible;
}

void figure_data(const Trajectory& traj, const SubmersibleScenario& s, const std::string& path, int samples) {
  std::ofstream out(path);
  out << "t,x,y,u_x,u_y,B,a_y\n";
  out.precision(17);
  for (int k = 0; k <= samples; ++k) {
    const double t = s.T * k / samples;
    const VectorXd z = evaluate(traj, t).z;
    const Eigen::Vector3d ph = physical_controls(s, z);
    out << t << ',' << z[0] << ',' << z[2] << ',' << ph[0] << ',' << ph[1] << ',' << ph[2] << ',' << z[6] << '\n';
  }
}

int cmd_bench(const RunConfig& c) {
  const SubmersibleScenario s = submersible_scenario(parse_variant(c.variant));
  BenchOptions opt;
  opt.run_lqr = c.lqr;
  opt.ga = ga_options(c);
  opt.sequencing = sequencing_options(c);
  fs::create_directories(c.out);
  const fs::path out(c.out);
  save_problem(build_problem(s), (out / "problem.json").string());
  json report;
  report["variant"] = to_string(s.variant);
  std::optional<LqrBaseline> lqr;
  bool feasible = true;
  if (s.variant == SubmersibleVariant::kNominal) {
    const Table2Report r = run_table2(s, opt);
    report["proposed_energy"] = fixed(r.energy);
    report["solve_seconds"] = fixed(r.solve_seconds, 3);
    report["violations"] = r.violations;
    report["y_range"] = {fixed(r.min_y), fixed(r.max_y)};
    report["min_thrust"] = fixed(r.min_thrust);
    write_trajectory_csv(r.trajectory, (out / "proposed.csv").string(), c.samples);
    figure_data(r.trajectory, s, (out / "figure_proposed.csv").string(), c.samples);
    write_svg(trajectory_panels(r.trajectory), (out / "proposed.svg").string());
    lqr = r.lqr;
    if (lqr) report["lqr_ratio"] = fixed(r.ratio, 4);
    feasible = r.violations == 0;
  } else {
    const Table3Report r = run_table3(s, opt);
    for (const auto* cand : {&r.floor, &r.ceiling}) {
      const std::string name = cand == &r.floor ? "floor" : "ceiling";
      json e;
      e["feasible"] = cand->solved();
      e["energy"] = fixed(cand->cost);
      if (cand->trajectory) {
        e["junction_time"] = fixed(cand->trajectory->junctions.at(0).spec.time);
        write_trajectory_csv(*cand->trajectory, (out / (name + ".csv")).string(), c.samples);
        figure_data(*cand->trajectory, s, (out / ("figure_" + name + ".csv")).string(), c.samples);
        write_svg(trajectory_panels(*cand->trajectory), (out / (name + ".svg")).string());
      }
      if (!cand->reason.empty()) e["reason"] = cand->reason;
      report[name] = e;
    }
    report["unconstrained_energy"] = fixed(energy(r.unconstrained));
    report["gap_percent"] = fixed(r.gap_percent, 4);
    report["x_chain_deviation"] = fixed(r.x_chain_deviation, 3);
    report["solve_seconds"] = fixed(r.solve_seconds, 3);
    lqr = r.lqr;
    if (lqr) report["lqr_ratio"] = fixed(r.ratio, 4);
    feasible = r.floor.solved() && r.ceiling.solved();
  }
  if (lqr) {
    report["lqr"] = lqr_json(*lqr);
    const auto form = to_brunovsky(build_problem(s));
    write_history(lqr->search, (out / "lqr_history.csv").string());
    write_lqr_trajectory(lqr->best, form, (out / "lqr_trajectory.csv").string());
  }
  write_json(report, (out / "report.json").string());
  std::cout << report.dump(2) << '\n';
  return feasible ? kFeasible : kInfeasible;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Energy-optimal trajectories for linear-quadratic systems with linear constraints"};
  app.require_subcommand(1);
  RunConfig c;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out", c.out, "output directory")->capture_default_str();
    sub->add_option("--samples", c.samples, "trajectory samples written to CSV")->capture_default_str();
    sub->add_option("--config", c.config, "JSON file whose keys override the flags");
  };
  auto add_sequence = [&](CLI::App* sub) {
    sub->add_option("--sequence", c.sequence, "auto, exhaustive or explicit:<name-kind[@t],...>")->capture_default_str();
    sub->add_option("--max-junctions", c.max_junctions, "junction cap for exhaustive mode")->capture_default_str();
    sub->add_option("--feasibility-tolerance", c.feasibility_tolerance, "constraint tolerance on the check grid")
        ->capture_default_str();
    sub->add_option("--root-tolerance", c.root_tolerance, "Hamiltonian jump residual")->capture_default_str();
  };
  auto add_ga = [&](CLI::App* sub) {
    sub->add_option("--seed", c.seed, "GA seed")->capture_default_str();
    sub->add_option("--pop", c.pop, "GA population")->capture_default_str();
    sub->add_option("--iters", c.iters, "GA generation cap")->capture_default_str();
    sub->add_option("--elites", c.elites, "GA elites")->capture_default_str();
    sub->add_option("--stall", c.stall, "generations without improvement before stopping")->capture_default_str();
  };

  CLI::App* solve = app.add_subcommand("solve", "solve a problem file");
  solve->add_option("problem", c.input, "problem JSON");
  solve->add_option("--cache", c.cache, "primitive cache file (read if present, then written)");
  solve->add_option("--oracle-nodes", c.oracle_nodes, "also run the collocation oracle with this many intervals");
  add_common(solve);
  add_sequence(solve);

  CLI::App* bench = app.add_subcommand("bench", "benchmarks");
  bench->require_subcommand(1);
  CLI::App* sub = bench->add_subcommand("submersible", "submersible case study");
  sub->add_option("--variant", c.variant, "nominal or perturbed")->capture_default_str();
  sub->add_flag("!--no-lqr", c.lqr, "skip the LQR baseline");
  add_common(sub);
  add_sequence(sub);
  add_ga(sub);

  CLI::App* oracle = app.add_subcommand("oracle", "compare against direct collocation");
  oracle->add_option("problem", c.input, "problem JSON");
  oracle->add_option("--oracle-nodes", c.oracle_nodes, "collocation intervals (default 1600)");
  add_common(oracle);
  add_sequence(oracle);

  CLI::App* lqr = app.add_subcommand("lqr-baseline", "genetic search over LQR weights");
  lqr->add_option("problem", c.input, "problem JSON (default: submersible --variant)");
  lqr->add_option("--variant", c.variant, "submersible variant when no problem is given")->capture_default_str();
  add_common(lqr);
  add_ga(lqr);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kInputError;
  }

  try {
    if (!c.config.empty()) apply_config(c);
    if (solve->parsed()) return cmd_solve(c);
    if (bench->parsed()) return cmd_bench(c);
    if (oracle->parsed()) return cmd_oracle(c);
    if (lqr->parsed()) return cmd_lqr(c);
  } catch (const Error& e) {
    std::cerr << e.what() << '\n';
    switch (e.code()) {
      case ErrorCode::kInvalidInput:
      case ErrorCode::kDimensionMismatch:
      case ErrorCode::kNotControllable:
      case ErrorCode::kCacheMismatch:
      case ErrorCode::kNonConvex:
        return kInputError;
      default:
        return kInfeasible;
    }
  } catch (const std::exception& e) {
    std::cerr << e.what() << '\n';
    return kInputError;
  }
  return kInputError;
}
