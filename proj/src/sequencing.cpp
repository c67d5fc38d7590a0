#include "lqmp/sequencing.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "lqmp/error.hpp"

namespace lqmp {

namespace {

double row_value(const Trajectory& traj, int row, double t, bool left = false) {
  const BrunovskyForm& form = *traj.form;
  const StackedPoint p = evaluate(traj, t, left);
  return form.Lmat.row(row).dot(p.z) - form.eVec[row];
}

double golden_max(const std::function<double(double)>& f, double a, double b, double& best_t) {
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 80 && (b - a) > 1e-12 * std::max(1.0, std::abs(b)); ++it) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  best_t = fc > fd ? c : d;
  return std::max(fc, fd);
}

bool has_touch(const std::vector<JunctionSpec>& specs, int row) {
  for (const auto& s : specs)
    if (s.kind == JunctionKind::kTouch && std::count(s.constraints.begin(), s.constraints.end(), row)) return true;
  return false;
}

void sort_by_time(std::vector<JunctionSpec>& specs) {
  std::stable_sort(specs.begin(), specs.end(), [](const JunctionSpec& a, const JunctionSpec& b) {
    if (!std::isfinite(a.time) || !std::isfinite(b.time)) return false;
    return a.time < b.time;
  });
}

std::vector<JunctionSpec> interval(int row, double t0, double t1) {
  return {{JunctionKind::kEntry, {row}, t0}, {JunctionKind::kExit, {row}, t1}};
}

bool candidate_less(const SequenceCandidate& a, const SequenceCandidate& b) {
  if (a.solved() != b.solved()) return a.solved();
  if (a.solved()) return a.cost < b.cost;
  const bool ta = a.trajectory.has_value(), tb = b.trajectory.has_value();
  if (ta != tb) return ta;
  return a.max_violation < b.max_violation;
}

}  // namespace

std::vector<Violation> check_feasibility(const Trajectory& traj, int points, double tolerance) {
  const BrunovskyForm& form = *traj.form;
  const int c = form.num_constraints();
  std::vector<Violation> out;
  if (c == 0) return out;
  const double T = form.T;
  std::vector<double> ts(points + 1);
  MatrixXd g(c, points + 1);
  for (int k = 0; k <= points; ++k) {
    ts[k] = T * k / points;
    const StackedPoint p = evaluate(traj, ts[k]);
    g.col(k) = form.Lmat * p.z - form.eVec;
  }
  for (int r = 0; r < c; ++r) {
    Violation worst;
    worst.row = r;
    worst.magnitude = -std::numeric_limits<double>::infinity();
    const double scale = std::max(1.0, g.row(r).cwiseAbs().maxCoeff());
    for (int k = 0; k <= points; ++k) {
      const double v = g(r, k);
      const bool local_max = (k == 0 || v >= g(r, k - 1)) && (k == points || v >= g(r, k + 1));
      double best = v, best_t = ts[k];
      if (local_max && v > -1e-3 * scale && k > 0 && k < points) {
        double t_ref = ts[k];
        const double refined = golden_max([&](double t) { return row_value(traj, r, t); }, ts[k - 1], ts[k + 1], t_ref);
        if (refined > best) {
          best = refined;
          best_t = t_ref;
        }
      }
      if (best > worst.magnitude) {
        worst.magnitude = best;
        worst.time = best_t;
      }
    }
    for (const auto& j : traj.junctions)
      for (bool left : {true, false}) {
        const double v = row_value(traj, r, j.spec.time, left);
        if (v > worst.magnitude) {
          worst.magnitude = v;
          worst.time = j.spec.time;
        }
      }
    if (worst.magnitude > tolerance) {
      // Extent of the violated region around the worst point.
      int k = static_cast<int>(std::lround(worst.time / T * points));
      k = std::clamp(k, 0, points);
      int lo = k, hi = k;
      while (lo > 0 && g(r, lo - 1) > 0) --lo;
      while (hi < points && g(r, hi + 1) > 0) ++hi;
      worst.window_start = ts[lo];
      worst.window_end = ts[hi];
      out.push_back(worst);
    }
  }
  std::sort(out.begin(), out.end(), [](const Violation& a, const Violation& b) {
    if (a.magnitude != b.magnitude) return a.magnitude > b.magnitude;
    return a.time < b.time;
  });
  return out;
}

std::string describe(const std::vector<JunctionSpec>& specs, const BrunovskyForm& form) {
  if (specs.empty()) return "unconstrained";
  std::ostringstream out;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    if (i) out << ',';
    for (std::size_t c = 0; c < specs[i].constraints.size(); ++c) {
      if (c) out << '+';
      out << form.constraint_names[specs[i].constraints[c]];
    }
    out << '-' << to_string(specs[i].kind);
  }
  return out.str();
}

SequenceCandidate solve_sequence(PrimitiveLibrary& library, std::vector<JunctionSpec> specs,
                                 const SequencingOptions& options) {
  SequenceCandidate cand;
  cand.specs = specs;
  try {
    const JunctionSystem sys = assemble(specs, library);
    Trajectory traj = solve_junctions(sys, options.solve);
    for (std::size_t j = 0; j < traj.junctions.size(); ++j) cand.specs[j].time = traj.junctions[j].spec.time;
    cand.cost = energy(traj);
    const auto violations = check_feasibility(traj, options.feasibility_points, options.feasibility_tolerance);
    cand.max_violation = violations.empty() ? 0.0 : violations.front().magnitude;
    if (violations.empty()) {
      cand.status = CandidateStatus::kSolved;
    } else {
      std::ostringstream msg;
      msg << "violates " << library.form().constraint_names[violations.front().row] << " by "
          << violations.front().magnitude << " at t = " << violations.front().time;
      cand.status = CandidateStatus::kInfeasible;
      cand.reason = msg.str();
    }
    cand.trajectory = std::move(traj);
  } catch (const Error& e) {
    cand.status = CandidateStatus::kInfeasible;
    cand.reason = e.what();
  }
  return cand;
}

SequenceCandidate violation_heuristic(PrimitiveLibrary& library, const SequencingOptions& options,
                                      std::vector<JunctionSpec> seq) {
  const BrunovskyForm& form = library.form();
  const double T = form.T;
  std::string last_reason;
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    SequenceCandidate cand = solve_sequence(library, seq, options);
    if (cand.solved()) return cand;
    last_reason = cand.reason;

    std::vector<Violation> violations;
    if (cand.trajectory)
      violations = check_feasibility(*cand.trajectory, options.feasibility_points, options.feasibility_tolerance);
    seq = cand.specs;

    if (violations.empty()) {
      // The sequence could not be solved: escalate its last touch.
      auto it = std::find_if(seq.rbegin(), seq.rend(), [](const JunctionSpec& s) { return s.kind == JunctionKind::kTouch; });
      if (it == seq.rend()) break;
      const int row = it->constraints.front();
      const double t = std::isfinite(it->time) ? it->time : 0.5 * T;
      seq.erase(std::next(it).base());
      for (auto& s : interval(row, std::max(1e-3 * T, t - 0.02 * T), std::min(T * (1 - 1e-3), t + 0.02 * T)))
        seq.push_back(s);
      sort_by_time(seq);
      continue;
    }

    const Violation& worst = violations.front();
    const TangencyStack stack = derive_tangency(form, worst.row);
    if (stack.q == 0 || has_touch(seq, worst.row)) {
      // Escalate: replace the touch of this row (if any) by an interval
      // around the violated window.
      double t0 = worst.window_start, t1 = worst.window_end;
      auto it = std::find_if(seq.begin(), seq.end(), [&](const JunctionSpec& s) {
        return s.kind == JunctionKind::kTouch && s.constraints.front() == worst.row;
      });
      if (it != seq.end()) {
        t0 = std::min(t0, it->time - 0.02 * T);
        t1 = std::max(t1, it->time + 0.02 * T);
        seq.erase(it);
      }
      t0 = std::max(t0, 1e-3 * T);
      t1 = std::min(t1, T * (1 - 1e-3));
      if (!(t1 > t0)) t1 = std::min(T * (1 - 1e-3), t0 + 0.02 * T);
      for (auto& s : interval(worst.row, t0, t1)) seq.push_back(s);
    } else {
      seq.push_back({JunctionKind::kTouch, {worst.row}, worst.time});
    }
    sort_by_time(seq);
  }
  throw Error(ErrorCode::kHeuristicExhausted, "no feasible sequence after " + std::to_string(options.max_iterations) +
                                                  " iterations (last: " + last_reason + ")");
}

ExhaustiveResult exhaustive_compare(PrimitiveLibrary& library, int max_junctions, const SequencingOptions& options) {
  const BrunovskyForm& form = library.form();
  ExhaustiveResult result;
  SequenceCandidate base = solve_sequence(library, {}, options);
  result.lower_bound = base.cost;

  struct Item {
    int row;
    bool is_interval;
  };
  std::vector<Item> items;
  for (int r = 0; r < form.num_constraints(); ++r) {
    if (derive_tangency(form, r).q > 0) items.push_back({r, false});
    items.push_back({r, true});
  }

  std::vector<SequenceCandidate> all{base};
  double incumbent = base.solved() ? base.cost : std::numeric_limits<double>::infinity();

  // Depth-first over item lists. Extra junctions only add equality
  // constraints, so a prefix's cost bounds every extension.
  std::function<void(const std::vector<Item>&, int, const SequenceCandidate&)> extend =
      [&](const std::vector<Item>& prefix, int used, const SequenceCandidate& prefix_cand) {
        for (const Item& item : items) {
          const int need = item.is_interval ? 2 : 1;
          if (used + need > max_junctions) continue;
          if (prefix_cand.trajectory && prefix_cand.cost >= incumbent - 1e-9) {
            ++result.pruned;
            continue;
          }
          // Time guesses from the prefix solution's violation of this row.
          double guess = std::numeric_limits<double>::quiet_NaN(), w0 = guess, w1 = guess;
          if (prefix_cand.trajectory) {
            for (const auto& v : check_feasibility(*prefix_cand.trajectory, 2000, -1e300))
              if (v.row == item.row) {
                guess = v.time;
                w0 = v.window_start;
                w1 = v.window_end;
              }
          }
          std::vector<JunctionSpec> specs = prefix_cand.specs;
          if (item.is_interval) {
            const double T = form.T;
            double t0 = std::isfinite(w0) ? w0 : guess - 0.02 * T, t1 = std::isfinite(w1) ? w1 : guess + 0.02 * T;
            if (std::isfinite(t0) && !(t1 - t0 > 1e-3 * T)) {
              t0 -= 0.02 * T;
              t1 += 0.02 * T;
            }
            for (auto& s : interval(item.row, t0, t1)) specs.push_back(s);
          } else {
            specs.push_back({JunctionKind::kTouch, {item.row}, guess});
          }
          sort_by_time(specs);
          SequenceCandidate cand = solve_sequence(library, specs, options);
          if (cand.solved() && cand.cost < incumbent) incumbent = cand.cost;
          all.push_back(cand);
          std::vector<Item> next = prefix;
          next.push_back(item);
          extend(next, used + need, cand);
        }
      };
  extend({}, 0, base);

  std::stable_sort(all.begin(), all.end(), candidate_less);
  result.best = all.front();
  result.ranking = std::move(all);
  return result;
}

std::vector<JunctionSpec> parse_sequence(const std::string& text, const BrunovskyForm& form) {
  std::vector<JunctionSpec> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    double time = std::numeric_limits<double>::quiet_NaN();
    const auto at = item.find('@');
    if (at != std::string::npos) {
      try {
        time = std::stod(item.substr(at + 1));
      } catch (const std::exception&) {
        throw Error(ErrorCode::kInvalidInput, "bad junction time in '" + item + "'");
      }
      item = item.substr(0, at);
    }
    const auto dash = item.rfind('-');
    if (dash == std::string::npos) throw Error(ErrorCode::kInvalidInput, "expected name-kind, got '" + item + "'");
    const std::string name = item.substr(0, dash), kind = item.substr(dash + 1);
    const int row = constraint_index(form, name);
    if (row < 0) throw Error(ErrorCode::kInvalidInput, "unknown constraint '" + name + "'");
    if (kind == "touch") {
      out.push_back({JunctionKind::kTouch, {row}, time});
    } else if (kind == "entry") {
      out.push_back({JunctionKind::kEntry, {row}, time});
    } else if (kind == "exit") {
      out.push_back({JunctionKind::kExit, {row}, time});
    } else if (kind == "interval") {
      out.push_back({JunctionKind::kEntry, {row}, time});
      out.push_back({JunctionKind::kExit, {row}, std::numeric_limits<double>::quiet_NaN()});
    } else {
      throw Error(ErrorCode::kInvalidInput, "unknown junction kind '" + kind + "'");
    }
  }
  return out;
}

}  // namespace lqmp
