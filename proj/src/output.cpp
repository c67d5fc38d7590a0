#include "lqmp/output.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "lqmp/error.hpp"

namespace lqmp {

namespace {

using nlohmann::json;

std::string format17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string set_label(const std::vector<int>& set, const BrunovskyForm& form) {
  if (set.empty()) return "none";
  std::string out;
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (i) out += '+';
    out += form.constraint_names[set[i]];
  }
  return out;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kInvalidInput, "cannot write " + path);
  return out;
}

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"};

}  // namespace

double fixed(double value, int digits) {
  if (!std::isfinite(value)) return value;
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*g", digits, value);
  return std::strtod(buf, nullptr);
}

void write_trajectory_csv(const Trajectory& traj, const std::string& path, int samples) {
  const BrunovskyForm& form = *traj.form;
  std::ofstream out = open_out(path);
  out << 't';
  for (const auto& s : form.original_state_names) out << ',' << s;
  for (const auto& s : form.original_control_names) out << ',' << s;
  out << ",arc_index,active_set\n";
  const auto sets = traj.active_sets();
  for (int k = 0; k <= samples; ++k) {
    const double t = form.T * k / samples;
    const StackedPoint p = evaluate(traj, t);
    out << format17(t);
    for (Eigen::Index i = 0; i < p.x.size(); ++i) out << ',' << format17(p.x[i]);
    for (Eigen::Index i = 0; i < p.u.size(); ++i) out << ',' << format17(p.u[i]);
    out << ',' << p.arc << ',' << set_label(sets[p.arc], form) << '\n';
  }
}

CsvTrajectory read_trajectory_csv(const std::string& path, int n, int m) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kInvalidInput, "cannot read " + path);
  CsvTrajectory out;
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::kInvalidInput, path + ": empty file");
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.header.push_back(cell);
  }
  if (static_cast<int>(out.header.size()) != 1 + n + m + 2)
    throw Error(ErrorCode::kInvalidInput, path + ": header does not match the problem dimensions");
  std::vector<std::vector<double>> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    for (int c = 0; c < 1 + n + m + 1 && std::getline(ss, cell, ','); ++c) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw Error(ErrorCode::kInvalidInput, path + ": line " + std::to_string(line_no) + ": bad number '" + cell + "'");
      }
    }
    if (static_cast<int>(row.size()) != 1 + n + m + 1)
      throw Error(ErrorCode::kInvalidInput, path + ": line " + std::to_string(line_no) + ": too few columns");
    rows.push_back(std::move(row));
  }
  const auto count = static_cast<Eigen::Index>(rows.size());
  out.t.resize(count);
  out.x.resize(count, n);
  out.u.resize(count, m);
  for (Eigen::Index k = 0; k < count; ++k) {
    out.t[k] = rows[k][0];
    for (int i = 0; i < n; ++i) out.x(k, i) = rows[k][1 + i];
    for (int i = 0; i < m; ++i) out.u(k, i) = rows[k][1 + n + i];
    out.arc.push_back(static_cast<int>(rows[k][1 + n + m]));
  }
  return out;
}

double csv_max_violation(const LqProblem& p, const CsvTrajectory& csv) {
  double worst = -std::numeric_limits<double>::infinity();
  if (p.num_constraints() == 0) return worst;
  for (Eigen::Index k = 0; k < csv.t.size(); ++k) {
    const VectorXd g = p.C * csv.x.row(k).transpose() + p.D * csv.u.row(k).transpose() - p.e;
    worst = std::max(worst, g.maxCoeff());
  }
  return worst;
}

json trajectory_summary(const Trajectory& traj, const SequenceCandidate* cand) {
  const BrunovskyForm& form = *traj.form;
  json doc;
  doc["cost"] = fixed(energy(traj));
  doc["horizon"] = fixed(form.T);
  std::vector<int> chains = form.index.chain_lengths();
  doc["chain_lengths"] = chains;
  json junctions = json::array();
  for (const auto& j : traj.junctions) {
    json e;
    e["kind"] = to_string(j.spec.kind);
    e["constraints"] = set_label(j.spec.constraints, form);
    e["time"] = fixed(j.spec.time);
    std::vector<double> pi;
    for (Eigen::Index i = 0; i < j.pi.size(); ++i) pi.push_back(fixed(j.pi[i]));
    e["pi"] = pi;
    e["hamiltonian_jump"] = fixed(j.hamiltonian_jump, 3);
    junctions.push_back(e);
  }
  doc["junctions"] = junctions;
  json arcs = json::array();
  const auto sets = traj.active_sets();
  for (std::size_t a = 0; a < traj.arcs.size(); ++a)
    arcs.push_back({{"start", fixed(traj.arcs[a].ta)}, {"end", fixed(traj.arcs[a].tb)},
                    {"active_set", set_label(sets[a], form)}});
  doc["arcs"] = arcs;
  const OptimalityReport r = check_optimality(traj);
  // Residuals near round-off are reported to 3 digits only.
  doc["residuals"] = {{"euler_lagrange", fixed(r.euler_lagrange, 3)},
                      {"hamiltonian_drift", fixed(r.hamiltonian_drift, 3)},
                      {"state_continuity", fixed(r.state_continuity, 3)},
                      {"costate_jump", fixed(r.costate_jump, 3)},
                      {"hamiltonian_jump", fixed(r.hamiltonian_jump, 3)},
                      {"boundary", fixed(r.boundary, 3)},
                      {"min_multiplier", fixed(r.min_multiplier, 3)}};
  doc["condition"] = fixed(traj.condition, 3);
  if (cand) {
    doc["sequence"] = describe(cand->specs, form);
    doc["feasible"] = cand->solved();
    doc["max_violation"] = fixed(cand->max_violation, 3);
    if (!cand->reason.empty()) doc["reason"] = cand->reason;
  }
  return doc;
}

json oracle_summary(const CollocationResult& o, const BrunovskyForm& form, double analytic_cost) {
  json doc;
  doc["nodes"] = o.nodes;
  doc["cost"] = fixed(o.cost);
  doc["analytic_cost"] = fixed(analytic_cost);
  doc["relative_gap"] = fixed((analytic_cost - o.cost) / std::max(1e-300, std::abs(o.cost)), 4);
  doc["convexified"] = o.convexified;
  doc["boundary_offset"] = fixed(o.boundary_offset);
  doc["iterations"] = o.iterations;
  json binding = json::array();
  for (const auto& b : o.binding)
    binding.push_back({{"constraint", form.constraint_names[b.row]},
                       {"start", fixed(b.start)},
                       {"end", fixed(b.end)},
                       {"peak_multiplier", fixed(b.peak_multiplier, 4)}});
  doc["binding"] = binding;
  return doc;
}

std::vector<PlotPanel> trajectory_panels(const Trajectory& traj, int samples) {
  const BrunovskyForm& form = *traj.form;
  const int n = form.num_states(), m = form.num_chains();
  PlotPanel states{"states", {}, {}}, controls{"controls", {}, {}};
  for (int i = 0; i < n; ++i) states.series.push_back({form.original_state_names[i], {}, {}});
  for (int i = 0; i < m; ++i) controls.series.push_back({form.original_control_names[i], {}, {}});
  for (int k = 0; k <= samples; ++k) {
    const double t = form.T * k / samples;
    const StackedPoint p = evaluate(traj, t);
    for (int i = 0; i < n; ++i) {
      states.series[i].t.push_back(t);
      states.series[i].y.push_back(p.x[i]);
    }
    for (int i = 0; i < m; ++i) {
      controls.series[i].t.push_back(t);
      controls.series[i].y.push_back(p.u[i]);
    }
  }
  for (const auto& j : traj.junctions) {
    states.markers.push_back(j.spec.time);
    controls.markers.push_back(j.spec.time);
  }
  return {states, controls};
}

void write_svg(const std::vector<PlotPanel>& panels, const std::string& path) {
  const double width = 800, panel_h = 260, margin = 50;
  std::ofstream out = open_out(path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << panel_h * static_cast<double>(panels.size()) << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (std::size_t p = 0; p < panels.size(); ++p) {
    const PlotPanel& panel = panels[p];
    double t0 = std::numeric_limits<double>::infinity(), t1 = -t0, y0 = t0, y1 = -t0;
    for (const auto& s : panel.series)
      for (std::size_t k = 0; k < s.t.size(); ++k) {
        t0 = std::min(t0, s.t[k]);
        t1 = std::max(t1, s.t[k]);
        y0 = std::min(y0, s.y[k]);
        y1 = std::max(y1, s.y[k]);
      }
    if (!(t1 > t0)) t1 = t0 + 1;
    if (!(y1 > y0)) {
      y0 -= 1;
      y1 += 1;
    }
    const double top = panel_h * static_cast<double>(p) + 25, h = panel_h - 55, left = margin, w = width - 2 * margin - 60;
    auto X = [&](double t) { return left + (t - t0) / (t1 - t0) * w; };
    auto Y = [&](double y) { return top + h - (y - y0) / (y1 - y0) * h; };
    out << "<text x=\"" << left << "\" y=\"" << top - 8 << "\">" << panel.title << "</text>\n";
    out << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << w << "\" height=\"" << h
        << "\" fill=\"none\" stroke=\"#888\"/>\n";
    out << "<text x=\"" << left << "\" y=\"" << top + h + 14 << "\">" << t0 << "</text>\n";
    out << "<text x=\"" << left + w << "\" y=\"" << top + h + 14 << "\" text-anchor=\"end\">" << t1 << " s</text>\n";
    out << "<text x=\"" << left - 4 << "\" y=\"" << top + 10 << "\" text-anchor=\"end\">" << fixed(y1, 4) << "</text>\n";
    out << "<text x=\"" << left - 4 << "\" y=\"" << top + h << "\" text-anchor=\"end\">" << fixed(y0, 4) << "</text>\n";
    for (double t : panel.markers)
      out << "<line x1=\"" << X(t) << "\" y1=\"" << top << "\" x2=\"" << X(t) << "\" y2=\"" << top + h
          << "\" stroke=\"#444\" stroke-dasharray=\"4,3\"/>\n";
    for (std::size_t s = 0; s < panel.series.size(); ++s) {
      const PlotSeries& series = panel.series[s];
      const char* color = kColors[s % (sizeof kColors / sizeof *kColors)];
      out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.3\" points=\"";
      for (std::size_t k = 0; k < series.t.size(); ++k) out << X(series.t[k]) << ',' << Y(series.y[k]) << ' ';
      out << "\"/>\n";
      out << "<text x=\"" << left + w + 8 << "\" y=\"" << top + 14 * (s + 1) << "\" fill=\"" << color << "\">"
          << series.name << "</text>\n";
    }
  }
  out << "</svg>\n";
}

void write_json(const json& doc, const std::string& path) {
  std::ofstream out = open_out(path);
  out << doc.dump(2) << '\n';
}

}  // namespace lqmp
