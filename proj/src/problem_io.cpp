#include "lqmp/problem_io.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "lqmp/error.hpp"

namespace lqmp {

namespace {

using nlohmann::json;

[[noreturn]] void field_error(const std::string& field, const std::string& what) {
  throw Error(ErrorCode::kInvalidInput, "field '" + field + "': " + what);
}

double number(const json& v, const std::string& field) {
  if (!v.is_number()) field_error(field, "expected a number, got " + std::string(v.type_name()));
  return v.get<double>();
}

MatrixXd read_matrix(const json& doc, const std::string& field, int rows, int cols) {
  const json& v = doc.at(field);
  if (!v.is_array()) field_error(field, "expected an array of rows");
  if (rows >= 0 && static_cast<int>(v.size()) != rows)
    field_error(field, "has " + std::to_string(v.size()) + " rows, expected " + std::to_string(rows));
  MatrixXd m(v.size(), cols);
  for (std::size_t r = 0; r < v.size(); ++r) {
    const json& row = v[r];
    if (!row.is_array()) field_error(field, "row " + std::to_string(r) + " is not an array");
    if (static_cast<int>(row.size()) != cols)
      field_error(field, "row " + std::to_string(r) + " has " + std::to_string(row.size()) + " entries, expected " +
                             std::to_string(cols));
    for (int c = 0; c < cols; ++c) m(r, c) = number(row[c], field);
  }
  return m;
}

VectorXd read_vector(const json& doc, const std::string& field, int size) {
  const json& v = doc.at(field);
  if (!v.is_array()) field_error(field, "expected an array");
  if (static_cast<int>(v.size()) != size)
    field_error(field, "has " + std::to_string(v.size()) + " entries, expected " + std::to_string(size));
  VectorXd out(size);
  for (int i = 0; i < size; ++i) out[i] = number(v[i], field);
  return out;
}

std::vector<std::string> read_names(const json& doc, const std::string& field, int size) {
  if (!doc.contains(field)) return {};
  const json& v = doc.at(field);
  if (!v.is_array() || static_cast<int>(v.size()) != size)
    field_error(field, "expected " + std::to_string(size) + " names");
  std::vector<std::string> out;
  for (const json& s : v) {
    if (!s.is_string()) field_error(field, "names must be strings");
    out.push_back(s.get<std::string>());
  }
  return out;
}

json matrix_json(const MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

json vector_json(const VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

}  // namespace

LqProblem parse_problem(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    // Translate the byte offset into a line number.
    const std::size_t pos = std::min<std::size_t>(e.byte, text.size());
    const long line = 1 + std::count(text.begin(), text.begin() + static_cast<long>(pos), '\n');
    throw Error(ErrorCode::kInvalidInput, "line " + std::to_string(line) + ": " + e.what());
  }
  if (!doc.is_object()) throw Error(ErrorCode::kInvalidInput, "line 1: expected a JSON object");

  static const std::set<std::string> known{"A", "B", "C", "D", "e", "Q", "R", "N", "x0", "xT", "T", "coordinates",
                                           "state_names", "control_names", "constraint_names"};
  for (const auto& [key, value] : doc.items())
    if (!known.count(key)) field_error(key, "unknown key");
  for (const char* key : {"A", "B", "Q", "R", "x0", "xT", "T"})
    if (!doc.contains(key)) field_error(key, "missing");

  LqProblem p;
  const json& a = doc.at("A");
  if (!a.is_array() || a.empty()) field_error("A", "expected a non-empty array of rows");
  const int n = static_cast<int>(a.size());
  p.A = read_matrix(doc, "A", n, n);
  const json& b = doc.at("B");
  if (!b.is_array() || b.size() != static_cast<std::size_t>(n) || !b[0].is_array() || b[0].empty())
    field_error("B", "expected " + std::to_string(n) + " non-empty rows");
  const int m = static_cast<int>(b[0].size());
  p.B = read_matrix(doc, "B", n, m);
  p.Q = read_matrix(doc, "Q", n, n);
  p.R = read_matrix(doc, "R", m, m);
  p.N = doc.contains("N") ? read_matrix(doc, "N", n, m) : MatrixXd::Zero(n, m);
  if (doc.contains("C")) {
    p.C = read_matrix(doc, "C", -1, n);
    const int c = static_cast<int>(p.C.rows());
    p.D = doc.contains("D") ? read_matrix(doc, "D", c, m) : MatrixXd::Zero(c, m);
    if (!doc.contains("e")) field_error("e", "missing (required with C)");
    p.e = read_vector(doc, "e", c);
  } else {
    if (doc.contains("D") || doc.contains("e")) field_error("C", "missing (D or e given)");
    p.C.resize(0, n);
    p.D.resize(0, m);
    p.e.resize(0);
  }
  p.x0 = read_vector(doc, "x0", n);
  p.xT = read_vector(doc, "xT", n);
  p.T = number(doc.at("T"), "T");
  if (doc.contains("coordinates")) {
    const json& c = doc.at("coordinates");
    if (c == "original") {
      p.coordinates = Coordinates::kOriginal;
    } else if (c == "brunovsky") {
      p.coordinates = Coordinates::kBrunovsky;
    } else {
      field_error("coordinates", "expected \"original\" or \"brunovsky\"");
    }
  }
  p.state_names = read_names(doc, "state_names", n);
  p.control_names = read_names(doc, "control_names", m);
  p.constraint_names = read_names(doc, "constraint_names", static_cast<int>(p.C.rows()));
  return p;
}

LqProblem load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kInvalidInput, "cannot read problem file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_problem(buf.str());
}

std::string problem_to_json(const LqProblem& p) {
  json doc;
  doc["A"] = matrix_json(p.A);
  doc["B"] = matrix_json(p.B);
  doc["Q"] = matrix_json(p.Q);
  doc["R"] = matrix_json(p.R);
  doc["N"] = matrix_json(p.N);
  if (p.C.rows() > 0) {
    doc["C"] = matrix_json(p.C);
    doc["D"] = matrix_json(p.D);
    doc["e"] = vector_json(p.e);
  }
  doc["x0"] = vector_json(p.x0);
  doc["xT"] = vector_json(p.xT);
  doc["T"] = p.T;
  doc["coordinates"] = p.coordinates == Coordinates::kBrunovsky ? "brunovsky" : "original";
  if (!p.state_names.empty()) doc["state_names"] = p.state_names;
  if (!p.control_names.empty()) doc["control_names"] = p.control_names;
  if (!p.constraint_names.empty()) doc["constraint_names"] = p.constraint_names;
  return doc.dump(2) + "\n";
}

void save_problem(const LqProblem& problem, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kInvalidInput, "cannot write " + path);
  out << problem_to_json(problem);
}

}  // namespace lqmp
