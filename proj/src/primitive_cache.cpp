#include "lqmp/primitive_cache.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <functional>
#include <mutex>
#include <sstream>

#include "json.hpp"

#include "lqmp/error.hpp"

namespace lqmp {

namespace {

using nlohmann::json;

json to_json(const MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(rows)}};
}

MatrixXd matrix_from_json(const json& j) {
  MatrixXd m(j.at("rows").get<Eigen::Index>(), j.at("cols").get<Eigen::Index>());
  const json& data = j.at("data");
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = data.at(r).at(c).get<double>();
  return m;
}

void append(std::string& out, const MatrixXd& m) {
  char buf[32];
  out += std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + ":";
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,", m.data()[i]);
    out += buf;
  }
}

// FNV-1a, 64 bit.
std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

void normalize(std::vector<int>& set) {
  std::sort(set.begin(), set.end());
  set.erase(std::unique(set.begin(), set.end()), set.end());
}

}  // namespace

PrimitiveLibrary::PrimitiveLibrary(std::shared_ptr<const BrunovskyForm> form) : form_(std::move(form)) {}

std::shared_ptr<const MotionPrimitive> PrimitiveLibrary::get(std::vector<int> active_set) {
  normalize(active_set);
  {
    std::shared_lock lock(mutex_);
    auto it = entries_.find(active_set);
    if (it != entries_.end()) return it->second;
  }
  auto prim = std::make_shared<const MotionPrimitive>(make_primitive(*form_, active_set));
  std::unique_lock lock(mutex_);
  auto [it, inserted] = entries_.emplace(active_set, prim);
  return it->second;
}

bool PrimitiveLibrary::contains(std::vector<int> active_set) const {
  normalize(active_set);
  std::shared_lock lock(mutex_);
  return entries_.count(active_set) > 0;
}

std::size_t PrimitiveLibrary::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

std::string PrimitiveLibrary::fingerprint() const {
  std::string data;
  for (int k : form_->index.chain_lengths()) data += std::to_string(k) + ";";
  append(data, form_->Kmat);
  append(data, form_->Lmat);
  append(data, form_->eVec);
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(data)));
  return buf;
}

void PrimitiveLibrary::save(const std::string& path) const {
  json doc;
  doc["format"] = "lqmp-primitives";
  doc["version"] = kVersion;
  doc["fingerprint"] = fingerprint();
  json list = json::array();
  {
    std::shared_lock lock(mutex_);
    for (const auto& [key, prim] : entries_) {
      json e;
      e["active_set"] = prim->active_set;
      e["characteristic"] = std::vector<double>(prim->characteristic.data(),
                                                prim->characteristic.data() + prim->characteristic.size());
      e["M"] = to_json(prim->ham.M);
      e["Z"] = to_json(prim->ham.Z);
      e["Eta"] = to_json(prim->ham.Eta);
      e["Lambda"] = to_json(prim->ham.Lambda);
      json groups = json::array();
      for (const auto& g : prim->basis.groups)
        groups.push_back({{"name", g.name}, {"at_end", g.at_end}, {"V", to_json(g.V)}, {"J", to_json(g.J)}});
      e["groups"] = std::move(groups);
      list.push_back(std::move(e));
    }
  }
  doc["primitives"] = std::move(list);
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kInvalidInput, "cannot write cache file " + path);
  out << doc.dump(1) << '\n';
}

int PrimitiveLibrary::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kInvalidInput, "cannot read cache file " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kCacheMismatch, std::string("cache file is not valid JSON: ") + e.what());
  }
  if (doc.value("format", "") != "lqmp-primitives" || doc.value("version", -1) != kVersion)
    throw Error(ErrorCode::kCacheMismatch, "unsupported cache format or version");
  if (doc.value("fingerprint", "") != fingerprint())
    throw Error(ErrorCode::kCacheMismatch, "cache was written for a different problem");

  std::map<std::vector<int>, std::shared_ptr<const MotionPrimitive>> loaded;
  try {
    for (const json& e : doc.at("primitives")) {
      std::vector<int> set = e.at("active_set").get<std::vector<int>>();
      normalize(set);
      MotionPrimitive prim;
      prim.active_set = set;
      prim.label = active_set_label(set);
      prim.stacks = check_active_set(*form_, set);
      const int n = form_->num_states(), m = form_->num_chains();
      prim.reduced_rows.resize(static_cast<Eigen::Index>(set.size()), n + m);
      prim.reduced_offsets.resize(static_cast<Eigen::Index>(set.size()));
      for (std::size_t c = 0; c < set.size(); ++c) {
        prim.reduced_rows.row(c) = prim.stacks[c].reduced;
        prim.reduced_offsets[c] = prim.stacks[c].reduced_offset;
      }
      for (int i = 0; i < m; ++i) prim.odes.push_back(derive_ode(*form_, i, set));
      const auto coeffs = e.at("characteristic").get<std::vector<double>>();
      prim.characteristic = Eigen::Map<const VectorXd>(coeffs.data(), static_cast<Eigen::Index>(coeffs.size()));
      prim.ham.M = matrix_from_json(e.at("M"));
      prim.ham.Z = matrix_from_json(e.at("Z"));
      prim.ham.Eta = matrix_from_json(e.at("Eta"));
      prim.ham.Lambda = matrix_from_json(e.at("Lambda"));
      for (const json& g : e.at("groups")) {
        ModalGroup group;
        group.name = g.at("name").get<std::string>();
        group.at_end = g.at("at_end").get<bool>();
        group.V = matrix_from_json(g.at("V"));
        group.J = matrix_from_json(g.at("J"));
        prim.basis.dimension += static_cast<int>(group.V.cols());
        prim.basis.groups.push_back(std::move(group));
      }
      if (prim.ham.M.rows() != 2 * n + 1 || prim.basis.dimension != 2 * n + 1)
        throw Error(ErrorCode::kCacheMismatch, "entry " + prim.label + " has the wrong dimension");
      const double residual = validate_primitive(prim, *form_);
      if (!(residual <= 1e-8)) {
        std::ostringstream msg;
        msg << "entry " << prim.label << " fails the Euler-Lagrange check (residual " << residual << ")";
        throw Error(ErrorCode::kCacheMismatch, msg.str());
      }
      loaded.emplace(set, std::make_shared<const MotionPrimitive>(std::move(prim)));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kCacheMismatch, std::string("malformed cache entry: ") + e.what());
  }
  std::unique_lock lock(mutex_);
  for (auto& [key, prim] : loaded) entries_[key] = prim;
  return static_cast<int>(loaded.size());
}

double validate_primitive(const MotionPrimitive& prim, const BrunovskyForm& form) {
  const int nw = prim.basis.dimension;
  double worst = 0.0;
  for (const auto& g : prim.basis.groups) {
    const double inv = (prim.ham.M * g.V - g.V * g.J).norm() / std::max(1.0, prim.ham.M.norm());
    worst = std::max(worst, inv);
  }
  // Deterministic arc states spread over the basis.
  for (int trial = 0; trial < 4; ++trial) {
    VectorXd c(nw);
    for (int k = 0; k < nw; ++k) c[k] = std::cos(1.3 * (k + 1) * (trial + 1));
    const double t = 0.25 * trial;
    const VectorXd w = prim.basis.fundamental(t, 0.0, 1.0) * c;
    const VectorXd r = euler_lagrange_residual(prim, form, w);
    // Scale: size of the gradient terms entering the residual.
    double scale = 1.0;
    VectorXd dw = w;
    for (int k = 0; k <= 4; ++k) {
      scale = std::max(scale, (2.0 * form.Kmat * (prim.ham.Z * dw)).cwiseAbs().maxCoeff());
      dw = prim.ham.M * dw;
    }
    worst = std::max(worst, r.cwiseAbs().maxCoeff() / scale);
  }
  return worst;
}

}  // namespace lqmp
