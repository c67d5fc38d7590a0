#pragma once

#include <map>
#include <memory>
#include <shared_mutex>
#include <string>
#include <vector>

#include "lqmp/model.hpp"
#include "lqmp/primitives.hpp"

namespace lqmp {

/// Motion primitives of one problem, derived on first use and keyed by
/// active set. Safe for concurrent lookups and insertions.
class PrimitiveLibrary {
 public:
  explicit PrimitiveLibrary(std::shared_ptr<const BrunovskyForm> form);

  const BrunovskyForm& form() const { return *form_; }
  std::shared_ptr<const BrunovskyForm> form_ptr() const { return form_; }

  /// Cached primitive for the active set; derived on a miss. Derivation
  /// errors propagate and nothing is stored.
  std::shared_ptr<const MotionPrimitive> get(std::vector<int> active_set);
  bool contains(std::vector<int> active_set) const;
  std::size_t size() const;

  /// Hex digest of the canonical problem data the primitives depend on.
  std::string fingerprint() const;

  /// Writes every cached primitive to a versioned JSON file.
  void save(const std::string& path) const;
  /// Reads primitives written by save(). Each entry is checked against the
  /// Euler-Lagrange equations before it is accepted. Throws CacheMismatch on
  /// a version or fingerprint mismatch, or when an entry fails the check.
  /// Returns the number of primitives loaded.
  int load(const std::string& path);

  static constexpr int kVersion = 1;

 private:
  std::shared_ptr<const BrunovskyForm> form_;
  mutable std::shared_mutex mutex_;
  std::map<std::vector<int>, std::shared_ptr<const MotionPrimitive>> entries_;
};

/// Largest Euler-Lagrange residual of the primitive over a few deterministic
/// arc states, relative to the size of the individual terms.
double validate_primitive(const MotionPrimitive& primitive, const BrunovskyForm& form);

}  // namespace lqmp
