#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lqmp/junctions.hpp"
#include "lqmp/primitive_cache.hpp"

namespace lqmp {

struct Violation {
  int row = -1;
  double time = 0.0;
  double magnitude = 0.0;
  double window_start = 0.0;  // extent of the violated grid points around `time`
  double window_end = 0.0;
};

/// Evaluates L z - e on a uniform grid plus both limits at every junction,
/// refines each near-active local maximum by golden-section search and
/// reports the worst violation per row above `tolerance`, sorted by
/// magnitude (ties by time). Empty means feasible.
std::vector<Violation> check_feasibility(const Trajectory& trajectory, int points = 10000,
                                         double tolerance = 1e-8);

enum class CandidateStatus { kUnsolved, kSolved, kInfeasible };

struct SequenceCandidate {
  std::vector<JunctionSpec> specs;
  CandidateStatus status = CandidateStatus::kUnsolved;
  double cost = 0.0;
  double max_violation = 0.0;
  std::string reason;
  std::optional<Trajectory> trajectory;

  bool solved() const { return status == CandidateStatus::kSolved; }
};

std::string describe(const std::vector<JunctionSpec>& specs, const BrunovskyForm& form);

struct SequencingOptions {
  int max_iterations = 6;
  int feasibility_points = 10000;
  double feasibility_tolerance = 1e-8;
  JunctionSolveOptions solve;
};

/// Solves one explicit sequence and certifies it on the dense grid.
SequenceCandidate solve_sequence(PrimitiveLibrary& library, std::vector<JunctionSpec> specs,
                                 const SequencingOptions& options = {});

/// Solve, impose the worst violated row (touch first, interval when the row
/// was already touched or contains the control), repeat. Starts from `seed`.
/// Throws HeuristicExhausted when the iteration cap is reached.
SequenceCandidate violation_heuristic(PrimitiveLibrary& library, const SequencingOptions& options = {},
                                      std::vector<JunctionSpec> seed = {});

struct ExhaustiveResult {
  SequenceCandidate best;
  std::vector<SequenceCandidate> ranking;  // feasible by cost, then the rest
  int pruned = 0;
  double lower_bound = 0.0;                // unconstrained cost
};

/// Enumerates touches and intervals of every row up to `max_junctions`
/// junctions, pruning extensions of prefixes whose cost already exceeds the
/// incumbent.
ExhaustiveResult exhaustive_compare(PrimitiveLibrary& library, int max_junctions = 2,
                                    const SequencingOptions& options = {});

/// Parses "name-kind[@time],..." where kind is touch, entry, exit or
/// interval (entry and exit) and name is a constraint name or row index.
/// Throws InvalidInput.
std::vector<JunctionSpec> parse_sequence(const std::string& text, const BrunovskyForm& form);

}  // namespace lqmp
