#pragma once

#include <cdl/types.hpp>

#include <cstdint>
#include <functional>
#include <vector>

namespace cdl {

enum class ScheduleMode { graduated, constant };

struct LearnConfig {
  int cycles = 32;
  int max_nonzeros = 32;
  double error_threshold = 4.0;
  ScheduleMode schedule = ScheduleMode::graduated;
  Index natoms = 256;
  std::uint64_t seed = 0;
  bool record_metrics = true;
  // When false, recorded wall times are 0 so identical runs serialize to
  // identical bytes (timer readings are the only nondeterministic output).
  bool measure_time = true;
};

struct CycleMetrics {
  std::uint32_t cycle = 0;  // 1-based
  double wall_time = 0.0;   // seconds spent coding + updating, I/O excluded
  double avg_nonzeros = 0.0;
  double avg_error = 0.0;
  std::uint32_t limit = 0;  // sparsity cap used this cycle
};

struct CoupledModel {
  Dictionary dict1;
  Dictionary dict2;
  SparseCode code;
  std::vector<CycleMetrics> metrics;
};

// Per-cycle cap on nonzeros per signal: round(linspace(1, max_nonzeros,
// cycles)) in graduated mode, max_nonzeros repeated in constant mode.
std::vector<int> sparsity_schedule(int cycles, int max_nonzeros,
                                   ScheduleMode mode = ScheduleMode::graduated);

// Starting dictionary shared by every learner: the separable cosine basis
// when both sizes are perfect squares, otherwise seeded random unit columns
// (with a warning on stderr, since the cosine start is the documented one).
Dictionary initial_dictionary(Index dim, Index natoms, std::uint64_t seed);

// Average learning error of a coded dataset: sqrt(total squared error) / n.
double avg_learning_error(const Dataset& data, const Dictionary& dict, const SparseCode& code);

// Hook for tests: reconstruction error (avg_learning_error of the joint
// system) right after the coding phase and right after the update phase.
struct CycleInfo {
  int cycle = 0;  // 1-based
  int limit = 0;
  double err_after_coding = 0.0;
  double err_after_update = 0.0;
};
using CycleObserver = std::function<void(const CycleInfo&)>;

// Alternating sparse coding / dictionary update over two feature spaces
// sharing one code. Dictionaries start from the separable cosine basis when
// dimensions allow, otherwise from seeded random unit columns (each space
// seeded identically, so equal inputs keep the two spaces in lockstep).
CoupledModel learn_coupled(const Dataset& data1, const Dataset& data2, const LearnConfig& config,
                           const CycleObserver& observer = {});

// One feature space; the returned model carries the dictionary in both slots
// so every model consumer works unchanged.
CoupledModel learn_single(const Dataset& data, const LearnConfig& config,
                          const CycleObserver& observer = {});

}  // namespace cdl
