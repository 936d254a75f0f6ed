#include <cdl/learner.hpp>

#include <cdl/datapipe.hpp>
#include <cdl/dict_update.hpp>
#include <cdl/sparse_coding.hpp>

#include <chrono>
#include <cmath>
#include <iostream>
#include <random>
#include <stdexcept>

namespace cdl {

std::vector<int> sparsity_schedule(int cycles, int max_nonzeros, ScheduleMode mode) {
  if (cycles < 1 || max_nonzeros < 1) throw std::invalid_argument("sparsity_schedule: bad sizes");
  std::vector<int> schedule(static_cast<std::size_t>(cycles), max_nonzeros);
  if (mode == ScheduleMode::graduated && cycles > 1) {
    for (int k = 0; k < cycles; ++k) {
      const double x = 1.0 + (max_nonzeros - 1.0) * k / (cycles - 1.0);
      schedule[static_cast<std::size_t>(k)] = static_cast<int>(std::floor(x + 0.5));
    }
  }
  return schedule;
}

Dictionary initial_dictionary(Index dim, Index natoms, std::uint64_t seed) {
  if (dct_compatible(dim, natoms)) return dct_dictionary(dim, natoms);
  std::cerr << "learn: no separable cosine layout for " << dim << "x" << natoms
            << "; falling back to seeded random atoms\n";
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Dictionary dict;
  dict.atoms.resize(dim, natoms);
  for (Index j = 0; j < natoms; ++j) {
    for (Index i = 0; i < dim; ++i) dict.atoms(i, j) = gauss(rng);
    dict.atoms.col(j).normalize();
  }
  return dict;
}

double avg_learning_error(const Dataset& data, const Dictionary& dict, const SparseCode& code) {
  if (data.count() != code.count() || data.dim() != dict.dim()) {
    throw std::invalid_argument("avg_learning_error: shapes disagree");
  }
  double total = 0.0;
  for (Index i = 0; i < data.count(); ++i) {
    total += (data.signals.col(i) - reconstruct_column(dict, code, i)).squaredNorm();
  }
  return std::sqrt(total) / static_cast<double>(data.count());
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_between(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double>(b - a).count();
}

// Shared cycle loop for one or two feature spaces (spaces.size() is 1 or 2).
CoupledModel learn_core(const std::vector<const Dataset*>& spaces, const LearnConfig& config,
                        const CycleObserver& observer) {
  const Index count = spaces.front()->count();
  for (const Dataset* space : spaces) {
    if (space->count() != count) throw std::invalid_argument("learn: signal counts disagree");
    if (space->dim() < 1 || count < 1) throw std::invalid_argument("learn: empty dataset");
    if (config.natoms < space->dim()) {
      throw std::invalid_argument("learn: dictionary must be at least complete (natoms >= dim)");
    }
  }
  if (config.cycles < 1 || config.max_nonzeros < 1 || config.error_threshold < 0.0) {
    throw std::invalid_argument("learn: bad config");
  }

  const bool coupled = spaces.size() == 2;
  CoupledModel model;
  model.dict1 = initial_dictionary(spaces[0]->dim(), config.natoms, config.seed);
  model.dict2 = coupled ? initial_dictionary(spaces[1]->dim(), config.natoms, config.seed)
                        : model.dict1;

  Dataset joint_data = coupled ? vstack(*spaces[0], *spaces[1]) : *spaces[0];
  const std::vector<int> schedule =
      sparsity_schedule(config.cycles, config.max_nonzeros, config.schedule);

  for (int cycle = 0; cycle < config.cycles; ++cycle) {
    const CodingLimits limits{schedule[static_cast<std::size_t>(cycle)],
                              config.error_threshold};
    const Dictionary joint_dict = coupled ? vstack(model.dict1, model.dict2) : model.dict1;

    const auto coding_start = Clock::now();
    model.code = code_dataset(joint_dict, joint_data, limits);
    const auto coding_end = Clock::now();

    double err_after_coding = 0.0;
    if (observer) err_after_coding = avg_learning_error(joint_data, joint_dict, model.code);

    const auto update_start = Clock::now();
    if (coupled) {
      sweep(*spaces[0], *spaces[1], model.dict1, model.dict2, model.code);
    } else {
      sweep_single(*spaces[0], model.dict1, model.code);
    }
    const auto update_end = Clock::now();
    if (!coupled) model.dict2 = model.dict1;

    double err_after_update = 0.0;
    if (observer || config.record_metrics) {
      const Dictionary updated_joint =
          coupled ? vstack(model.dict1, model.dict2) : model.dict1;
      err_after_update = avg_learning_error(joint_data, updated_joint, model.code);
    }

    if (config.record_metrics) {
      CycleMetrics metrics;
      metrics.cycle = static_cast<std::uint32_t>(cycle + 1);
      metrics.wall_time = config.measure_time
                              ? seconds_between(coding_start, coding_end) +
                                    seconds_between(update_start, update_end)
                              : 0.0;
      metrics.avg_nonzeros = static_cast<double>(model.code.nonzero_count()) /
                             static_cast<double>(count);
      metrics.avg_error = err_after_update;
      metrics.limit = static_cast<std::uint32_t>(limits.max_nonzeros);
      model.metrics.push_back(metrics);
    }
    if (observer) {
      observer({cycle + 1, limits.max_nonzeros, err_after_coding, err_after_update});
    }
  }
  return model;
}

}  // namespace

CoupledModel learn_coupled(const Dataset& data1, const Dataset& data2, const LearnConfig& config,
                           const CycleObserver& observer) {
  return learn_core({&data1, &data2}, config, observer);
}

CoupledModel learn_single(const Dataset& data, const LearnConfig& config,
                          const CycleObserver& observer) {
  return learn_core({&data}, config, observer);
}

}  // namespace cdl
