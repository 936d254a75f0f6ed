#pragma once

#include <cdl/types.hpp>

#include <optional>
#include <vector>

namespace cdl {

// Stopping rules for one coded signal: at most max_nonzeros atoms, or stop
// earlier once the squared residual norm reaches error_threshold.
struct CodingLimits {
  int max_nonzeros = 32;
  double error_threshold = 0.0;
};

// Below this absolute correlation the residual is treated as numerically
// exhausted and coding stops.
inline constexpr double kCorrelationUnderflow = 1e-12;

struct AtomMatch {
  Index index = -1;
  double correlation = 0.0;  // |d^T r| at the returned index
};

// Atom with the largest absolute correlation against the residual; ties go
// to the smallest index. `excluded` is either empty or one flag per atom;
// index stays -1 iff every atom is excluded.
AtomMatch match_atom(const Dictionary& dict, const Vector& residual,
                     const std::vector<char>& excluded = {});

// Fresh dense least-squares fit of the signal on the chosen atoms,
// coefficients in support order. Empty support yields an empty vector;
// a rank-deficient support submatrix yields nullopt.
std::optional<Vector> solve_ls_on_support(const Dictionary& dict, const Vector& signal,
                                          const std::vector<Index>& support);

// State right after one OMP iteration: the atom just picked, the refit
// coefficients for the support so far, and the new residual.
struct OmpStep {
  Index atom = -1;
  Vector coeffs;
  Vector residual;
};
using OmpTrace = std::vector<OmpStep>;

// Greedy sparse coding of one signal: repeatedly match the best unused atom,
// refit all coefficients by least squares, and update the residual. For
// coupled coding pass the stacked dictionary and stacked signal (vstack).
// Stops on the CodingLimits, on correlation underflow, or if the support
// would turn rank deficient (keeping the previous iterate). Entries are
// returned sorted by atom index.
std::vector<SparseEntry> omp_joint(const Dictionary& dict, const Vector& signal,
                                   const CodingLimits& limits, OmpTrace* trace = nullptr);

// omp_joint per column; column order preserved. Serial by design so batch
// output is reproducible bit for bit.
SparseCode code_dataset(const Dictionary& dict, const Dataset& data, const CodingLimits& limits);

}  // namespace cdl
