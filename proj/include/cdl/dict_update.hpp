#pragma once

#include <cdl/types.hpp>

#include <functional>
#include <optional>
#include <utility>
#include <vector>

namespace cdl {

// Which signals use atom `atom`, and with what coefficients.
struct AtomSupport {
  Index atom = 0;
  std::vector<Index> indices;  // strictly increasing signal indices
  Vector values;               // matching coefficients, same length
  Index size() const { return static_cast<Index>(indices.size()); }
};

// Residual restricted to one atom's support with that atom's own
// contribution added back: column j is x_{w(j)} - sum_{s != atom} d_s * code[s, w(j)].
struct ErrorSlice {
  int space = 1;  // 1 or 2
  Index atom = 0;
  Matrix matrix;  // dim x |support|
};

AtomSupport support_of_row(const SparseCode& code, Index t);

ErrorSlice error_matrix(const Dataset& data, const Dictionary& dict, const SparseCode& code,
                        const AtomSupport& support, int space = 1);

// Rank-1 least-squares fit of the slice at fixed coefficients:
// normalize(E * values). The direction already satisfies d^T E values >= 0,
// which pins the sign of the rank-1 factor. nullopt when E * values is the
// zero vector (degenerate atom; caller falls back to replacement).
std::optional<Vector> update_atom(const ErrorSlice& error, const AtomSupport& support);

// Exact refresh of the shared coefficient row at fixed unit atoms:
// (atom1^T E1 + atom2^T E2) / 2 — the stacked direction has squared norm 2,
// hence the half.
RowVector update_joint_coeffs(const Vector& atom1, const Vector& atom2,
                              const ErrorSlice& error1, const ErrorSlice& error2);

// Replacement directions for an atom no signal uses: per space the
// normalized column-wise mean of X - D*code, falling back to the largest-norm
// residual column, and keeping the old atom when the residual is all zero.
std::pair<Vector, Vector> replace_unused_atom(const Dataset& data1, const Dataset& data2,
                                              const Dictionary& dict1, const Dictionary& dict2,
                                              const SparseCode& code, Index t);
Vector replace_unused_atom_single(const Dataset& data, const Dictionary& dict,
                                  const SparseCode& code, Index t);

// Reports the joint squared reconstruction error right before and after one
// atom's update step.
using AtomStepObserver = std::function<void(Index atom, double before, double after)>;

// One full dictionary-update pass: atoms visited in order 0..natoms-1, each
// used atom refit as a rank-1 least-squares step followed by the shared-row
// refresh, unused atoms replaced. Dictionaries and the code's stored values
// are updated in place; the code's sparsity pattern is untouched (a value
// landing on exactly zero stays stored until the next coding phase).
void sweep(const Dataset& data1, const Dataset& data2, Dictionary& dict1, Dictionary& dict2,
           SparseCode& code, const AtomStepObserver& observer = {});

// Same pass for one feature space; the row refresh loses the half factor.
void sweep_single(const Dataset& data, Dictionary& dict, SparseCode& code,
                  const AtomStepObserver& observer = {});

}  // namespace cdl
