#pragma once

#include <cdl/dict_update.hpp>
#include <cdl/learner.hpp>
#include <cdl/types.hpp>

#include <optional>
#include <utility>

namespace cdl {

// Leading rank-1 factor (unit atom, coefficient row) of the slice — the
// classical exact atom update. Computed by power iteration on the small-side
// Gram matrix E E^T (tolerance 1e-10, at most 1000 iterations); agrees with
// a full SVD within 1e-8. nullopt when the slice is all zero (keep the old
// atom in that case).
std::optional<std::pair<Vector, RowVector>> ksvd_update_atom(const ErrorSlice& error,
                                                             const AtomSupport& support);

// Same factor computed the classical-cost way: forms the Gram matrix of the
// *longer* side, so the work grows as max(m,w)^2 * min(m,w). Exists only as
// the timing comparator the fast update is benchmarked against.
std::optional<std::pair<Vector, RowVector>> rank1_factor_gram(const Matrix& slice);

// Reference learner: coding at the constant cap, exact rank-1 updates, same
// metrics schema as learn_single so curves overlay directly. The returned
// model carries the dictionary in both slots.
CoupledModel learn_ksvd(const Dataset& data, const LearnConfig& config,
                        const CycleObserver& observer = {});

}  // namespace cdl
