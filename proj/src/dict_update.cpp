#include <cdl/dict_update.hpp>

#include <cmath>
#include <stdexcept>

namespace cdl {

AtomSupport support_of_row(const SparseCode& code, Index t) {
  if (t < 0 || t >= static_cast<Index>(code.natoms)) {
    throw std::invalid_argument("support_of_row: atom out of range");
  }
  AtomSupport support;
  support.atom = t;
  std::vector<double> values;
  for (Index i = 0; i < code.count(); ++i) {
    for (const auto& e : code.columns[static_cast<std::size_t>(i)]) {
      if (static_cast<Index>(e.atom) == t) {
        support.indices.push_back(i);
        values.push_back(e.value);
        break;
      }
    }
  }
  support.values = Eigen::Map<const Vector>(values.data(), static_cast<Index>(values.size()));
  return support;
}

ErrorSlice error_matrix(const Dataset& data, const Dictionary& dict, const SparseCode& code,
                        const AtomSupport& support, int space) {
  if (support.size() == 0) throw std::invalid_argument("error_matrix: empty support");
  ErrorSlice slice;
  slice.space = space;
  slice.atom = support.atom;
  slice.matrix.resize(data.dim(), support.size());
  for (Index j = 0; j < support.size(); ++j) {
    const Index i = support.indices[static_cast<std::size_t>(j)];
    slice.matrix.col(j) = data.signals.col(i) - reconstruct_column(dict, code, i) +
                          support.values[j] * dict.atoms.col(support.atom);
  }
  return slice;
}

std::optional<Vector> update_atom(const ErrorSlice& error, const AtomSupport& support) {
  if (support.size() == 0) throw std::invalid_argument("update_atom: empty support");
  if (error.matrix.cols() != support.size()) {
    throw std::invalid_argument("update_atom: slice/support size mismatch");
  }
  Vector direction = error.matrix * support.values;
  const double norm = direction.norm();
  if (norm == 0.0) return std::nullopt;
  return direction / norm;
}

RowVector update_joint_coeffs(const Vector& atom1, const Vector& atom2, const ErrorSlice& error1,
                              const ErrorSlice& error2) {
  if (error1.matrix.cols() != error2.matrix.cols()) {
    throw std::invalid_argument("update_joint_coeffs: slice widths differ");
  }
  return (atom1.transpose() * error1.matrix + atom2.transpose() * error2.matrix) / 2.0;
}

namespace {

// Dominant direction of a residual: its normalized column-wise mean, falling
// back to the largest-norm column, then to `old_atom` when all zero.
Vector residual_direction(const Matrix& residual, const Vector& old_atom) {
  Vector mean = residual.rowwise().mean();
  double norm = mean.norm();
  if (norm > 0.0) return mean / norm;
  Index widest = 0;
  residual.colwise().norm().maxCoeff(&widest);
  norm = residual.col(widest).norm();
  if (norm > 0.0) return residual.col(widest) / norm;
  return old_atom;
}

}  // namespace

Vector replace_unused_atom_single(const Dataset& data, const Dictionary& dict,
                                  const SparseCode& code, Index t) {
  return residual_direction(data.signals - reconstruct(dict, code), dict.atoms.col(t));
}

std::pair<Vector, Vector> replace_unused_atom(const Dataset& data1, const Dataset& data2,
                                              const Dictionary& dict1, const Dictionary& dict2,
                                              const SparseCode& code, Index t) {
  return {replace_unused_atom_single(data1, dict1, code, t),
          replace_unused_atom_single(data2, dict2, code, t)};
}

namespace {

// One feature space's slice of the sweep: its dictionary and the maintained
// residual X - D*code.
struct SpaceState {
  Matrix* atoms;
  Matrix residual;
};

// Positions of row t's entries inside the column lists, built once per sweep
// (the pattern is frozen; only stored values change).
struct RowRef {
  Index column;
  std::size_t position;
};

void sweep_core(std::vector<SpaceState>& spaces, SparseCode& code,
                const AtomStepObserver& observer) {
  const auto natoms = static_cast<Index>(code.natoms);
  const double nspaces = static_cast<double>(spaces.size());

  std::vector<std::vector<RowRef>> rows(static_cast<std::size_t>(natoms));
  for (Index i = 0; i < code.count(); ++i) {
    const auto& column = code.columns[static_cast<std::size_t>(i)];
    for (std::size_t p = 0; p < column.size(); ++p) {
      rows[column[p].atom].push_back({i, p});
    }
  }

  double objective = 0.0;
  for (const auto& space : spaces) objective += space.residual.squaredNorm();

  for (Index t = 0; t < natoms; ++t) {
    const auto& refs = rows[static_cast<std::size_t>(t)];
    const auto width = static_cast<Index>(refs.size());

    if (width == 0) {
      // Unused atom: replace it with the dominant residual direction. The
      // reconstruction does not involve it, so the objective is untouched.
      for (auto& space : spaces) {
        space.atoms->col(t) = residual_direction(space.residual, space.atoms->col(t));
      }
      if (observer) observer(t, objective, objective);
      continue;
    }

    Vector values(width);
    for (Index j = 0; j < width; ++j) {
      const auto& ref = refs[static_cast<std::size_t>(j)];
      values[j] = code.columns[static_cast<std::size_t>(ref.column)][ref.position].value;
    }

    // Restricted error slices with this atom's contribution added back, and
    // the new per-space directions E*values (the rank-1 LS fit at fixed
    // coefficients, normalized per space).
    double before_slices = 0.0;
    std::vector<Matrix> slices(spaces.size());
    std::vector<Vector> directions(spaces.size());
    for (std::size_t s = 0; s < spaces.size(); ++s) {
      auto& space = spaces[s];
      Matrix& slice = slices[s];
      slice.resize(space.residual.rows(), width);
      for (Index j = 0; j < width; ++j) {
        slice.col(j) = space.residual.col(refs[static_cast<std::size_t>(j)].column);
      }
      before_slices += slice.squaredNorm();
      slice += space.atoms->col(t) * values.transpose();

      Vector direction = slice * values;
      const double norm = direction.norm();
      if (norm > 0.0) {
        directions[s] = direction / norm;
      } else {
        // Degenerate fit: fall back to the replacement rule. Any unit
        // direction keeps the step non-increasing here, since the old
        // coefficients contributed nothing to explaining the slice.
        directions[s] = residual_direction(space.residual, space.atoms->col(t));
      }
    }

    RowVector row = RowVector::Zero(width);
    for (std::size_t s = 0; s < spaces.size(); ++s) {
      row += directions[s].transpose() * slices[s];
    }
    row /= nspaces;

    double after_slices = 0.0;
    for (std::size_t s = 0; s < spaces.size(); ++s) {
      auto& space = spaces[s];
      slices[s] -= directions[s] * row;
      after_slices += slices[s].squaredNorm();
      for (Index j = 0; j < width; ++j) {
        space.residual.col(refs[static_cast<std::size_t>(j)].column) = slices[s].col(j);
      }
      space.atoms->col(t) = directions[s];
    }
    for (Index j = 0; j < width; ++j) {
      const auto& ref = refs[static_cast<std::size_t>(j)];
      code.columns[static_cast<std::size_t>(ref.column)][ref.position].value = row[j];
    }

    const double before = objective;
    objective += after_slices - before_slices;
    if (observer) observer(t, before, objective);
  }
}

}  // namespace

void sweep(const Dataset& data1, const Dataset& data2, Dictionary& dict1, Dictionary& dict2,
           SparseCode& code, const AtomStepObserver& observer) {
  if (data1.count() != data2.count() || data1.count() != code.count()) {
    throw std::invalid_argument("sweep: signal counts disagree");
  }
  if (dict1.natoms() != dict2.natoms() ||
      dict1.natoms() != static_cast<Index>(code.natoms)) {
    throw std::invalid_argument("sweep: atom counts disagree");
  }
  std::vector<SpaceState> spaces;
  spaces.push_back({&dict1.atoms, data1.signals - reconstruct(dict1, code)});
  spaces.push_back({&dict2.atoms, data2.signals - reconstruct(dict2, code)});
  sweep_core(spaces, code, observer);
}

void sweep_single(const Dataset& data, Dictionary& dict, SparseCode& code,
                  const AtomStepObserver& observer) {
  if (data.count() != code.count() || dict.natoms() != static_cast<Index>(code.natoms)) {
    throw std::invalid_argument("sweep: shapes disagree");
  }
  std::vector<SpaceState> spaces;
  spaces.push_back({&dict.atoms, data.signals - reconstruct(dict, code)});
  sweep_core(spaces, code, observer);
}

}  // namespace cdl
