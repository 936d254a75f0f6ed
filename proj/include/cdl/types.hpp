#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace cdl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using Index = Eigen::Index;

// A batch of column signals from one feature space. If the columns were
// mean-centered, `means` holds the removed per-signal means (length count),
// otherwise it is empty.
struct Dataset {
  Matrix signals;              // dim x count
  std::vector<double> means;

  Index dim() const { return signals.rows(); }
  Index count() const { return signals.cols(); }
};

// Dense dictionary; learned dictionaries keep every column at unit norm.
// Stacked (joint) dictionaries built with vstack have columns of norm
// sqrt(#spaces) and are only fed to the sparse coder.
struct Dictionary {
  Matrix atoms;                // dim x natoms

  Index dim() const { return atoms.rows(); }
  Index natoms() const { return atoms.cols(); }
};

struct SparseEntry {
  std::uint32_t atom = 0;
  double value = 0.0;
};

// Column-sparse coefficient matrix. Each column holds (atom, value) pairs
// sorted by atom index, no duplicates. Values produced by the coder are
// nonzero; the dictionary-update sweep may leave explicit zeros behind,
// which get pruned when the next coding phase rebuilds the code.
struct SparseCode {
  std::uint32_t natoms = 0;
  std::vector<std::vector<SparseEntry>> columns;

  Index count() const { return static_cast<Index>(columns.size()); }

  std::size_t nonzero_count() const {
    std::size_t n = 0;
    for (const auto& col : columns) n += col.size();
    return n;
  }

  Vector dense_column(Index i) const {
    Vector v = Vector::Zero(natoms);
    for (const auto& e : columns[static_cast<std::size_t>(i)]) v[e.atom] = e.value;
    return v;
  }
};

inline Vector reconstruct_column(const Dictionary& dict, const SparseCode& code, Index i) {
  Vector x = Vector::Zero(dict.dim());
  for (const auto& e : code.columns[static_cast<std::size_t>(i)])
    x += e.value * dict.atoms.col(e.atom);
  return x;
}

inline Matrix reconstruct(const Dictionary& dict, const SparseCode& code) {
  Matrix x(dict.dim(), code.count());
  for (Index i = 0; i < code.count(); ++i) x.col(i) = reconstruct_column(dict, code, i);
  return x;
}

// Vertical concatenation for joint coding over two feature spaces.
inline Dictionary vstack(const Dictionary& a, const Dictionary& b) {
  Dictionary joint;
  joint.atoms.resize(a.dim() + b.dim(), a.natoms());
  joint.atoms.topRows(a.dim()) = a.atoms;
  joint.atoms.bottomRows(b.dim()) = b.atoms;
  return joint;
}

inline Dataset vstack(const Dataset& a, const Dataset& b) {
  Dataset joint;
  joint.signals.resize(a.dim() + b.dim(), a.count());
  joint.signals.topRows(a.dim()) = a.signals;
  joint.signals.bottomRows(b.dim()) = b.signals;
  return joint;
}

inline bool has_unit_columns(const Dictionary& dict, double tol = 1e-9) {
  for (Index t = 0; t < dict.natoms(); ++t)
    if (std::abs(dict.atoms.col(t).norm() - 1.0) > tol) return false;
  return true;
}

}  // namespace cdl
