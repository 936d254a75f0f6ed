#include <cdl/sparse_coding.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cdl {

AtomMatch match_atom(const Dictionary& dict, const Vector& residual,
                     const std::vector<char>& excluded) {
  if (residual.size() != dict.dim()) throw std::invalid_argument("match_atom: length mismatch");
  if (!excluded.empty() && static_cast<Index>(excluded.size()) != dict.natoms()) {
    throw std::invalid_argument("match_atom: bad exclusion mask");
  }
  AtomMatch best;
  for (Index t = 0; t < dict.natoms(); ++t) {
    if (!excluded.empty() && excluded[static_cast<std::size_t>(t)]) continue;
    const double corr = std::abs(dict.atoms.col(t).dot(residual));
    if (best.index < 0 || corr > best.correlation) {
      best.index = t;
      best.correlation = corr;
    }
  }
  return best;
}

std::optional<Vector> solve_ls_on_support(const Dictionary& dict, const Vector& signal,
                                          const std::vector<Index>& support) {
  const Index k = static_cast<Index>(support.size());
  if (k == 0) return Vector();
  Matrix sub(dict.dim(), k);
  for (Index j = 0; j < k; ++j) sub.col(j) = dict.atoms.col(support[static_cast<std::size_t>(j)]);
  Eigen::ColPivHouseholderQR<Matrix> qr(sub);
  if (qr.rank() < k) return std::nullopt;
  return qr.solve(signal);
}

namespace {

// Grows a Cholesky factor of the support Gram matrix one atom at a time, so
// each refit costs O(k^2 + k*dim) instead of a fresh O(k^2*dim) solve.
struct SupportSolver {
  Matrix chol;      // lower-triangular factor, top-left k x k block in use
  Matrix atoms;     // selected columns
  Vector rhs;       // atoms^T * signal
  Index k = 0;

  explicit SupportSolver(Index dim, int capacity)
      : chol(Matrix::Zero(capacity, capacity)), atoms(dim, capacity), rhs(capacity) {}

  // False when adding the atom would make the Gram matrix numerically
  // singular; the solver is left untouched in that case.
  bool push(const Vector& atom, double atom_rhs) {
    double diag2 = atom.squaredNorm();
    if (k > 0) {
      const Vector g = atoms.leftCols(k).transpose() * atom;
      const Vector w =
          chol.topLeftCorner(k, k).triangularView<Eigen::Lower>().solve(g);
      diag2 -= w.squaredNorm();
      if (diag2 <= 1e-12) return false;
      chol.row(k).head(k) = w.transpose();
    } else if (diag2 <= 1e-12) {
      return false;
    }
    chol(k, k) = std::sqrt(diag2);
    atoms.col(k) = atom;
    rhs[k] = atom_rhs;
    ++k;
    return true;
  }

  Vector solve() const {
    const auto lower = chol.topLeftCorner(k, k).triangularView<Eigen::Lower>();
    Vector c = lower.solve(rhs.head(k));
    lower.transpose().solveInPlace(c);
    return c;
  }
};

}  // namespace

std::vector<SparseEntry> omp_joint(const Dictionary& dict, const Vector& signal,
                                   const CodingLimits& limits, OmpTrace* trace) {
  if (signal.size() != dict.dim()) throw std::invalid_argument("omp_joint: length mismatch");
  if (limits.max_nonzeros < 1 || limits.error_threshold < 0.0) {
    throw std::invalid_argument("omp_joint: bad limits");
  }
  if (trace) trace->clear();

  std::vector<char> used(static_cast<std::size_t>(dict.natoms()), 0);
  std::vector<Index> support;
  SupportSolver solver(dict.dim(), limits.max_nonzeros);
  Vector residual = signal;
  Vector coeffs;
  double error = residual.squaredNorm();

  while (error > limits.error_threshold &&
         static_cast<int>(support.size()) < limits.max_nonzeros) {
    const AtomMatch match = match_atom(dict, residual, used);
    if (match.index < 0 || match.correlation < kCorrelationUnderflow) break;
    if (!solver.push(dict.atoms.col(match.index), dict.atoms.col(match.index).dot(signal))) break;
    support.push_back(match.index);
    used[static_cast<std::size_t>(match.index)] = 1;

    coeffs = solver.solve();
    residual = signal;
    for (std::size_t j = 0; j < support.size(); ++j) {
      residual -= coeffs[static_cast<Index>(j)] * dict.atoms.col(support[j]);
    }
    error = residual.squaredNorm();
    if (trace) trace->push_back({match.index, coeffs, residual});
  }

  std::vector<SparseEntry> column;
  column.reserve(support.size());
  for (std::size_t j = 0; j < support.size(); ++j) {
    column.push_back({static_cast<std::uint32_t>(support[j]), coeffs[static_cast<Index>(j)]});
  }
  std::sort(column.begin(), column.end(),
            [](const SparseEntry& a, const SparseEntry& b) { return a.atom < b.atom; });
  return column;
}

SparseCode code_dataset(const Dictionary& dict, const Dataset& data, const CodingLimits& limits) {
  if (data.dim() != dict.dim()) throw std::invalid_argument("code_dataset: dim mismatch");
  SparseCode code;
  code.natoms = static_cast<std::uint32_t>(dict.natoms());
  code.columns.resize(static_cast<std::size_t>(data.count()));
  for (Index i = 0; i < data.count(); ++i) {
    code.columns[static_cast<std::size_t>(i)] = omp_joint(dict, data.signals.col(i), limits);
  }
  return code;
}

}  // namespace cdl
