#include <cdl/ksvd.hpp>

#include <cdl/sparse_coding.hpp>

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace cdl {

namespace {

constexpr double kPowerTolerance = 1e-10;
constexpr int kPowerMaxIterations = 1000;

// Leading eigenvector of a symmetric PSD matrix by plain power iteration,
// starting from `v` (unit norm).
Vector power_iterate(const Matrix& gram, Vector v) {
  for (int iter = 0; iter < kPowerMaxIterations; ++iter) {
    Vector next = gram * v;
    const double norm = next.norm();
    if (norm == 0.0) break;  // v lies in the null space; any fixed vector does
    next /= norm;
    const double drift = (next - v).norm();
    v = next;
    if (drift < kPowerTolerance) break;
  }
  return v;
}

// Unit start vector for the small-side Gram: the dominant column of the
// slice, which has nonzero overlap with the leading singular direction
// unless the slice is pathological (then the iteration cap applies).
Vector start_vector(const Matrix& slice) {
  Index widest = 0;
  slice.colwise().norm().maxCoeff(&widest);
  return slice.col(widest).normalized();
}

}  // namespace

std::optional<std::pair<Vector, RowVector>> ksvd_update_atom(const ErrorSlice& error,
                                                             const AtomSupport& support) {
  if (support.size() == 0) throw std::invalid_argument("ksvd_update_atom: empty support");
  if (error.matrix.cols() != support.size()) {
    throw std::invalid_argument("ksvd_update_atom: slice/support size mismatch");
  }
  const Matrix& slice = error.matrix;
  if (slice.isZero(0.0)) return std::nullopt;
  const Vector atom = power_iterate(slice * slice.transpose(), start_vector(slice));
  return std::make_pair(atom, RowVector(atom.transpose() * slice));
}

std::optional<std::pair<Vector, RowVector>> rank1_factor_gram(const Matrix& slice) {
  if (slice.size() == 0 || slice.isZero(0.0)) return std::nullopt;
  if (slice.cols() > slice.rows()) {
    // Long side is the column side: iterate on the cols x cols Gram.
    Index widest = 0;
    slice.rowwise().norm().maxCoeff(&widest);
    const Vector right =
        power_iterate(slice.transpose() * slice, slice.row(widest).transpose().normalized());
    const Vector scaled = slice * right;  // = sigma * u
    const double sigma = scaled.norm();
    if (sigma == 0.0) return std::nullopt;
    const Vector atom = scaled / sigma;
    return std::make_pair(atom, RowVector(atom.transpose() * slice));
  }
  const Vector atom = power_iterate(slice * slice.transpose(), start_vector(slice));
  return std::make_pair(atom, RowVector(atom.transpose() * slice));
}

CoupledModel learn_ksvd(const Dataset& data, const LearnConfig& config,
                        const CycleObserver& observer) {
  if (data.dim() < 1 || data.count() < 1) throw std::invalid_argument("learn: empty dataset");
  if (config.natoms < data.dim()) {
    throw std::invalid_argument("learn: dictionary must be at least complete (natoms >= dim)");
  }
  if (config.cycles < 1 || config.max_nonzeros < 1 || config.error_threshold < 0.0) {
    throw std::invalid_argument("learn: bad config");
  }

  using Clock = std::chrono::steady_clock;
  CoupledModel model;
  model.dict1 = initial_dictionary(data.dim(), config.natoms, config.seed);
  const CodingLimits limits{config.max_nonzeros, config.error_threshold};

  for (int cycle = 0; cycle < config.cycles; ++cycle) {
    const auto coding_start = Clock::now();
    model.code = code_dataset(model.dict1, data, limits);
    const auto coding_end = Clock::now();

    double err_after_coding = 0.0;
    if (observer) err_after_coding = avg_learning_error(data, model.dict1, model.code);

    // Exact rank-1 updates against a maintained residual, atoms in order;
    // coefficients are refreshed in place, the pattern is untouched.
    const auto update_start = Clock::now();
    std::vector<std::vector<std::pair<Index, std::size_t>>> rows(config.natoms);
    for (Index i = 0; i < model.code.count(); ++i) {
      const auto& column = model.code.columns[static_cast<std::size_t>(i)];
      for (std::size_t p = 0; p < column.size(); ++p) rows[column[p].atom].push_back({i, p});
    }
    Matrix residual = data.signals - reconstruct(model.dict1, model.code);
    for (Index t = 0; t < config.natoms; ++t) {
      const auto& refs = rows[static_cast<std::size_t>(t)];
      if (refs.empty()) {
        model.dict1.atoms.col(t) = replace_unused_atom_single(data, model.dict1, model.code, t);
        continue;
      }
      const auto width = static_cast<Index>(refs.size());
      AtomSupport support;
      support.atom = t;
      support.values.resize(width);
      ErrorSlice slice;
      slice.atom = t;
      slice.matrix.resize(data.dim(), width);
      for (Index j = 0; j < width; ++j) {
        const auto& [column, position] = refs[static_cast<std::size_t>(j)];
        support.indices.push_back(column);
        support.values[j] = model.code.columns[static_cast<std::size_t>(column)][position].value;
        slice.matrix.col(j) = residual.col(column) +
                              support.values[j] * model.dict1.atoms.col(t);
      }
      const auto factor = ksvd_update_atom(slice, support);
      if (!factor) continue;  // all-zero slice: keep the old atom
      const auto& [atom, row] = *factor;
      model.dict1.atoms.col(t) = atom;
      for (Index j = 0; j < width; ++j) {
        const auto& [column, position] = refs[static_cast<std::size_t>(j)];
        model.code.columns[static_cast<std::size_t>(column)][position].value = row[j];
        residual.col(column) = slice.matrix.col(j) - row[j] * atom;
      }
    }
    const auto update_end = Clock::now();

    double err_after_update = 0.0;
    if (observer || config.record_metrics) {
      err_after_update = avg_learning_error(data, model.dict1, model.code);
    }
    if (config.record_metrics) {
      CycleMetrics metrics;
      metrics.cycle = static_cast<std::uint32_t>(cycle + 1);
      metrics.wall_time =
          config.measure_time
              ? std::chrono::duration<double>(coding_end - coding_start).count() +
                    std::chrono::duration<double>(update_end - update_start).count()
              : 0.0;
      metrics.avg_nonzeros = static_cast<double>(model.code.nonzero_count()) /
                             static_cast<double>(data.count());
      metrics.avg_error = err_after_update;
      metrics.limit = static_cast<std::uint32_t>(limits.max_nonzeros);
      model.metrics.push_back(metrics);
    }
    if (observer) {
      observer({cycle + 1, limits.max_nonzeros, err_after_coding, err_after_update});
    }
  }
  model.dict2 = model.dict1;
  return model;
}

}  // namespace cdl
