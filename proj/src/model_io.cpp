#include <cdl/model_io.hpp>

#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>

static_assert(std::endian::native == std::endian::little,
              "the on-disk formats are little-endian and this code writes raw words");

namespace cdl {

namespace {

constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kMaxSide = 1u << 20;        // rows, columns, signal count
constexpr std::uint64_t kMaxEntries = 1ull << 26;   // per dense block

void write_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void write_f64(std::ostream& out, double v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint32_t read_u32(std::istream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (in.gcount() != static_cast<std::streamsize>(sizeof v)) throw ModelIoError(ModelIoErrorKind::truncated, "unexpected end of file");
  return v;
}

double read_f64(std::istream& in) {
  double v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (in.gcount() != static_cast<std::streamsize>(sizeof v)) throw ModelIoError(ModelIoErrorKind::truncated, "unexpected end of file");
  return v;
}

void read_magic(std::istream& in, const char* expected) {
  char magic[4] = {};
  in.read(magic, 4);
  if (in.gcount() != 4 || std::string(magic, 4) != expected) {
    throw ModelIoError(ModelIoErrorKind::bad_header, "bad magic bytes");
  }
}

void check_sides(std::uint64_t rows, std::uint64_t cols) {
  if (rows < 1 || cols < 1 || rows > kMaxSide || cols > kMaxSide || rows * cols > kMaxEntries) {
    throw ModelIoError(ModelIoErrorKind::dimension_overflow, "dimensions outside supported range");
  }
}

void write_block(std::ostream& out, const Matrix& m) {
  out.write(reinterpret_cast<const char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(m.size())));
}

Matrix read_block(std::istream& in, Index rows, Index cols) {
  Matrix m(rows, cols);
  const auto bytes = static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(m.size()));
  in.read(reinterpret_cast<char*>(m.data()), bytes);
  if (in.gcount() != bytes) throw ModelIoError(ModelIoErrorKind::truncated, "unexpected end of file");
  return m;
}

void write_dictionary(std::ostream& out, const Dictionary& dict) {
  write_u32(out, static_cast<std::uint32_t>(dict.dim()));
  write_u32(out, static_cast<std::uint32_t>(dict.natoms()));
  write_block(out, dict.atoms);
}

Dictionary read_dictionary(std::istream& in) {
  const std::uint32_t rows = read_u32(in);
  const std::uint32_t cols = read_u32(in);
  check_sides(rows, cols);
  Dictionary dict;
  dict.atoms = read_block(in, rows, cols);
  return dict;
}

}  // namespace

void save_model(const CoupledModel& model, std::ostream& out) {
  if (model.dict1.natoms() != model.dict2.natoms() ||
      model.dict1.natoms() != static_cast<Index>(model.code.natoms)) {
    throw std::invalid_argument("save_model: dictionaries and code disagree on atom count");
  }
  out.write("CDLM", 4);
  write_u32(out, kVersion);
  write_dictionary(out, model.dict1);
  write_dictionary(out, model.dict2);
  write_u32(out, static_cast<std::uint32_t>(model.code.count()));
  for (const auto& column : model.code.columns) {
    write_u32(out, static_cast<std::uint32_t>(column.size()));
    for (const auto& entry : column) {
      write_u32(out, entry.atom);
      write_f64(out, entry.value);
    }
  }
  write_u32(out, static_cast<std::uint32_t>(model.metrics.size()));
  for (const auto& m : model.metrics) {
    write_u32(out, m.cycle);
    write_f64(out, m.wall_time);
    write_f64(out, m.avg_nonzeros);
    write_f64(out, m.avg_error);
    write_u32(out, m.limit);
  }
  if (!out) throw ModelIoError(ModelIoErrorKind::truncated, "write failed");
}

CoupledModel load_model(std::istream& in) {
  read_magic(in, "CDLM");
  if (read_u32(in) != kVersion) {
    throw ModelIoError(ModelIoErrorKind::bad_header, "unsupported format version");
  }
  CoupledModel model;
  model.dict1 = read_dictionary(in);
  model.dict2 = read_dictionary(in);
  if (model.dict1.natoms() != model.dict2.natoms()) {
    throw ModelIoError(ModelIoErrorKind::bad_payload, "dictionaries disagree on atom count");
  }
  const std::uint32_t natoms = static_cast<std::uint32_t>(model.dict1.natoms());

  const std::uint32_t count = read_u32(in);
  if (count > kMaxSide) {
    throw ModelIoError(ModelIoErrorKind::dimension_overflow, "dimensions outside supported range");
  }
  model.code.natoms = natoms;
  model.code.columns.resize(count);
  for (auto& column : model.code.columns) {
    const std::uint32_t nnz = read_u32(in);
    if (nnz > natoms) throw ModelIoError(ModelIoErrorKind::bad_payload, "more entries than atoms");
    column.resize(nnz);
    std::uint32_t previous = 0;
    for (std::uint32_t j = 0; j < nnz; ++j) {
      column[j].atom = read_u32(in);
      column[j].value = read_f64(in);
      if (column[j].atom >= natoms || (j > 0 && column[j].atom <= previous)) {
        throw ModelIoError(ModelIoErrorKind::bad_payload, "code indices out of order or range");
      }
      if (!std::isfinite(column[j].value)) {
        throw ModelIoError(ModelIoErrorKind::bad_payload, "non-finite coefficient");
      }
      previous = column[j].atom;
    }
  }

  const std::uint32_t nmetrics = read_u32(in);
  if (nmetrics > kMaxSide) {
    throw ModelIoError(ModelIoErrorKind::dimension_overflow, "dimensions outside supported range");
  }
  model.metrics.resize(nmetrics);
  for (auto& m : model.metrics) {
    m.cycle = read_u32(in);
    m.wall_time = read_f64(in);
    m.avg_nonzeros = read_f64(in);
    m.avg_error = read_f64(in);
    m.limit = read_u32(in);
    if (!std::isfinite(m.wall_time) || !std::isfinite(m.avg_nonzeros) ||
        !std::isfinite(m.avg_error)) {
      throw ModelIoError(ModelIoErrorKind::bad_payload, "non-finite metric");
    }
  }
  return model;
}

void save_dataset(const Dataset& data, std::ostream& out) {
  if (!data.means.empty() && static_cast<Index>(data.means.size()) != data.count()) {
    throw std::invalid_argument("save_dataset: means length must match signal count");
  }
  out.write("CDLD", 4);
  write_u32(out, kVersion);
  write_u32(out, static_cast<std::uint32_t>(data.dim()));
  write_u32(out, static_cast<std::uint32_t>(data.count()));
  write_block(out, data.signals);
  write_u32(out, data.means.empty() ? 0 : 1);
  for (const double mean : data.means) write_f64(out, mean);
  if (!out) throw ModelIoError(ModelIoErrorKind::truncated, "write failed");
}

Dataset load_dataset(std::istream& in) {
  read_magic(in, "CDLD");
  if (read_u32(in) != kVersion) {
    throw ModelIoError(ModelIoErrorKind::bad_header, "unsupported format version");
  }
  const std::uint32_t dim = read_u32(in);
  const std::uint32_t count = read_u32(in);
  check_sides(dim, count);
  Dataset data;
  data.signals = read_block(in, dim, count);
  const std::uint32_t has_means = read_u32(in);
  if (has_means > 1) throw ModelIoError(ModelIoErrorKind::bad_payload, "bad means flag");
  if (has_means == 1) {
    data.means.resize(count);
    for (auto& mean : data.means) mean = read_f64(in);
  }
  return data;
}

namespace {

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelIoError(ModelIoErrorKind::truncated, "cannot open " + path);
  return in;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ModelIoError(ModelIoErrorKind::truncated, "cannot open " + path);
  return out;
}

}  // namespace

void save_model(const CoupledModel& model, const std::string& path) {
  auto out = open_output(path);
  save_model(model, out);
}

CoupledModel load_model(const std::string& path) {
  auto in = open_input(path);
  return load_model(in);
}

void save_dataset(const Dataset& data, const std::string& path) {
  auto out = open_output(path);
  save_dataset(data, out);
}

Dataset load_dataset(const std::string& path) {
  auto in = open_input(path);
  return load_dataset(in);
}

std::string read_magic(const std::string& path) {
  auto in = open_input(path);
  char magic[4] = {};
  in.read(magic, 4);
  return std::string(magic, static_cast<std::size_t>(in.gcount()));
}

}  // namespace cdl
