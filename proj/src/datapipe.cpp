#include <cdl/datapipe.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>

namespace cdl {

namespace {

// Reads one whitespace-delimited token, skipping '#' comments.
std::string next_pgm_token(std::istream& in) {
  std::string token;
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (!std::isspace(c)) {
      break;
    }
    c = in.get();
  }
  while (c != EOF && !std::isspace(c) && c != '#') {
    token.push_back(static_cast<char>(c));
    c = in.get();
  }
  if (c == '#') in.unget();
  return token;
}

int parse_pgm_int(std::istream& in, const char* what) {
  const std::string token = next_pgm_token(in);
  if (token.empty() || !std::all_of(token.begin(), token.end(),
                                    [](unsigned char ch) { return std::isdigit(ch); })) {
    throw std::runtime_error(std::string("pgm: bad ") + what);
  }
  return std::stoi(token);
}

}  // namespace

Image read_pgm(std::istream& in) {
  if (next_pgm_token(in) != "P5") throw std::runtime_error("pgm: not a P5 file");
  Image image;
  image.width = parse_pgm_int(in, "width");
  image.height = parse_pgm_int(in, "height");
  const int maxval = parse_pgm_int(in, "maxval");
  if (image.width < 1 || image.height < 1) throw std::runtime_error("pgm: bad dimensions");
  if (maxval < 1 || maxval > 255) throw std::runtime_error("pgm: unsupported maxval");
  // The single whitespace byte ending the header was consumed with the
  // maxval token; the raster starts right here.
  const std::size_t npixels = static_cast<std::size_t>(image.width) * image.height;
  std::vector<unsigned char> raw(npixels);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(npixels));
  if (static_cast<std::size_t>(in.gcount()) != npixels) {
    throw std::runtime_error("pgm: truncated raster");
  }
  image.samples.resize(npixels);
  for (std::size_t i = 0; i < npixels; ++i) image.samples[i] = raw[i] / double(maxval);
  return image;
}

Image read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("pgm: cannot open " + path);
  return read_pgm(in);
}

void write_pgm(const Image& image, std::ostream& out) {
  out << "P5\n" << image.width << " " << image.height << "\n255\n";
  std::vector<unsigned char> raw(image.samples.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const double v = std::clamp(image.samples[i], 0.0, 1.0);
    raw[i] = static_cast<unsigned char>(std::lround(v * 255.0));
  }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) throw std::runtime_error("pgm: write failed");
}

void write_pgm(const Image& image, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("pgm: cannot open " + path);
  write_pgm(image, out);
}

Dataset extract_patches(const Image& image, int size, int stride) {
  if (size < 1 || stride < 1) throw std::invalid_argument("extract_patches: bad size/stride");
  if (image.width < size || image.height < size) {
    throw std::invalid_argument("extract_patches: image smaller than patch");
  }
  const int rows = (image.height - size) / stride + 1;
  const int cols = (image.width - size) / stride + 1;
  Dataset out;
  out.signals.resize(static_cast<Index>(size) * size, static_cast<Index>(rows) * cols);
  Index col = 0;
  for (int pr = 0; pr < rows; ++pr) {
    for (int pc = 0; pc < cols; ++pc, ++col) {
      const int r0 = pr * stride;
      const int c0 = pc * stride;
      for (int r = 0; r < size; ++r) {
        for (int c = 0; c < size; ++c) {
          out.signals(static_cast<Index>(r) * size + c, col) = image.at(r0 + r, c0 + c);
        }
      }
    }
  }
  return out;
}

Dataset mean_center(const Dataset& data) {
  Dataset out;
  out.signals = data.signals;
  out.means.resize(static_cast<std::size_t>(data.count()));
  for (Index i = 0; i < data.count(); ++i) {
    const double mean = data.signals.col(i).mean();
    out.signals.col(i).array() -= mean;
    out.means[static_cast<std::size_t>(i)] = mean;
  }
  return out;
}

Image gaussian_blur(const Image& image, double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("gaussian_blur: sigma must be positive");
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  for (int i = -radius; i <= radius; ++i) {
    kernel[static_cast<std::size_t>(i + radius)] = std::exp(-(i * i) / (2.0 * sigma * sigma));
  }
  const double total = std::accumulate(kernel.begin(), kernel.end(), 0.0);
  for (double& w : kernel) w /= total;

  const auto clampi = [](int v, int hi) { return std::clamp(v, 0, hi); };
  Image horizontal = image;
  for (int r = 0; r < image.height; ++r) {
    for (int c = 0; c < image.width; ++c) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) {
        acc += kernel[static_cast<std::size_t>(i + radius)] *
               image.at(r, clampi(c + i, image.width - 1));
      }
      horizontal.at(r, c) = acc;
    }
  }
  Image out = horizontal;
  for (int r = 0; r < image.height; ++r) {
    for (int c = 0; c < image.width; ++c) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) {
        acc += kernel[static_cast<std::size_t>(i + radius)] *
               horizontal.at(clampi(r + i, image.height - 1), c);
      }
      out.at(r, c) = acc;
    }
  }
  return out;
}

namespace {

Index integer_sqrt(Index v) {
  const auto root = static_cast<Index>(std::lround(std::sqrt(double(v))));
  return root * root == v ? root : -1;
}

}  // namespace

bool dct_compatible(Index dim, Index natoms) {
  return dim > 0 && natoms >= dim && integer_sqrt(dim) > 0 && integer_sqrt(natoms) > 0;
}

Dictionary dct_dictionary(Index dim, Index natoms) {
  if (!dct_compatible(dim, natoms)) {
    throw std::invalid_argument("dct_dictionary: dim and natoms must be perfect squares, natoms >= dim");
  }
  const Index p = integer_sqrt(dim);
  const Index q = integer_sqrt(natoms);

  // 1-D bank: q sampled DCT-II vectors of length p; AC vectors are
  // mean-removed so every non-DC atom is orthogonal to the constant one.
  Matrix bank(p, q);
  bank.col(0).setConstant(1.0 / std::sqrt(double(p)));
  for (Index k = 1; k < q; ++k) {
    for (Index i = 0; i < p; ++i) {
      bank(i, k) = std::cos(M_PI * (2.0 * i + 1.0) * k / (2.0 * q));
    }
    bank.col(k).array() -= bank.col(k).mean();
    bank.col(k).normalize();
  }

  Dictionary dict;
  dict.atoms.resize(dim, natoms);
  for (Index a = 0; a < q; ++a) {
    for (Index b = 0; b < q; ++b) {
      // Row-major vectorization of bank.col(a) * bank.col(b)^T.
      for (Index r = 0; r < p; ++r) {
        for (Index c = 0; c < p; ++c) {
          dict.atoms(r * p + c, a * q + b) = bank(r, a) * bank(c, b);
        }
      }
    }
  }
  for (Index j = 0; j < natoms; ++j) dict.atoms.col(j).normalize();
  return dict;
}

SynthCoupled synth_coupled(Index dim, Index natoms, Index nsignals, int sparsity,
                           std::uint64_t seed) {
  if (dim < 1 || natoms < 1 || nsignals < 1) throw std::invalid_argument("synth_coupled: bad sizes");
  if (sparsity < 1 || sparsity > natoms) throw std::invalid_argument("synth_coupled: bad sparsity");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const auto random_dictionary = [&]() {
    Dictionary d;
    d.atoms.resize(dim, natoms);
    for (Index j = 0; j < natoms; ++j) {
      for (Index i = 0; i < dim; ++i) d.atoms(i, j) = gauss(rng);
      d.atoms.col(j).normalize();
    }
    return d;
  };

  SynthCoupled out;
  out.dict1 = random_dictionary();
  out.dict2 = random_dictionary();

  out.code.natoms = static_cast<std::uint32_t>(natoms);
  out.code.columns.resize(static_cast<std::size_t>(nsignals));
  std::vector<Index> pool(static_cast<std::size_t>(natoms));
  std::iota(pool.begin(), pool.end(), Index(0));
  std::uniform_real_distribution<double> magnitude(0.5, 1.5);
  for (auto& column : out.code.columns) {
    // Distinct support: draw the first `sparsity` entries of a partial shuffle.
    for (int k = 0; k < sparsity; ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, pool.size() - 1);
      std::swap(pool[static_cast<std::size_t>(k)], pool[pick(rng)]);
    }
    std::sort(pool.begin(), pool.begin() + sparsity);
    column.reserve(static_cast<std::size_t>(sparsity));
    for (int k = 0; k < sparsity; ++k) {
      const double sign = (rng() & 1u) ? 1.0 : -1.0;
      column.push_back({static_cast<std::uint32_t>(pool[static_cast<std::size_t>(k)]),
                        sign * magnitude(rng)});
    }
  }

  out.data1.signals = reconstruct(out.dict1, out.code);
  out.data2.signals = reconstruct(out.dict2, out.code);
  return out;
}

}  // namespace cdl
