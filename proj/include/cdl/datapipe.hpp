#pragma once

#include <cdl/types.hpp>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace cdl {

// Row-major grayscale image with intensities in [0, 1].
struct Image {
  int width = 0;
  int height = 0;
  std::vector<double> samples;

  double at(int row, int col) const { return samples[static_cast<std::size_t>(row) * width + col]; }
  double& at(int row, int col) { return samples[static_cast<std::size_t>(row) * width + col]; }
};

// Binary PGM (P5, maxval 255).
Image read_pgm(std::istream& in);
Image read_pgm(const std::string& path);
void write_pgm(const Image& image, std::ostream& out);
void write_pgm(const Image& image, const std::string& path);

// Sliding-window patches, enumerated left-to-right then top-to-bottom,
// each vectorized row-major. Throws std::invalid_argument if the image is
// smaller than the patch or stride < 1.
Dataset extract_patches(const Image& image, int size, int stride);

// Subtracts each column's mean and records it in `means`.
Dataset mean_center(const Dataset& data);

// Separable Gaussian convolution, kernel radius ceil(3*sigma), kernel
// normalized to sum 1, borders replicated.
Image gaussian_blur(const Image& image, double sigma);

// Overcomplete 2-D DCT dictionary: outer products of sqrt(natoms) 1-D
// DCT-II vectors of length sqrt(dim); non-DC columns are mean-removed and
// every column is normalized. dim and natoms must be perfect squares with
// natoms >= dim.
Dictionary dct_dictionary(Index dim, Index natoms);

bool dct_compatible(Index dim, Index natoms);

// Ground-truth generator for recovery tests: two random unit-norm
// dictionaries sharing one sparse code (shared supports and values), with
// noiseless data X_i = D_i * code.
struct SynthCoupled {
  Dataset data1;
  Dataset data2;
  Dictionary dict1;
  Dictionary dict2;
  SparseCode code;
};

SynthCoupled synth_coupled(Index dim, Index natoms, Index nsignals, int sparsity,
                           std::uint64_t seed);

}  // namespace cdl
