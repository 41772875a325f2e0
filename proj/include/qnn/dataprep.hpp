#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace qnn {

/// Rows of `width` real features plus an integer label.
struct RawDataset {
  int width = 64;
  std::vector<std::vector<double>> features;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
};

/// PCA-reduced, min-max scaled rows with labels in {0,1}, plus the fitted
/// transform so new raw rows can be mapped the same way.
struct ReducedDataset {
  std::vector<std::vector<double>> features;
  std::vector<int> labels;

  std::vector<double> mean;                 // raw-space centering vector
  std::vector<std::vector<double>> basis;   // k rows of length width, orthonormal
  std::vector<double> eigenvalues;          // all covariance eigenvalues, descending
  std::vector<double> scale_min, scale_max; // per component, before scaling

  std::size_t size() const { return labels.size(); }
  std::size_t dims() const { return basis.size(); }

  /// Projects a raw row and applies the stored scaling.
  std::vector<double> transform(const std::vector<double>& raw) const;
  /// Inverse of the scaling step: scaled coordinates back to PCA coordinates.
  std::vector<double> unscale(const std::vector<double>& scaled) const;
  /// Fraction of total variance captured by the first k components.
  double explained_variance() const;
};

/// Parses `width` comma-separated numbers followed by an integer label per line.
/// Blank lines are skipped. Errors name the offending line.
RawDataset load_csv(const std::string& path, int width = 64);

/// Keeps rows whose label is labels.first or labels.second, in order, and
/// relabels them 0 and 1 respectively.
RawDataset filter_binary(const RawDataset& data, std::pair<int, int> labels = {0, 1});

struct SymmetricEigen {
  std::vector<double> values;                // descending
  std::vector<std::vector<double>> vectors;  // vectors[i] pairs with values[i]
  int sweeps = 0;
};

/// Cyclic Jacobi eigen-decomposition of a symmetric n x n matrix (row-major).
/// Each eigenvector is signed so its largest-magnitude entry is positive.
SymmetricEigen jacobi_eigen(std::vector<double> a, std::size_t n);

/// Mean-centers, projects on the top-k covariance eigenvectors and scales
/// each component to [0, pi].
ReducedDataset pca_reduce(const RawDataset& data, int k = 3);

/// Seeded uniform permutation, then the first n_train rows train and the
/// next n_test rows test.
std::pair<ReducedDataset, ReducedDataset> split(const ReducedDataset& data, std::size_t n_train,
                                                std::size_t n_test, std::uint64_t seed);

/// Two 64-dimensional Gaussian blobs (sd 2, clamped to [0,16]) whose means sit
/// `separation` standard deviations apart along a seeded random direction.
RawDataset synthesize(std::size_t n, std::uint64_t seed, double separation = 3.0);

/// Writes `f1,...,fk,label` with a header row.
void write_reduced_csv(const ReducedDataset& data, const std::string& path);
/// Reads the format written by write_reduced_csv (features and labels only).
ReducedDataset read_reduced_csv(const std::string& path);

}  // namespace qnn
