#include "qnn/dataprep.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

#include "qnn/error.hpp"
#include "qnn/format.hpp"
#include "qnn/rng.hpp"

namespace qnn {

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    std::string_view f = line.substr(start, comma == std::string_view::npos ? line.npos : comma - start);
    while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) f.remove_prefix(1);
    while (!f.empty() && (f.back() == ' ' || f.back() == '\t' || f.back() == '\r')) f.remove_suffix(1);
    out.push_back(f);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <class T>
bool parse_field(std::string_view f, T& out) {
  const auto* end = f.data() + f.size();
  auto [ptr, ec] = std::from_chars(f.data(), end, out);
  return ec == std::errc() && ptr == end && !f.empty();
}

bool blank(const std::string& line) {
  return std::all_of(line.begin(), line.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)); });
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(fmt::format("cannot open {}", path));
  return in;
}

}  // namespace

// ---------------------------------------------------------------- loading

RawDataset load_csv(const std::string& path, int width) {
  if (width < 1) throw ValidationError("feature width must be >= 1");
  std::ifstream in = open_input(path);
  RawDataset data;
  data.width = width;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    const auto fields = split_fields(line);
    if (fields.size() != static_cast<std::size_t>(width) + 1)
      throw ValidationError(fmt::format("{}:{}: expected {} fields, found {}", path, line_no,
                                        width + 1, fields.size()));
    std::vector<double> row(width);
    for (int j = 0; j < width; ++j)
      if (!parse_field(fields[j], row[j]) || !std::isfinite(row[j]))
        throw ValidationError(
            fmt::format("{}:{}: field {} is not a number: '{}'", path, line_no, j + 1, fields[j]));
    int label = 0;
    if (!parse_field(fields.back(), label))
      throw ValidationError(
          fmt::format("{}:{}: label is not an integer: '{}'", path, line_no, fields.back()));
    data.features.push_back(std::move(row));
    data.labels.push_back(label);
  }
  if (data.labels.empty()) throw ValidationError(fmt::format("{}: no rows", path));
  return data;
}

RawDataset filter_binary(const RawDataset& data, std::pair<int, int> labels) {
  if (labels.first == labels.second) throw ValidationError("filter_binary needs two distinct labels");
  RawDataset out;
  out.width = data.width;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const int l = data.labels[i];
    if (l != labels.first && l != labels.second) continue;
    out.features.push_back(data.features[i]);
    out.labels.push_back(l == labels.first ? 0 : 1);
  }
  if (out.labels.empty())
    throw ValidationError(
        fmt::format("no rows with labels {} or {}", labels.first, labels.second));
  return out;
}

// ---------------------------------------------------------------- eigen

SymmetricEigen jacobi_eigen(std::vector<double> a, std::size_t n) {
  if (n == 0 || a.size() != n * n) throw ValidationError("jacobi_eigen: matrix is not n x n");
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(a[i * n + j] - a[j * n + i]) > 1e-12 * (1.0 + std::abs(a[i * n + j])))
        throw ValidationError("jacobi_eigen: matrix is not symmetric");

  auto at = [&](std::size_t i, std::size_t j) -> double& { return a[i * n + j]; };
  std::vector<double> v(n * n, 0.0);  // columns are eigenvectors
  for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;

  int sweeps = 0;
  for (; sweeps < 100; ++sweeps) {
    double off = 0.0, diag = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      diag += at(i, i) * at(i, i);
      for (std::size_t j = i + 1; j < n; ++j) off += at(i, j) * at(i, j);
    }
    if (off <= 1e-30 * diag || off == 0.0) break;
    for (std::size_t p = 0; p + 1 < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = at(p, q);
        if (apq == 0.0) continue;
        const double theta = (at(q, q) - at(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        at(p, p) -= t * apq;
        at(q, q) += t * apq;
        at(p, q) = at(q, p) = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
          if (r != p && r != q) {
            const double arp = at(r, p), arq = at(r, q);
            at(r, p) = at(p, r) = c * arp - s * arq;
            at(r, q) = at(q, r) = s * arp + c * arq;
          }
          const double vrp = v[r * n + p], vrq = v[r * n + q];
          v[r * n + p] = c * vrp - s * vrq;
          v[r * n + q] = s * vrp + c * vrq;
        }
      }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return at(x, x) > at(y, y); });
  SymmetricEigen out;
  out.sweeps = sweeps;
  for (std::size_t k : order) {
    out.values.push_back(at(k, k));
    std::vector<double> vec(n);
    std::size_t big = 0;
    for (std::size_t r = 0; r < n; ++r) {
      vec[r] = v[r * n + k];
      if (std::abs(vec[r]) > std::abs(vec[big])) big = r;
    }
    if (vec[big] < 0)
      for (auto& x : vec) x = -x;
    out.vectors.push_back(std::move(vec));
  }
  return out;
}

// ---------------------------------------------------------------- PCA

std::vector<double> ReducedDataset::transform(const std::vector<double>& raw) const {
  if (raw.size() != mean.size())
    throw ValidationError(fmt::format("transform expects {} features, got {}", mean.size(), raw.size()));
  std::vector<double> out(dims());
  for (std::size_t c = 0; c < dims(); ++c) {
    double z = 0.0;
    for (std::size_t j = 0; j < raw.size(); ++j) z += (raw[j] - mean[j]) * basis[c][j];
    out[c] = (z - scale_min[c]) / (scale_max[c] - scale_min[c]) * std::numbers::pi;
  }
  return out;
}

std::vector<double> ReducedDataset::unscale(const std::vector<double>& scaled) const {
  if (scaled.size() != dims()) throw ValidationError("unscale: wrong component count");
  std::vector<double> out(dims());
  for (std::size_t c = 0; c < dims(); ++c)
    out[c] = scale_min[c] + scaled[c] / std::numbers::pi * (scale_max[c] - scale_min[c]);
  return out;
}

double ReducedDataset::explained_variance() const {
  double total = 0.0, top = 0.0;
  for (std::size_t i = 0; i < eigenvalues.size(); ++i) {
    const double v = std::max(eigenvalues[i], 0.0);
    total += v;
    if (i < dims()) top += v;
  }
  return total > 0.0 ? top / total : 0.0;
}

ReducedDataset pca_reduce(const RawDataset& data, int k) {
  const std::size_t n = data.size();
  const std::size_t w = static_cast<std::size_t>(data.width);
  if (k < 1 || static_cast<std::size_t>(k) > w)
    throw ValidationError(fmt::format("component count {} outside [1,{}]", k, w));
  if (n < static_cast<std::size_t>(k) || n < 2)
    throw ValidationError(fmt::format("PCA needs at least max(2, k) rows, got {}", n));
  for (int l : data.labels)
    if (l != 0 && l != 1)
      throw ValidationError("pca_reduce expects labels in {0,1}; run filter_binary first");

  ReducedDataset out;
  out.mean.assign(w, 0.0);
  for (const auto& row : data.features)
    for (std::size_t j = 0; j < w; ++j) out.mean[j] += row[j];
  for (auto& m : out.mean) m /= static_cast<double>(n);

  std::vector<double> cov(w * w, 0.0);
  std::vector<double> centered(w);
  for (const auto& row : data.features) {
    for (std::size_t j = 0; j < w; ++j) centered[j] = row[j] - out.mean[j];
    for (std::size_t i = 0; i < w; ++i)
      for (std::size_t j = i; j < w; ++j) cov[i * w + j] += centered[i] * centered[j];
  }
  for (std::size_t i = 0; i < w; ++i)
    for (std::size_t j = i; j < w; ++j) {
      cov[i * w + j] /= static_cast<double>(n - 1);
      cov[j * w + i] = cov[i * w + j];
    }

  SymmetricEigen eig = jacobi_eigen(std::move(cov), w);
  const double tol = std::max(1e-12, 1e-10 * std::max(eig.values.front(), 0.0));
  const auto achievable = static_cast<int>(
      std::count_if(eig.values.begin(), eig.values.end(), [&](double v) { return v > tol; }));
  if (achievable < k)
    throw ValidationError(fmt::format(
        "covariance rank {} is below requested k = {}; achievable k is at most {}", achievable, k,
        achievable));

  out.eigenvalues = eig.values;
  out.basis.assign(eig.vectors.begin(), eig.vectors.begin() + k);
  out.scale_min.assign(k, 0.0);
  out.scale_max.assign(k, 0.0);

  std::vector<std::vector<double>> proj(n, std::vector<double>(k));
  for (std::size_t i = 0; i < n; ++i)
    for (int c = 0; c < k; ++c) {
      double z = 0.0;
      for (std::size_t j = 0; j < w; ++j) z += (data.features[i][j] - out.mean[j]) * out.basis[c][j];
      proj[i][c] = z;
    }
  for (int c = 0; c < k; ++c) {
    double lo = proj[0][c], hi = proj[0][c];
    for (const auto& p : proj) {
      lo = std::min(lo, p[c]);
      hi = std::max(hi, p[c]);
    }
    if (!(hi > lo)) throw ValidationError(fmt::format("component {} has zero range", c + 1));
    out.scale_min[c] = lo;
    out.scale_max[c] = hi;
  }
  for (auto& p : proj)
    for (int c = 0; c < k; ++c)
      p[c] = std::clamp((p[c] - out.scale_min[c]) / (out.scale_max[c] - out.scale_min[c]), 0.0, 1.0) *
             std::numbers::pi;
  out.features = std::move(proj);
  out.labels = data.labels;
  return out;
}

// ---------------------------------------------------------------- split

std::pair<ReducedDataset, ReducedDataset> split(const ReducedDataset& data, std::size_t n_train,
                                                std::size_t n_test, std::uint64_t seed) {
  if (n_train + n_test > data.size())
    throw ValidationError(fmt::format("split of {} + {} rows requested from {}", n_train, n_test,
                                      data.size()));
  if (n_train == 0) throw ValidationError("training split is empty");
  std::vector<std::size_t> perm(data.size());
  std::iota(perm.begin(), perm.end(), 0);
  RngStream rng(seed);
  for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);

  auto take = [&](std::size_t from, std::size_t count) {
    ReducedDataset part = data;
    part.features.clear();
    part.labels.clear();
    for (std::size_t i = from; i < from + count; ++i) {
      part.features.push_back(data.features[perm[i]]);
      part.labels.push_back(data.labels[perm[i]]);
    }
    return part;
  };
  return {take(0, n_train), take(n_train, n_test)};
}

// ---------------------------------------------------------------- synthetic

RawDataset synthesize(std::size_t n, std::uint64_t seed, double separation) {
  if (n < 2) throw ValidationError("synthesize needs n >= 2");
  constexpr int kWidth = 64;
  constexpr double kSd = 2.0;
  RngStream dir_rng = RngStream::derived(seed, {0});
  std::vector<double> dir(kWidth);
  double norm = 0.0;
  for (auto& d : dir) {
    d = dir_rng.normal();
    norm += d * d;
  }
  for (auto& d : dir) d /= std::sqrt(norm);

  RngStream rng = RngStream::derived(seed, {1});
  RawDataset data;
  data.width = kWidth;
  for (std::size_t i = 0; i < n; ++i) {
    const int label = rng.bernoulli(0.5) ? 1 : 0;
    const double offset = (label == 1 ? 0.5 : -0.5) * separation * kSd;
    std::vector<double> row(kWidth);
    for (int j = 0; j < kWidth; ++j)
      row[j] = std::clamp(8.0 + offset * dir[j] + kSd * rng.normal(), 0.0, 16.0);
    data.features.push_back(std::move(row));
    data.labels.push_back(label);
  }
  return data;
}

// ---------------------------------------------------------------- reduced CSV

void write_reduced_csv(const ReducedDataset& data, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError(fmt::format("cannot write {}", path));
  const std::size_t k = data.features.empty() ? 0 : data.features.front().size();
  for (std::size_t c = 0; c < k; ++c) out << 'f' << c + 1 << ',';
  out << "label\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (double v : data.features[i]) out << num(v) << ',';
    out << data.labels[i] << '\n';
  }
}

ReducedDataset read_reduced_csv(const std::string& path) {
  std::ifstream in = open_input(path);
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(fmt::format("{}: no rows", path));
  const std::size_t width = split_fields(line).size();
  if (width < 2 || split_fields(line).back() != "label")
    throw ValidationError(fmt::format("{}:1: expected header f1,...,label", path));
  ReducedDataset data;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    const auto fields = split_fields(line);
    if (fields.size() != width)
      throw ValidationError(fmt::format("{}:{}: expected {} fields, found {}", path, line_no, width,
                                        fields.size()));
    std::vector<double> row(width - 1);
    for (std::size_t j = 0; j + 1 < width; ++j)
      if (!parse_field(fields[j], row[j]))
        throw ValidationError(fmt::format("{}:{}: field {} is not a number", path, line_no, j + 1));
    int label = 0;
    if (!parse_field(fields.back(), label) || (label != 0 && label != 1))
      throw ValidationError(fmt::format("{}:{}: label must be 0 or 1", path, line_no));
    data.features.push_back(std::move(row));
    data.labels.push_back(label);
  }
  if (data.labels.empty()) throw ValidationError(fmt::format("{}: no rows", path));
  return data;
}

}  // namespace qnn
