#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "osd/core.hpp"

namespace osd {

/// Thrown when a vector has no direction (zero norm), e.g. the mean of two
/// antipodal embeddings.
class DegenerateVector : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("dimension mismatch: " +
                                std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double l2_norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

/// Result is clamped to [-1, 1]; either argument may have any nonzero scale.
inline double cosine_similarity(std::span<const double> a,
                                std::span<const double> b) {
  const double ab = dot(a, b);
  const double na = l2_norm(a);
  const double nb = l2_norm(b);
  if (!(na > 0.0) || !(nb > 0.0)) {
    throw DegenerateVector("cosine similarity of a zero vector");
  }
  return std::clamp(ab / (na * nb), -1.0, 1.0);
}

inline double cosine_distance(std::span<const double> a,
                              std::span<const double> b) {
  return 1.0 - cosine_similarity(a, b);
}

inline double cosine_similarity(const Embedding& a, const Embedding& b) {
  return cosine_similarity(a.values(), b.values());
}
inline double cosine_distance(const Embedding& a, const Embedding& b) {
  return cosine_distance(a.values(), b.values());
}

/// Dense symmetric n x n matrix of cosine distances, row-major.
class DistanceMatrix {
 public:
  DistanceMatrix() = default;
  explicit DistanceMatrix(std::size_t n) : n_(n), d_(n * n, 0.0) {}

  std::size_t size() const { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return d_[i * n_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return d_[i * n_ + j]; }

  /// Sets both (i, j) and (j, i).
  void set(std::size_t i, std::size_t j, double v) {
    d_[i * n_ + j] = v;
    d_[j * n_ + i] = v;
  }

  bool is_symmetric(double tol = 1e-9) const {
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = i + 1; j < n_; ++j) {
        if (std::abs((*this)(i, j) - (*this)(j, i)) > tol) return false;
      }
    }
    return true;
  }

 private:
  std::size_t n_ = 0;
  std::vector<double> d_;
};

inline DistanceMatrix pairwise_distances(std::span<const Embedding> embs) {
  if (embs.empty()) {
    throw std::invalid_argument("pairwise_distances: empty input");
  }
  const std::size_t n = embs.size();
  DistanceMatrix m(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (embs[i].dim() != embs[0].dim()) {
      throw std::invalid_argument("pairwise_distances: inconsistent dimension");
    }
    for (std::size_t j = i + 1; j < n; ++j) {
      m.set(i, j, cosine_distance(embs[i], embs[j]));
    }
  }
  return m;
}

/// Sum(w_i * v_i) / Sum(w_i), componentwise. The result is not renormalized.
inline Vector weighted_mean(std::span<const std::span<const double>> vectors,
                            std::span<const double> weights) {
  if (vectors.empty() || vectors.size() != weights.size()) {
    throw std::invalid_argument("weighted_mean: vectors/weights length mismatch");
  }
  const std::size_t dim = vectors[0].size();
  Vector out(dim, 0.0);
  double total = 0.0;
  for (std::size_t k = 0; k < vectors.size(); ++k) {
    if (!(weights[k] > 0.0)) {
      throw std::invalid_argument("weighted_mean: weights must be positive");
    }
    if (vectors[k].size() != dim) {
      throw std::invalid_argument("weighted_mean: dimension mismatch");
    }
    for (std::size_t i = 0; i < dim; ++i) out[i] += weights[k] * vectors[k][i];
    total += weights[k];
  }
  for (double& x : out) x /= total;
  return out;
}

/// Two-vector convenience overload used by the buffers.
inline Vector weighted_mean(std::span<const double> a, double wa,
                            std::span<const double> b, double wb) {
  const std::span<const double> vs[] = {a, b};
  const double ws[] = {wa, wb};
  return weighted_mean(vs, ws);
}

}  // namespace osd
