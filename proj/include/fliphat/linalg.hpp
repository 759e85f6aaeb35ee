#pragma once

// Dense vectors, row-major design matrices and the sparse-support utilities
// used by the hard-thresholding estimator: scalar/vector clipping, exact
// top-s magnitude selection and Euclidean projection onto an L1 ball.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace fliphat {

namespace detail {
inline void require_finite(std::span<const double> xs, const char* what) {
    for (double x : xs) {
        if (!std::isfinite(x)) {
            throw std::invalid_argument(std::string(what) + ": non-finite entry");
        }
    }
}
}  // namespace detail

/// Fixed-length real vector; constructors reject NaN/Inf.
class DenseVector {
  public:
    explicit DenseVector(std::size_t dim) : values_(dim, 0.0) {}

    explicit DenseVector(std::vector<double> values) : values_(std::move(values)) {
        detail::require_finite(values_, "DenseVector");
    }

    DenseVector(std::initializer_list<double> values)
        : DenseVector(std::vector<double>(values)) {}

    std::size_t size() const { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }
    double& operator[](std::size_t i) { return values_[i]; }
    const double* data() const { return values_.data(); }
    double* data() { return values_.data(); }
    auto begin() const { return values_.begin(); }
    auto end() const { return values_.end(); }
    const std::vector<double>& values() const { return values_; }

    bool operator==(const DenseVector&) const = default;

  private:
    std::vector<double> values_;
};

/// n x d row-major matrix of observations, one row per sample.
class DesignMatrix {
  public:
    DesignMatrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), entries_(rows * cols, 0.0) {
        if (cols == 0) throw std::invalid_argument("DesignMatrix: cols must be >= 1");
    }

    DesignMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
        : rows_(rows), cols_(cols), entries_(std::move(entries)) {
        if (cols == 0) throw std::invalid_argument("DesignMatrix: cols must be >= 1");
        if (entries_.size() != rows * cols) {
            throw std::invalid_argument("DesignMatrix: entry count mismatch");
        }
        detail::require_finite(entries_, "DesignMatrix");
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    std::span<const double> row(std::size_t i) const {
        return {entries_.data() + i * cols_, cols_};
    }
    std::span<double> row(std::size_t i) {
        return {entries_.data() + i * cols_, cols_};
    }

    double operator()(std::size_t i, std::size_t j) const { return entries_[i * cols_ + j]; }
    double& operator()(std::size_t i, std::size_t j) { return entries_[i * cols_ + j]; }

  private:
    std::size_t rows_;
    std::size_t cols_;
    std::vector<double> entries_;
};

/// Strictly increasing set of column indices, all in [0, d).
class SparseSupport {
  public:
    SparseSupport() = default;

    explicit SparseSupport(std::vector<std::size_t> indices) : indices_(std::move(indices)) {
        if (!std::is_sorted(indices_.begin(), indices_.end()) ||
            std::adjacent_find(indices_.begin(), indices_.end()) != indices_.end()) {
            throw std::invalid_argument("SparseSupport: indices must be strictly increasing");
        }
    }

    std::size_t size() const { return indices_.size(); }
    bool empty() const { return indices_.empty(); }
    bool contains(std::size_t j) const {
        return std::binary_search(indices_.begin(), indices_.end(), j);
    }
    const std::vector<std::size_t>& indices() const { return indices_; }
    auto begin() const { return indices_.begin(); }
    auto end() const { return indices_.end(); }

    bool operator==(const SparseSupport&) const = default;

  private:
    std::vector<std::size_t> indices_;
};

/// clip_R(z) = z * min(1, R/|z|), with clip of 0 defined as 0.
inline double clip_scalar(double z, double radius) {
    if (z > radius) return radius;
    if (z < -radius) return -radius;
    return z;
}

inline std::vector<double> clip_vector(std::span<const double> y, double radius) {
    std::vector<double> out(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) out[i] = clip_scalar(y[i], radius);
    return out;
}

inline double l1_norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += std::abs(x);
    return s;
}

inline double l2_norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

inline double linf_norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s = std::max(s, std::abs(x));
    return s;
}

inline std::size_t l0_norm(std::span<const double> v) {
    std::size_t k = 0;
    for (double x : v) k += (x != 0.0);
    return k;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

/// Euclidean projection onto { w : ||w||_1 <= C }, exact sort-based method:
/// sort |v| descending, find the largest k with v_(k) > (sum_{j<=k} v_(j) - C)/k,
/// soft-threshold at that level. Inputs already inside the ball pass through
/// untouched.
inline DenseVector project_l1(const DenseVector& v, double radius) {
    if (!(radius > 0.0)) throw std::invalid_argument("project_l1: C must be > 0");
    if (l1_norm(v.values()) <= radius) return v;

    std::vector<double> mags(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) mags[i] = std::abs(v[i]);
    std::sort(mags.begin(), mags.end(), std::greater<>());

    double running = 0.0;
    double theta = 0.0;
    for (std::size_t k = 0; k < mags.size(); ++k) {
        running += mags[k];
        double candidate = (running - radius) / static_cast<double>(k + 1);
        if (mags[k] - candidate > 0.0) {
            theta = candidate;
        } else {
            break;
        }
    }

    DenseVector out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        double shrunk = std::abs(v[i]) - theta;
        out[i] = shrunk > 0.0 ? std::copysign(shrunk, v[i]) : 0.0;
    }
    return out;
}

/// Indices of the s largest magnitudes, ties broken by lowest index.
inline SparseSupport exact_top_s(const DenseVector& v, std::size_t s) {
    if (s < 1 || s > v.size()) throw std::invalid_argument("exact_top_s: s out of range");

    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::partial_sort(order.begin(), order.begin() + s, order.end(),
                      [&](std::size_t a, std::size_t b) {
                          double ma = std::abs(v[a]);
                          double mb = std::abs(v[b]);
                          if (ma != mb) return ma > mb;
                          return a < b;
                      });
    order.resize(s);
    std::sort(order.begin(), order.end());
    return SparseSupport(std::move(order));
}

/// v restricted to S: matches v on S, exactly 0 elsewhere.
inline DenseVector restrict_to_support(const DenseVector& v, const SparseSupport& support) {
    DenseVector out(v.size());
    for (std::size_t j : support) {
        if (j >= v.size()) throw std::invalid_argument("restrict_to_support: index out of range");
        out[j] = v[j];
    }
    return out;
}

}  // namespace fliphat
