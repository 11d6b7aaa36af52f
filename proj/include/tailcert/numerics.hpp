#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tailcert/error.hpp"

namespace tailcert {

using Vector = std::vector<double>;

// ---------------------------------------------------------------------------
// Vector helpers
// ---------------------------------------------------------------------------

inline double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(std::span<const double> a) {
  double s = 0.0;
  for (double v : a) s += v * v;
  return std::sqrt(s);
}

inline Vector subtract(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("subtract: length mismatch");
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

inline double distance2(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("distance2: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

inline bool all_finite(std::span<const double> a) {
  return std::all_of(a.begin(), a.end(), [](double v) { return std::isfinite(v); });
}

// ---------------------------------------------------------------------------
// Matrix
// ---------------------------------------------------------------------------

/// Dense row-major matrix of finite doubles. Dimensions are positive except for
/// the default-constructed placeholder.
class Matrix {
 public:
  Matrix() = default;

  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {
    check_shape();
    if (!std::isfinite(fill)) throw DomainError("Matrix: non-finite fill value");
  }

  Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
      : rows_(rows), cols_(cols), data_(std::move(entries)) {
    check_shape();
    if (data_.size() != rows_ * cols_)
      throw ShapeError("Matrix: entries.size() != rows * cols");
    for (std::size_t i = 0; i < data_.size(); ++i)
      if (!std::isfinite(data_[i]))
        throw DomainError("Matrix: non-finite entry at flat index " + std::to_string(i));
  }

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.begin()->size();
    std::vector<double> entries;
    entries.reserve(r * c);
    for (const auto& row : rows) {
      if (row.size() != c) throw ShapeError("Matrix::from_rows: ragged rows");
      entries.insert(entries.end(), row.begin(), row.end());
    }
    return Matrix(r, c, std::move(entries));
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  static Matrix diagonal(std::span<const double> d) {
    Matrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }
  bool square() const noexcept { return rows_ == cols_; }

  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }

  std::span<const double> entries() const noexcept { return data_; }
  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(data_).subspan(i * cols_, cols_);
  }

  /// y = M x
  Vector multiply(std::span<const double> x) const {
    if (x.size() != cols_) throw ShapeError("Matrix::multiply: dimension mismatch");
    Vector y(rows_, 0.0);
    for (std::size_t i = 0; i < rows_; ++i) {
      const double* r = data_.data() + i * cols_;
      double s = 0.0;
      for (std::size_t j = 0; j < cols_; ++j) s += r[j] * x[j];
      y[i] = s;
    }
    return y;
  }

  /// y = Mᵀ x
  Vector multiply_transposed(std::span<const double> x) const {
    if (x.size() != rows_) throw ShapeError("Matrix::multiply_transposed: dimension mismatch");
    Vector y(cols_, 0.0);
    for (std::size_t i = 0; i < rows_; ++i) {
      const double* r = data_.data() + i * cols_;
      const double xi = x[i];
      for (std::size_t j = 0; j < cols_; ++j) y[j] += r[j] * xi;
    }
    return y;
  }

  Matrix transposed() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  Matrix scaled(double s) const {
    std::vector<double> e(data_);
    for (double& v : e) v *= s;
    return Matrix(rows_, cols_, std::move(e));
  }

  /// A·B
  Matrix matmul(const Matrix& b) const {
    if (cols_ != b.rows_) throw ShapeError("Matrix::matmul: dimension mismatch");
    Matrix out(rows_, b.cols_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t k = 0; k < cols_; ++k) {
        const double a = (*this)(i, k);
        if (a == 0.0) continue;
        for (std::size_t j = 0; j < b.cols_; ++j) out(i, j) += a * b(k, j);
      }
    return out;
  }

  double max_abs() const noexcept {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
  }

  bool is_lower_triangular() const noexcept {
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = i + 1; j < cols_; ++j)
        if ((*this)(i, j) != 0.0) return false;
    return true;
  }

  bool is_diagonal() const noexcept {
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j)
        if (i != j && (*this)(i, j) != 0.0) return false;
    return true;
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  void check_shape() const {
    if (rows_ == 0 || cols_ == 0) throw ShapeError("Matrix: rows and cols must be positive");
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// ---------------------------------------------------------------------------
// Seeded randomness
// ---------------------------------------------------------------------------

/// A reproducible random stream identified by (seed, stream_id).
///
/// The engine is std::mt19937_64 seeded through std::seed_seq with the four
/// 32-bit halves of (seed, stream_id); the engine and seed_seq algorithms are
/// fully specified by the C++ standard. Distribution transforms come from the
/// standard library and are stable for a given toolchain build.
class RngStream {
 public:
  static constexpr std::string_view kAlgorithm =
      "mt19937_64+seed_seq(seed_lo,seed_hi,stream_lo,stream_hi)/libstdc++-distributions v1";

  RngStream(std::uint64_t seed, std::uint64_t stream_id) : seed_(seed), stream_id_(stream_id) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream_id),
                      static_cast<std::uint32_t>(stream_id >> 32)};
    engine_.seed(seq);
  }

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  /// A child stream with the same seed and a derived stream id.
  RngStream substream(std::uint64_t child) const {
    return RngStream(seed_, splitmix(stream_id_ ^ splitmix(child + 0x9e3779b97f4a7c15ULL)));
  }

  double normal() { return normal_(engine_); }

  /// Uniform on [0, 1).
  double uniform() { return std::generate_canonical<double, 53>(engine_); }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double chi_squared(double dof) { return std::chi_squared_distribution<double>(dof)(engine_); }

  std::uint64_t next_u64() { return engine_(); }

  Vector normal_vector(std::size_t n) {
    Vector v(n);
    for (double& x : v) x = normal();
    return v;
  }

  /// Uniformly distributed unit vector in R^n.
  Vector unit_vector(std::size_t n) {
    for (;;) {
      Vector v = normal_vector(n);
      const double r = norm2(v);
      if (r > 0.0) {
        for (double& x : v) x /= r;
        return v;
      }
    }
  }

 private:
  static std::uint64_t splitmix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

// ---------------------------------------------------------------------------
// Norms and factorizations
// ---------------------------------------------------------------------------

inline double frobenius_norm(const Matrix& m) {
  if (m.empty()) throw ShapeError("frobenius_norm: empty matrix");
  // Scaled accumulation so large entries do not overflow.
  const double scale = m.max_abs();
  if (scale == 0.0) return 0.0;
  double s = 0.0;
  for (double v : m.entries()) {
    const double r = v / scale;
    s += r * r;
  }
  return scale * std::sqrt(s);
}

namespace detail {

struct PowerRun {
  double estimate = 0.0;
  bool stagnated = false;
};

// Power iteration on AᵀA for a matrix already scaled to max|a_ij| == 1.
inline PowerRun power_run(const Matrix& a, Vector v, double tol, std::size_t max_iters) {
  double nv = norm2(v);
  for (double& x : v) x /= nv;
  for (std::size_t it = 0; it < max_iters; ++it) {
    Vector w = a.multiply(v);
    const double sigma = norm2(w);
    if (sigma == 0.0) return {0.0, true};
    Vector u = a.multiply_transposed(w);
    const double lambda = sigma * sigma;  // Rayleigh quotient vᵀAᵀAv
    double residual = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j) {
      const double r = u[j] - lambda * v[j];
      residual += r * r;
    }
    residual = std::sqrt(residual);
    // Some eigenvalue of AᵀA lies within `residual` of lambda.
    if (residual <= tol * lambda) return {sigma, false};
    const double nu = norm2(u);
    if (nu == 0.0) return {sigma, true};
    for (std::size_t j = 0; j < u.size(); ++j) v[j] = u[j] / nu;
    if (it + 1 == max_iters)
      throw ConvergenceError("spectral_norm: power iteration did not converge", sigma, v,
                             max_iters);
  }
  throw ConvergenceError("spectral_norm: max_iters must be positive", 0.0, v, 0);
}

}  // namespace detail

/// Dominant singular value of `m` by power iteration on mᵀm.
///
/// Starts from the normalized all-ones vector and from one seeded random
/// vector; the larger estimate is returned. Each run stops once the
/// eigen-residual ‖mᵀm v − λv‖ is at most tol·λ, which puts the estimate within
/// tol/2 relative of a singular value. Throws ConvergenceError carrying the
/// last iterate otherwise.
inline double spectral_norm(const Matrix& m, double tol = 1e-9, std::size_t max_iters = 100000) {
  if (m.empty()) throw ShapeError("spectral_norm: empty matrix");
  if (!(tol > 0.0)) throw DomainError("spectral_norm: tol must be positive");
  const double scale = m.max_abs();
  if (scale == 0.0) return 0.0;
  const Matrix a = m.scaled(1.0 / scale);

  detail::PowerRun ones = detail::power_run(a, Vector(a.cols(), 1.0), tol, max_iters);

  RngStream rng(0x5eedULL, (static_cast<std::uint64_t>(a.rows()) << 32) ^ a.cols());
  detail::PowerRun random = detail::power_run(a, rng.unit_vector(a.cols()), tol, max_iters);
  if (random.stagnated) {
    // Start vector landed in the null space; one more seeded restart.
    random = detail::power_run(a, rng.unit_vector(a.cols()), tol, max_iters);
  }
  return scale * std::max(ones.estimate, random.estimate);
}

/// Operator-norm bound used on every certificate path:
/// min(spectral estimate inflated by (1 + tol), Frobenius norm).
inline double safe_operator_norm(const Matrix& m, double tol = 1e-9,
                                 std::size_t max_iters = 100000) {
  return std::min(spectral_norm(m, tol, max_iters) * (1.0 + tol), frobenius_norm(m));
}

/// Lower-triangular L with L Lᵀ = sigma.
inline Matrix cholesky(const Matrix& sigma) {
  if (sigma.empty() || !sigma.square()) throw ShapeError("cholesky: matrix must be square");
  const std::size_t n = sigma.rows();
  const double scale = sigma.max_abs();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(sigma(i, j) - sigma(j, i)) > 1e-10 * scale)
        throw DomainError("cholesky: matrix not symmetric at (" + std::to_string(i) + "," +
                          std::to_string(j) + ")");
  double max_diag = 0.0;
  for (std::size_t i = 0; i < n; ++i) max_diag = std::max(max_diag, sigma(i, i));
  const double pivot_floor = 1e-12 * max_diag;

  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = sigma(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > pivot_floor) || max_diag <= 0.0)
      throw DefinitenessError("cholesky: matrix not positive definite at pivot " +
                                  std::to_string(j),
                              j);
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      // Read the lower triangle; symmetry was checked above.
      double s = sigma(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / ljj;
    }
  }
  return l;
}

/// y = L x for lower-triangular L, skipping the zero upper part.
inline Vector lower_triangular_multiply(const Matrix& l, std::span<const double> x) {
  const std::size_t n = l.rows();
  if (x.size() != l.cols()) throw ShapeError("lower_triangular_multiply: dimension mismatch");
  Vector y(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k <= i; ++k) s += l(i, k) * x[k];
    y[i] = s;
  }
  return y;
}

}  // namespace tailcert
