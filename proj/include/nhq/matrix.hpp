#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nhq/errors.hpp"

namespace nhq {

using cplx = std::complex<double>;

/// Dense square complex matrix, row-major. Small dimensions only.
///
/// Every operator symbol of the models (H+, Gamma, Omega, rho, Pauli
/// matrices, operator products) is a value of this type.
class ComplexMatrix {
public:
  ComplexMatrix() = default;

  explicit ComplexMatrix(std::size_t dim) : dim_(dim), data_(dim * dim) {
    if (dim == 0) throw InputError("ComplexMatrix: dimension must be >= 1");
  }

  ComplexMatrix(std::size_t dim, std::vector<cplx> entries) : dim_(dim), data_(std::move(entries)) {
    if (dim == 0) throw InputError("ComplexMatrix: dimension must be >= 1");
    if (data_.size() != dim * dim)
      throw InputError("ComplexMatrix: expected " + std::to_string(dim * dim) + " entries, got " +
                       std::to_string(data_.size()));
    if (!is_finite()) throw InputError("ComplexMatrix: non-finite entry");
  }

  static ComplexMatrix from_rows(std::initializer_list<std::initializer_list<cplx>> rows) {
    const std::size_t n = rows.size();
    std::vector<cplx> entries;
    entries.reserve(n * n);
    for (const auto& row : rows) {
      if (row.size() != n) throw InputError("ComplexMatrix::from_rows: matrix must be square");
      entries.insert(entries.end(), row.begin(), row.end());
    }
    return ComplexMatrix(n, std::move(entries));
  }

  static ComplexMatrix identity(std::size_t dim) {
    ComplexMatrix m(dim);
    for (std::size_t i = 0; i < dim; ++i) m(i, i) = 1.0;
    return m;
  }

  static ComplexMatrix zero(std::size_t dim) { return ComplexMatrix(dim); }

  std::size_t dim() const noexcept { return dim_; }
  std::span<const cplx> entries() const noexcept { return data_; }

  cplx& operator()(std::size_t r, std::size_t c) { return data_[r * dim_ + c]; }
  const cplx& operator()(std::size_t r, std::size_t c) const { return data_[r * dim_ + c]; }

  bool is_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(),
                       [](const cplx& z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); });
  }

  cplx trace() const noexcept {
    cplx s = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) s += (*this)(i, i);
    return s;
  }

  ComplexMatrix adjoint() const {
    ComplexMatrix out(dim_);
    for (std::size_t r = 0; r < dim_; ++r)
      for (std::size_t c = 0; c < dim_; ++c) out(c, r) = std::conj((*this)(r, c));
    return out;
  }

  double frobenius_norm() const noexcept {
    double s = 0.0;
    for (const auto& z : data_) s += std::norm(z);
    return std::sqrt(s);
  }

  double max_abs() const noexcept {
    double m = 0.0;
    for (const auto& z : data_) m = std::max(m, std::abs(z));
    return m;
  }

  ComplexMatrix& operator+=(const ComplexMatrix& o) {
    check_same_dim(o, "+=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }

  ComplexMatrix& operator-=(const ComplexMatrix& o) {
    check_same_dim(o, "-=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
  }

  ComplexMatrix& operator*=(cplx s) {
    for (auto& z : data_) z *= s;
    return *this;
  }

  ComplexMatrix& operator/=(cplx s) {
    for (auto& z : data_) z /= s;
    return *this;
  }

  friend ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix& b) { return a += b; }
  friend ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix& b) { return a -= b; }
  friend ComplexMatrix operator-(ComplexMatrix a) { return a *= -1.0; }
  friend ComplexMatrix operator*(ComplexMatrix a, cplx s) { return a *= s; }
  friend ComplexMatrix operator*(cplx s, ComplexMatrix a) { return a *= s; }
  friend ComplexMatrix operator/(ComplexMatrix a, cplx s) { return a /= s; }

  friend ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b) {
    a.check_same_dim(b, "*");
    const std::size_t n = a.dim_;
    ComplexMatrix out(n);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t k = 0; k < n; ++k) {
        const cplx ark = a(r, k);
        for (std::size_t c = 0; c < n; ++c) out(r, c) += ark * b(k, c);
      }
    return out;
  }

  friend bool operator==(const ComplexMatrix&, const ComplexMatrix&) = default;

private:
  void check_same_dim(const ComplexMatrix& o, const char* op) const {
    if (dim_ != o.dim_)
      throw InputError(std::string("ComplexMatrix ") + op + ": dimension mismatch (" + std::to_string(dim_) +
                       " vs " + std::to_string(o.dim_) + ")");
  }

  std::size_t dim_ = 0;
  std::vector<cplx> data_;
};

/// Largest entrywise modulus of a - b.
inline double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b) { return (a - b).max_abs(); }

inline ComplexMatrix commutator(const ComplexMatrix& a, const ComplexMatrix& b) { return a * b - b * a; }

inline ComplexMatrix anticommutator(const ComplexMatrix& a, const ComplexMatrix& b) { return a * b + b * a; }

inline constexpr double kHermitianTolerance = 1e-12;

/// ||a - a^dagger|| <= rel_tol * ||a|| in the Frobenius norm.
inline bool is_hermitian(const ComplexMatrix& a, double rel_tol = kHermitianTolerance) {
  return (a - a.adjoint()).frobenius_norm() <= rel_tol * a.frobenius_norm();
}

namespace pauli {

inline ComplexMatrix identity() { return ComplexMatrix::identity(2); }
inline ComplexMatrix sigma_x() { return ComplexMatrix::from_rows({{0.0, 1.0}, {1.0, 0.0}}); }
inline ComplexMatrix sigma_y() { return ComplexMatrix::from_rows({{0.0, cplx(0, -1)}, {cplx(0, 1), 0.0}}); }
inline ComplexMatrix sigma_z() { return ComplexMatrix::from_rows({{1.0, 0.0}, {0.0, -1.0}}); }

}  // namespace pauli

namespace detail {

// e^a for a = alpha*I + v.sigma. With r^2 = v.v (complex), N = v.sigma satisfies N^2 = r^2 I,
// so e^a = e^alpha (cosh r I + sinh(r)/r N). For |r| >= 1 the spectral form
// e^alpha (e^r P+ + e^-r P-), P± = (I ± N/r)/2, avoids cosh - sinh cancellation.
inline ComplexMatrix expm_2x2(const ComplexMatrix& a) {
  const cplx alpha = 0.5 * (a(0, 0) + a(1, 1));
  const cplx vz = 0.5 * (a(0, 0) - a(1, 1));
  const cplx off_sum = 0.5 * (a(0, 1) + a(1, 0));   // v_x
  const cplx off_diff = 0.5 * (a(1, 0) - a(0, 1));  // i v_y
  // N = [[vz, a01], [a10, -vz]]
  ComplexMatrix n = ComplexMatrix::from_rows({{vz, a(0, 1)}, {a(1, 0), -vz}});
  const cplx r2 = vz * vz + off_sum * off_sum - off_diff * off_diff;
  const cplx r = std::sqrt(r2);
  const cplx scale = std::exp(alpha);
  const ComplexMatrix id = ComplexMatrix::identity(2);

  if (std::abs(r) < 1.0) {
    cplx ch;
    cplx sh_over_r;
    if (std::abs(r) < 1e-4) {
      // removable singularity of sinh(r)/r
      ch = 1.0 + r2 / 2.0 + r2 * r2 / 24.0;
      sh_over_r = 1.0 + r2 / 6.0 + r2 * r2 / 120.0;
    } else {
      ch = std::cosh(r);
      sh_over_r = std::sinh(r) / r;
    }
    return scale * (ch * id + sh_over_r * n);
  }
  const ComplexMatrix n_over_r = n / r;
  const ComplexMatrix p_plus = 0.5 * (id + n_over_r);
  const ComplexMatrix p_minus = 0.5 * (id - n_over_r);
  return (scale * std::exp(r)) * p_plus + (scale * std::exp(-r)) * p_minus;
}

// Scaling and squaring with a truncated Taylor series.
inline ComplexMatrix expm_general(const ComplexMatrix& a) {
  const double norm = a.frobenius_norm();
  int squarings = 0;
  if (norm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
  const ComplexMatrix scaled = a / std::ldexp(1.0, squarings);

  const std::size_t n = a.dim();
  ComplexMatrix term = ComplexMatrix::identity(n);
  ComplexMatrix sum = term;
  for (int k = 1; k <= 30; ++k) {
    term = term * scaled / static_cast<double>(k);
    sum += term;
    if (term.max_abs() <= 1e-18 * sum.max_abs()) break;
  }
  for (int i = 0; i < squarings; ++i) sum = sum * sum;
  return sum;
}

// Cyclic Jacobi on a real symmetric matrix stored row-major; returns eigenvalues unsorted.
inline std::vector<double> jacobi_eigenvalues(std::vector<double> m, std::size_t n) {
  auto at = [&](std::size_t r, std::size_t c) -> double& { return m[r * n + c]; };
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    double total = 0.0;
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c) {
        total += at(r, c) * at(r, c);
        if (r != c) off += at(r, c) * at(r, c);
      }
    if (off <= 1e-32 * total || off == 0.0) break;
    for (std::size_t p = 0; p + 1 < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = at(p, q);
        if (apq == 0.0) continue;
        const double theta = (at(q, q) - at(p, p)) / (2.0 * apq);
        const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = at(k, p);
          const double akq = at(k, q);
          at(k, p) = c * akp - s * akq;
          at(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = at(p, k);
          const double aqk = at(q, k);
          at(p, k) = c * apk - s * aqk;
          at(q, k) = s * apk + c * aqk;
        }
      }
  }
  std::vector<double> eig(n);
  for (std::size_t i = 0; i < n; ++i) eig[i] = at(i, i);
  return eig;
}

}  // namespace detail

/// Matrix exponential e^a. Closed form at dim 2, scaling and squaring otherwise.
inline ComplexMatrix mat_exp(const ComplexMatrix& a) {
  if (a.dim() == 0) throw InputError("mat_exp: empty matrix");
  if (!a.is_finite()) throw InputError("mat_exp: non-finite entry");
  if (a.dim() == 1) return ComplexMatrix(1, {std::exp(a(0, 0))});
  if (a.dim() == 2) return detail::expm_2x2(a);
  return detail::expm_general(a);
}

/// Real eigenvalues of a Hermitian matrix, ascending.
inline std::vector<double> hermitian_eigenvalues(const ComplexMatrix& a, double rel_tol = kHermitianTolerance) {
  if (!is_hermitian(a, rel_tol)) throw ContractError("hermitian_eigenvalues: matrix is not Hermitian");
  const std::size_t n = a.dim();
  if (n == 1) return {a(0, 0).real()};
  if (n == 2) {
    const double mean = 0.5 * (a(0, 0).real() + a(1, 1).real());
    const double half_gap = 0.5 * (a(0, 0).real() - a(1, 1).real());
    const double radius = std::hypot(half_gap, std::abs(a(0, 1)));
    return {mean - radius, mean + radius};
  }
  // [[Re, -Im], [Im, Re]] has the spectrum of a with every eigenvalue doubled.
  const std::size_t m = 2 * n;
  std::vector<double> real_form(m * m);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) {
      const cplx z = 0.5 * (a(r, c) + std::conj(a(c, r)));
      real_form[r * m + c] = z.real();
      real_form[(r + n) * m + (c + n)] = z.real();
      real_form[r * m + (c + n)] = -z.imag();
      real_form[(r + n) * m + c] = z.imag();
    }
  auto doubled = detail::jacobi_eigenvalues(std::move(real_form), m);
  std::sort(doubled.begin(), doubled.end());
  std::vector<double> eig(n);
  for (std::size_t i = 0; i < n; ++i) eig[i] = 0.5 * (doubled[2 * i] + doubled[2 * i + 1]);
  return eig;
}

struct PsdReport {
  bool is_psd;
  double min_eigenvalue;
};

/// Positive semi-definiteness up to tol: smallest eigenvalue >= -tol.
inline PsdReport psd_check(const ComplexMatrix& a, double tol) {
  const auto eig = hermitian_eigenvalues(a);
  return {eig.front() >= -tol, eig.front()};
}

}  // namespace nhq
