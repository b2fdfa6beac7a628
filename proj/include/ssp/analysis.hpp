#pragma once

#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "ssp/errors.hpp"
#include "ssp/linalg.hpp"
#include "ssp/tableau.hpp"

namespace ssp {

/// Hadamard ratio |det M| / prod_i |row_i| below which a resolvent counts as singular.
inline constexpr double kTolSingular = 1e-5;

/// Radius of absolute monotonicity: a finite value or the unbounded sentinel.
class MonotonicityRadius {
 public:
  static MonotonicityRadius finite(double r) { return MonotonicityRadius(r); }
  static MonotonicityRadius infinite() { return MonotonicityRadius(); }

  bool is_infinite() const { return !value_.has_value(); }

  /// Throws InfiniteRadius for the unbounded sentinel, so h / R never silently becomes 0.
  double value() const {
    if (!value_) throw InfiniteRadius("radius of absolute monotonicity is unbounded");
    return *value_;
  }

  std::string to_string() const {
    if (!value_) return "inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10f", *value_);
    return buf;
  }

 private:
  MonotonicityRadius() = default;
  explicit MonotonicityRadius(double r) : value_(r) {}
  std::optional<double> value_;
};

inline std::ostream& operator<<(std::ostream& os, const MonotonicityRadius& r) {
  return os << r.to_string();
}

struct MonotonicityCertificate {
  double xi = 0.0;
  Matrix A_xi;
  Vector b_xi;
  Vector e_xi;
  double phi_xi = 1.0;
  bool absolutely_monotone = false;

  double min_entry() const {
    return std::min({A_xi.minCoeff(), b_xi.minCoeff(), e_xi.minCoeff(), phi_xi});
  }
};

namespace detail {

template <class Mat>
void require_regular(const Mat& M, const char* what) {
  const double det = std::abs(M.determinant());
  double scale = 1.0;
  for (Eigen::Index i = 0; i < M.rows(); ++i) scale *= M.row(i).norm();
  if (!(det > kTolSingular * scale)) throw SingularResolvent(what);
}

}  // namespace detail

/// A(xi) = A (I - xi A)^-1, b(xi)^T = b^T (I - xi A)^-1, e(xi) = (I - xi A)^-1 e,
/// phi(xi) = 1 + xi b^T (I - xi A)^-1 e.
inline MonotonicityCertificate abs_mono_quantities(const ButcherTableau& tab, double xi) {
  const auto s = tab.stages();
  const Matrix M = Matrix::Identity(s, s) - xi * tab.A;
  detail::require_regular(M, "I - xi*A is singular");
  const Eigen::PartialPivLU<Matrix> lu(M);
  const Matrix Minv = lu.inverse();

  MonotonicityCertificate cert;
  cert.xi = xi;
  cert.A_xi = tab.A * Minv;
  cert.b_xi = Minv.transpose() * tab.b;
  cert.e_xi = Minv * Vector::Ones(s);
  cert.phi_xi = 1.0 + xi * tab.b.dot(cert.e_xi);
  cert.absolutely_monotone = cert.min_entry() >= -kTolNonneg;
  return cert;
}

/// Necessary and sufficient condition for R(A,b) > 0 of an irreducible method:
/// A >= 0, b > 0 and Inc(A^2) <= Inc(A).
inline bool structural_precheck(const ButcherTableau& tab) {
  if (tab.A.minCoeff() < -kTolNonneg) return false;
  if (tab.b.minCoeff() <= kTolNonneg) return false;
  const Matrix A2 = tab.A * tab.A;
  for (Eigen::Index i = 0; i < A2.rows(); ++i)
    for (Eigen::Index j = 0; j < A2.cols(); ++j)
      if (std::abs(A2(i, j)) > kTolNonneg && std::abs(tab.A(i, j)) <= kTolNonneg) return false;
  return true;
}

inline bool absolutely_monotone_at(const ButcherTableau& tab, double xi) {
  try {
    return abs_mono_quantities(tab, xi).absolutely_monotone;
  } catch (const SingularResolvent&) {
    return false;
  }
}

/// Bisection for the sign change of the absolute-monotonicity predicate at xi = -r.
/// The bracket starts at [0,1] and doubles until the predicate fails or r_cap is reached.
inline MonotonicityRadius radius_abs_monotonicity(const ButcherTableau& tab, double r_cap = 1e6) {
  if (!(r_cap > 0.0)) throw DomainError("radius search ceiling must be positive");
  if (!structural_precheck(tab)) return MonotonicityRadius::finite(0.0);

  double lo = 0.0;
  double hi = std::min(1.0, r_cap);
  while (absolutely_monotone_at(tab, -hi)) {
    if (hi >= r_cap) return MonotonicityRadius::infinite();
    lo = hi;
    hi = std::min(2.0 * hi, r_cap);
  }
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    (absolutely_monotone_at(tab, -mid) ? lo : hi) = mid;
  }
  return MonotonicityRadius::finite(lo);
}

/// Closed-form radius of the TR-BDF2 DIRK family: 2(2 - gamma) / (1 + (1 - gamma)^2).
inline double trbdf2_family_radius(double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw DomainError("gamma outside (0,1)");
  return 2.0 * (2.0 - gamma) / (1.0 + (1.0 - gamma) * (1.0 - gamma));
}

/// phi(z) = det(I - zA + z e b^T) / det(I - zA).
inline std::complex<double> stability_function(const ButcherTableau& tab, std::complex<double> z) {
  const auto s = tab.stages();
  const CMatrix A = tab.A.cast<std::complex<double>>();
  const CMatrix I = CMatrix::Identity(s, s);
  const CMatrix den = I - z * A;
  detail::require_regular(den, "stability function pole");
  const CMatrix num = den + z * CVector::Ones(s) * tab.b.cast<std::complex<double>>().transpose();
  return num.determinant() / den.determinant();
}

inline double stability_function(const ButcherTableau& tab, double xi) {
  return stability_function(tab, std::complex<double>(xi, 0.0)).real();
}

/// Resolvent route phi(z) = 1 + z b^T (I - zA)^-1 e, used to cross-check the determinant form.
inline std::complex<double> stability_function_resolvent(const ButcherTableau& tab,
                                                         std::complex<double> z) {
  const auto s = tab.stages();
  const CMatrix M = CMatrix::Identity(s, s) - z * tab.A.cast<std::complex<double>>();
  detail::require_regular(M, "stability function pole");
  const CVector y = M.partialPivLu().solve(CVector::Ones(s));
  return 1.0 + z * tab.b.cast<std::complex<double>>().dot(y);
}

inline std::complex<double> stability_function(const RosenbrockTableau& tab,
                                               std::complex<double> z) {
  return stability_function(tab.linear_equivalent(), z);
}

/// ARK stability value for u' = lambda u + i mu u, z = h lambda treated with (A_z, b_z) and
/// i w = i h mu treated with (A_w, b_w):
/// phi(z,w) = 1 + (i w b_w^T + z b_z^T)(I - i w A_w - z A_z)^-1 e.
inline std::complex<double> ark_stability_function(const Matrix& A_w, const Matrix& A_z,
                                                   const Vector& b_w, const Vector& b_z,
                                                   std::complex<double> z, double w) {
  const auto s = A_w.rows();
  if (A_z.rows() != s || b_w.size() != s || b_z.size() != s)
    throw DimensionMismatch("ARK coefficient shapes differ");
  const std::complex<double> iw(0.0, w);
  const CMatrix M = CMatrix::Identity(s, s) - iw * A_w.cast<std::complex<double>>() -
                    z * A_z.cast<std::complex<double>>();
  detail::require_regular(M, "ARK resolvent is singular");
  const CVector y = M.partialPivLu().solve(CVector::Ones(s));
  const CVector weights = iw * b_w.cast<std::complex<double>>() + z * b_z.cast<std::complex<double>>();
  return 1.0 + (weights.transpose() * y)(0);
}

/// TR-BDF2 pair of the partitioned variant: w-part alpha = 1, z-part alpha = 0.
inline std::complex<double> trbdf2_ark_stability(std::complex<double> z, double w,
                                                 double gamma = kTrbdf2Gamma) {
  const auto tr = hybrid_trbdf2_tableau(1.0, gamma);
  const auto ie = hybrid_trbdf2_tableau(0.0, gamma);
  return ark_stability_function(tr.A, ie.A, tr.b, ie.b, z, w);
}

struct RegionGrid {
  std::vector<double> re;
  std::vector<double> im;
  std::vector<double> abs_phi;  // im-major: abs_phi[j * re.size() + i]

  double at(std::size_t i_re, std::size_t j_im) const { return abs_phi[j_im * re.size() + i_re]; }
};

using ComplexEvaluator = std::function<std::complex<double>(std::complex<double>)>;

/// Samples |phi| on a rectangle; poles are recorded as +infinity.
inline RegionGrid stability_region_grid(const ComplexEvaluator& phi, std::pair<double, double> re_range,
                                        std::pair<double, double> im_range, int n_re, int n_im) {
  if (n_re < 2 || n_im < 2) throw DomainError("stability grid needs at least 2x2 points");
  RegionGrid g;
  for (int i = 0; i < n_re; ++i)
    g.re.push_back(re_range.first + (re_range.second - re_range.first) * i / (n_re - 1));
  for (int j = 0; j < n_im; ++j)
    g.im.push_back(im_range.first + (im_range.second - im_range.first) * j / (n_im - 1));
  g.abs_phi.reserve(static_cast<std::size_t>(n_re) * n_im);
  for (int j = 0; j < n_im; ++j)
    for (int i = 0; i < n_re; ++i) {
      double v = std::numeric_limits<double>::infinity();
      try {
        v = std::abs(phi({g.re[i], g.im[j]}));
      } catch (const SingularResolvent&) {
      }
      g.abs_phi.push_back(std::isfinite(v) ? v : std::numeric_limits<double>::infinity());
    }
  return g;
}

inline void write_grid_csv(std::ostream& out, const RegionGrid& g) {
  out << "re,im,abs_phi\n";
  char buf[96];
  for (std::size_t j = 0; j < g.im.size(); ++j)
    for (std::size_t i = 0; i < g.re.size(); ++i) {
      const double v = g.at(i, j);
      if (std::isinf(v))
        std::snprintf(buf, sizeof buf, "%.8f,%.8f,inf\n", g.re[i], g.im[j]);
      else
        std::snprintf(buf, sizeof buf, "%.8f,%.8f,%.12g\n", g.re[i], g.im[j], v);
      out << buf;
    }
}

}  // namespace ssp
