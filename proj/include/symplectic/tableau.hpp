#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include <boost/multiprecision/mpfr.hpp>

#include "symplectic/errors.hpp"
#include "symplectic/lanes.hpp"

namespace symplectic {

using HighFloat = boost::multiprecision::mpfr_float;
using HighMatrix = std::vector<std::vector<HighFloat>>;
using Matrix = std::vector<std::vector<double>>;

// Sets the default MPFR precision (decimal digits) for the lifetime of the
// object and restores the previous value afterwards. MPFR's default is a
// process-wide setting, so scopes are serialized by a recursive lock.
class PrecisionScope {
 public:
  explicit PrecisionScope(unsigned digits10);
  ~PrecisionScope();
  PrecisionScope(const PrecisionScope&) = delete;
  PrecisionScope& operator=(const PrecisionScope&) = delete;

 private:
  unsigned previous_;
};

// Shifted Gauss-Legendre nodes c_i = (1 + x_i)/2 in increasing order, where
// x_i are the roots of the degree-s Legendre polynomial. Values carry
// `digits10` decimal digits.
std::vector<HighFloat> gauss_nodes(int stages, unsigned digits10 = 50);

struct CollocationCoefficients {
  std::vector<HighFloat> b;
  HighMatrix a;  // a[i][j]
};

// Weights and Runge-Kutta matrix of the collocation method on `nodes`:
//   sum_j b_j c_j^(k-1) = 1/k,  sum_j a_ij c_j^(k-1) = c_i^k / k,  k = 1..s.
CollocationCoefficients collocation_coeffs(const std::vector<HighFloat>& nodes);

// mu_ij = a_ij / b_j rounded to double so that mu_ij + mu_ji == 1 exactly:
// the strictly lower triangle is correctly rounded, the upper set to 1 - mu_ji,
// and the diagonal to 1/2. Result indexed mu[i][j].
Matrix mu_from(const HighMatrix& a, const std::vector<HighFloat>& b);

// Extrapolation coefficients nu_ij such that
//   sum_j b_j nu_ij (c_j - 1)^(k-1) = c_i^k / k,  k = 1..s,
// i.e. y_{n-1} + sum_j nu_ij L_{n-1,j} evaluates the previous step's
// collocation polynomial at t_{n-1} + c_i h. Result indexed nu[i][j].
Matrix nu_from(const std::vector<HighFloat>& nodes);

// Solves sum_j x_j^k z_j = f_k, k = 0..n-1, by the Bjorck-Pereyra
// progressive scheme. Throws InputError on coincident abscissae.
std::vector<HighFloat> vandermonde_solve(const std::vector<HighFloat>& x, std::vector<HighFloat> f);

// Rounded coefficients in plain arrays, mu[i][j] and nu[i][j].
struct ScalarTableau {
  int stages = 0;
  int order = 0;
  std::vector<double> c;
  std::vector<double> b;
  Matrix mu;
  Matrix nu;
};

ScalarTableau build_scalar_tableau(int stages, unsigned digits10 = 50);

// Throws ComputationError naming the first violated invariant.
void validate_tableau(const ScalarTableau& t);

// Plain-text dump: sections #c, #b, #mu, #nu (row-major), one value per line
// with 25 significant digits. Lines starting with "# " are comments.
void write_coefficients(std::ostream& out, const ScalarTableau& t);
ScalarTableau read_coefficients(std::istream& in);

// The tableau in lane form. mu[j] holds column j, (mu_1j, ..., mu_sj), so
// that sum_j mu[j] * L_j gives all stage increments at once.
template <std::size_t S>
struct GaussTableau {
  static constexpr std::size_t stages = S;
  int order = 2 * static_cast<int>(S);
  LaneVector<S> c;
  LaneVector<S> b;
  std::array<LaneVector<S>, S> mu;
  std::array<LaneVector<S>, S> nu;
  ScalarTableau scalar;

  explicit GaussTableau(ScalarTableau t) : scalar(std::move(t)) {
    if (scalar.stages != static_cast<int>(S)) {
      throw InputError("GaussTableau: stage count does not match lane width");
    }
    validate_tableau(scalar);
    for (std::size_t i = 0; i < S; ++i) {
      c.set(i, scalar.c[i]);
      b.set(i, scalar.b[i]);
    }
    for (std::size_t j = 0; j < S; ++j) {
      for (std::size_t i = 0; i < S; ++i) {
        mu[j].set(i, scalar.mu[i][j]);
        nu[j].set(i, scalar.nu[i][j]);
      }
    }
  }
};

template <std::size_t S>
GaussTableau<S> build_tableau(unsigned digits10 = 50) {
  return GaussTableau<S>(build_scalar_tableau(static_cast<int>(S), digits10));
}

}  // namespace symplectic
