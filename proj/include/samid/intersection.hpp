#pragma once

// Intersection subspace estimation.
//
// For each output channel j the data satisfy the product constraint
//
//   H_j(x, y_j) = prod_i (y_j - Theta_i[j,:] x - Gamma_i[j]) = 0,
//
// which is linear in the coefficients of H_j over the degree-K monomial basis
// in (y_j, x_1, .., x_Nx). The intersection point is a K-fold root of every
// H_j, so all (K-1)-order partial derivatives vanish there; each of those is
// affine in (x, y) and the stacked system is solved in least squares.

#include "samid/model_sim.hpp"

#include <nlohmann/json.hpp>

#include <span>
#include <vector>

namespace samid {

using Exponents = std::vector<int>;

/// All monomials of total degree <= degree in num_vars variables, ordered by
/// decreasing total degree and, within a degree, by decreasing exponent of the
/// first variable, then the second, and so on. Variable 0 is the output
/// channel y_j, variables 1..Nx are the inputs.
class MonomialBasis {
 public:
  MonomialBasis(int num_vars, int degree);

  int num_vars() const { return num_vars_; }
  int degree() const { return degree_; }
  Index size() const { return static_cast<Index>(monomials_.size()); }
  const std::vector<Exponents>& monomials() const { return monomials_; }
  const Exponents& operator[](Index i) const { return monomials_[static_cast<std::size_t>(i)]; }

  /// Position of a monomial, or -1 when its degree exceeds the basis.
  Index index_of(const Exponents& e) const;

 private:
  int num_vars_;
  int degree_;
  std::vector<Exponents> monomials_;
};

/// Per-channel decoupling polynomials, coefficients in the original data
/// units. Every channel's y^K coefficient is 1.
struct HybridPolynomial {
  int degree = 0;
  int input_dim = 0;
  MonomialBasis basis{1, 1};
  std::vector<VectorXd> channels;
  /// Max-abs data scale used while fitting; the intersection solve works in
  /// coordinates divided by this value.
  double scale = 1.0;
};

struct IntersectionPoint {
  VectorXd x0;
  VectorXd y0;
  /// RMS of the derivative equations at the solution, in scaled coordinates.
  double residual = 0.0;
};

namespace intersection {

MonomialBasis monomial_basis(int num_vars, int degree);

/// Evaluates every basis monomial at vars = (y_j, x_1, .., x_Nx).
VectorXd veronese_embed(std::span<const double> vars, const MonomialBasis& basis);

/// Least-squares decoupling polynomial per output channel: the right singular
/// vector of the smallest singular value of the embedded data, rescaled so the
/// y^K coefficient is 1.
HybridPolynomial fit_hdc_coefficients(const Dataset& data, int num_submodels);

/// Exact decoupling polynomial of a known model, for testing and baselines.
HybridPolynomial expand_model(const SwitchedAffineModel& model);

double evaluate(const HybridPolynomial& poly, int channel, const VectorXd& x, double y);

/// Coefficients (in the same basis) of d^|order| p / d vars^order.
VectorXd differentiate(const VectorXd& coefficients, const MonomialBasis& basis, const Exponents& order);

/// Least-squares solution of all (K-1)-order derivative equations.
IntersectionPoint estimate_intersection(const HybridPolynomial& poly);

/// Solves (Theta_i - Theta_1) d0 = Gamma_1 - Gamma_i, i = 2..K, and returns
/// (d0, Theta_1 d0 + Gamma_1). Throws when the system is inconsistent.
IntersectionPoint intersection_oracle(const SwitchedAffineModel& model);

nlohmann::json to_json(const HybridPolynomial& poly);

}  // namespace intersection
}  // namespace samid
