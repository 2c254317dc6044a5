#include "samid/intersection.hpp"

#include "samid/error.hpp"

#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

namespace samid {
namespace {

// Exponent vectors of exactly `total` degree, first variable descending.
void compositions(int num_vars, int total, Exponents& prefix, std::vector<Exponents>& out) {
  const int filled = static_cast<int>(prefix.size());
  if (filled == num_vars - 1) {
    prefix.push_back(total);
    out.push_back(prefix);
    prefix.pop_back();
    return;
  }
  for (int e = total; e >= 0; --e) {
    prefix.push_back(e);
    compositions(num_vars, total - e, prefix, out);
    prefix.pop_back();
  }
}

std::vector<Exponents> exact_degree(int num_vars, int total) {
  std::vector<Exponents> out;
  Exponents prefix;
  compositions(num_vars, total, prefix, out);
  return out;
}

int total_degree(const Exponents& e) { return std::accumulate(e.begin(), e.end(), 0); }

double falling_factorial(int n, int k) {
  double v = 1.0;
  for (int i = 0; i < k; ++i) v *= n - i;
  return v;
}

}  // namespace

MonomialBasis::MonomialBasis(int num_vars, int degree) : num_vars_(num_vars), degree_(degree) {
  if (num_vars < 1) throw InvalidInput("monomial basis needs at least one variable");
  if (degree < 1) throw InvalidInput("monomial basis degree must be at least 1");
  for (int t = degree; t >= 0; --t) {
    auto grade = exact_degree(num_vars, t);
    monomials_.insert(monomials_.end(), grade.begin(), grade.end());
  }
}

Index MonomialBasis::index_of(const Exponents& e) const {
  if (static_cast<int>(e.size()) != num_vars_) return -1;
  for (std::size_t i = 0; i < monomials_.size(); ++i) {
    if (monomials_[i] == e) return static_cast<Index>(i);
  }
  return -1;
}

namespace intersection {

MonomialBasis monomial_basis(int num_vars, int degree) { return MonomialBasis(num_vars, degree); }

VectorXd veronese_embed(std::span<const double> vars, const MonomialBasis& basis) {
  if (static_cast<int>(vars.size()) != basis.num_vars()) {
    throw InvalidInput("observation dimension does not match the monomial basis");
  }
  const int k = basis.degree();
  // powers(v, p) = vars[v]^p
  MatrixXd powers(basis.num_vars(), k + 1);
  for (int v = 0; v < basis.num_vars(); ++v) {
    powers(v, 0) = 1.0;
    for (int p = 1; p <= k; ++p) powers(v, p) = powers(v, p - 1) * vars[v];
  }
  VectorXd out(basis.size());
  for (Index i = 0; i < basis.size(); ++i) {
    double m = 1.0;
    const auto& e = basis[i];
    for (int v = 0; v < basis.num_vars(); ++v) m *= powers(v, e[v]);
    out(i) = m;
  }
  return out;
}

HybridPolynomial fit_hdc_coefficients(const Dataset& data, int num_submodels) {
  data.validate();
  const int nx = data.input_dim();
  const int ny = data.output_dim();
  HybridPolynomial poly;
  poly.degree = num_submodels;
  poly.input_dim = nx;
  poly.basis = MonomialBasis(nx + 1, num_submodels);
  const Index basis_size = poly.basis.size();
  if (data.size() <= basis_size) {
    std::ostringstream msg;
    msg << "fitting a degree-" << num_submodels << " decoupling polynomial needs more than "
        << basis_size << " observations, got " << data.size();
    throw InvalidInput(msg.str());
  }

  const double scale = std::max(data.X.cwiseAbs().maxCoeff(), data.Y.cwiseAbs().maxCoeff());
  if (!(scale > 0.0) || !std::isfinite(scale)) throw NumericalFailure("data are all zero or not finite");
  poly.scale = scale;

  std::vector<double> vars(static_cast<std::size_t>(nx + 1));
  MatrixXd embedded(data.size(), basis_size);
  for (int j = 0; j < ny; ++j) {
    for (Index n = 0; n < data.size(); ++n) {
      vars[0] = data.Y(j, n) / scale;
      for (int k = 0; k < nx; ++k) vars[k + 1] = data.X(k, n) / scale;
      embedded.row(n) = veronese_embed(vars, poly.basis).transpose();
    }
    Eigen::JacobiSVD<MatrixXd> svd(embedded, Eigen::ComputeFullV);
    VectorXd v = svd.matrixV().col(basis_size - 1);
    if (std::abs(v(0)) < 1e-8) {
      std::ostringstream msg;
      msg << "decoupling polynomial for output " << j + 1
          << " has a vanishing leading coefficient (wrong K or degenerate data)";
      throw NumericalFailure(msg.str());
    }
    v /= v(0);
    for (Index i = 0; i < basis_size; ++i) {
      v(i) *= std::pow(scale, num_submodels - total_degree(poly.basis[i]));
    }
    poly.channels.push_back(std::move(v));
  }
  return poly;
}

HybridPolynomial expand_model(const SwitchedAffineModel& model) {
  const int k = model.num_submodels();
  const int nx = model.input_dim();
  HybridPolynomial poly;
  poly.degree = k;
  poly.input_dim = nx;
  poly.basis = MonomialBasis(nx + 1, k);
  for (int j = 0; j < model.output_dim(); ++j) {
    std::map<Exponents, double> product{{Exponents(nx + 1, 0), 1.0}};
    for (const auto& s : model.submodels()) {
      // Linear factor y_j - Theta[j,:] x - Gamma[j].
      std::vector<std::pair<Exponents, double>> factor;
      Exponents e(nx + 1, 0);
      e[0] = 1;
      factor.emplace_back(e, 1.0);
      for (int c = 0; c < nx; ++c) {
        Exponents ex(nx + 1, 0);
        ex[c + 1] = 1;
        factor.emplace_back(ex, -s.theta(j, c));
      }
      factor.emplace_back(Exponents(nx + 1, 0), -s.gamma(j));
      std::map<Exponents, double> next;
      for (const auto& [pe, pc] : product) {
        for (const auto& [fe, fc] : factor) {
          Exponents sum = pe;
          for (int v = 0; v <= nx; ++v) sum[v] += fe[v];
          next[sum] += pc * fc;
        }
      }
      product = std::move(next);
    }
    VectorXd coeffs = VectorXd::Zero(poly.basis.size());
    for (const auto& [e, c] : product) coeffs(poly.basis.index_of(e)) = c;
    poly.channels.push_back(std::move(coeffs));
  }
  return poly;
}

double evaluate(const HybridPolynomial& poly, int channel, const VectorXd& x, double y) {
  std::vector<double> vars(static_cast<std::size_t>(x.size() + 1));
  vars[0] = y;
  for (Index k = 0; k < x.size(); ++k) vars[k + 1] = x(k);
  return veronese_embed(vars, poly.basis).dot(poly.channels.at(static_cast<std::size_t>(channel)));
}

VectorXd differentiate(const VectorXd& coefficients, const MonomialBasis& basis, const Exponents& order) {
  if (static_cast<int>(order.size()) != basis.num_vars()) {
    throw InvalidInput("derivative order does not match the number of variables");
  }
  VectorXd out = VectorXd::Zero(basis.size());
  Exponents reduced(order.size());
  for (Index i = 0; i < basis.size(); ++i) {
    const auto& e = basis[i];
    double factor = 1.0;
    bool survives = true;
    for (std::size_t v = 0; v < e.size() && survives; ++v) {
      if (e[v] < order[v]) {
        survives = false;
      } else {
        factor *= falling_factorial(e[v], order[v]);
        reduced[v] = e[v] - order[v];
      }
    }
    if (survives) out(basis.index_of(reduced)) += factor * coefficients(i);
  }
  return out;
}

IntersectionPoint estimate_intersection(const HybridPolynomial& poly) {
  const int nx = poly.input_dim;
  const int ny = static_cast<int>(poly.channels.size());
  const int k = poly.degree;
  const int nvars = nx + 1;
  if (ny < 1 || nx < 1 || k < 1 || poly.basis.num_vars() != nvars || poly.basis.degree() != k) {
    throw InvalidInput("malformed decoupling polynomial");
  }
  const auto orders = exact_degree(nvars, k - 1);
  const Index constant = poly.basis.index_of(Exponents(nvars, 0));
  std::vector<Index> linear(nvars);
  for (int v = 0; v < nvars; ++v) {
    Exponents e(nvars, 0);
    e[v] = 1;
    linear[v] = poly.basis.index_of(e);
  }

  const double s = poly.scale;
  MatrixXd a = MatrixXd::Zero(static_cast<Index>(ny * orders.size()), nx + ny);
  VectorXd b(a.rows());
  Index row = 0;
  for (int j = 0; j < ny; ++j) {
    VectorXd scaled = poly.channels[j];
    for (Index i = 0; i < scaled.size(); ++i) scaled(i) *= std::pow(s, total_degree(poly.basis[i]) - k);
    for (const auto& order : orders) {
      const VectorXd d = differentiate(scaled, poly.basis, order);
      a(row, nx + j) = d(linear[0]);
      for (int v = 1; v < nvars; ++v) a(row, v - 1) = d(linear[v]);
      b(row) = -d(constant);
      ++row;
    }
  }
  if (a.rows() < a.cols()) throw NumericalFailure("too few derivative equations for a unique intersection");

  Eigen::JacobiSVD<MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  if (!(sv(sv.size() - 1) > 1e-9 * sv(0))) {
    throw NumericalFailure(
        "derivative system is rank deficient: the intersection is not a unique point "
        "(parallel submodels or empty intersection)");
  }
  const VectorXd u = svd.solve(b);
  IntersectionPoint point;
  point.residual = std::sqrt((a * u - b).squaredNorm() / static_cast<double>(a.rows()));
  point.x0 = s * u.head(nx);
  point.y0 = s * u.tail(ny);
  return point;
}

IntersectionPoint intersection_oracle(const SwitchedAffineModel& model) {
  const int k = model.num_submodels();
  const int nx = model.input_dim();
  const int ny = model.output_dim();
  if (k < 2) throw InvalidInput("the intersection of a single submodel is not a point");
  MatrixXd a((k - 1) * ny, nx);
  VectorXd b((k - 1) * ny);
  const auto& first = model.submodel(0);
  for (int i = 1; i < k; ++i) {
    const auto& s = model.submodel(i);
    a.middleRows((i - 1) * ny, ny) = s.theta - first.theta;
    b.segment((i - 1) * ny, ny) = first.gamma - s.gamma;
  }
  const Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(a);
  const VectorXd d0 = cod.solve(b);
  const double misfit = (a * d0 - b).norm();
  const double tolerance = 1e-9 * std::max({1.0, b.norm(), a.norm() * d0.norm()});
  if (misfit > tolerance) throw NumericalFailure("submodels have an empty intersection");
  IntersectionPoint point;
  point.x0 = d0;
  point.y0 = first.theta * d0 + first.gamma;
  point.residual = misfit / std::sqrt(static_cast<double>(a.rows()));
  return point;
}

nlohmann::json to_json(const HybridPolynomial& poly) {
  nlohmann::json monomials = nlohmann::json::array();
  for (const auto& e : poly.basis.monomials()) monomials.push_back(e);
  nlohmann::json channels = nlohmann::json::array();
  for (const auto& c : poly.channels) channels.push_back(std::vector<double>(c.data(), c.data() + c.size()));
  return {{"basis",
           {{"num_vars", poly.basis.num_vars()},
            {"degree", poly.basis.degree()},
            {"variables", "y_j,x1..xNx"},
            {"monomials", monomials}}},
          {"channels", channels},
          {"scale", poly.scale}};
}

}  // namespace intersection
}  // namespace samid
