#pragma once

// Bradley-Terry strengths from a weighted win matrix, fitted with the
// minorization-maximization renormalization
//
//   p'_x = W_x / sum_{y != x} (w_xy + w_yx) / (p_x + p_y),   W_x = sum_y w_xy
//   p_x  = p'_x / sum_y p'_y
//
// w_xy is the (possibly fractional) number of times item x beat item y.

#include <Eigen/Dense>

#include <cmath>
#include <string>

#include "define/errors.hpp"
#include "define/schema.hpp"

namespace define {

template <typename Scalar>
struct FitOptions {
  Scalar tol = Scalar(1e-8);
  int max_iter = 10000;
  // Added to every off-diagonal weight, relative to the mean off-diagonal
  // weight (absolute when the matrix is all zeros). Keeps the comparison
  // graph connected and every strength positive.
  Scalar regularization = Scalar(1e-6);
};

template <typename Scalar>
struct StrengthFit {
  Vector<Scalar> p;  // on the simplex
  int iterations = 0;
  Scalar max_change = 0;
};

class NotConverged : public Error {
 public:
  NotConverged(const std::string& what, Eigen::VectorXd last, double max_change, int iterations)
      : Error(what), last_(std::move(last)), max_change_(max_change), iterations_(iterations) {}

  const Eigen::VectorXd& last_iterate() const { return last_; }
  double max_change() const { return max_change_; }
  int iterations() const { return iterations_; }

 private:
  Eigen::VectorXd last_;
  double max_change_;
  int iterations_;
};

/// Validated, regularized copy of a win matrix with a zero diagonal.
template <typename Derived>
Matrix<typename Derived::Scalar> regularized_wins(const Eigen::MatrixBase<Derived>& wins,
                                                  typename Derived::Scalar regularization) {
  using Scalar = typename Derived::Scalar;
  const auto m = wins.rows();
  if (wins.cols() != m) throw DegenerateMatrix("win matrix must be square");
  if (m < 2) throw DegenerateMatrix("need at least two items to fit strengths");
  if (!wins.allFinite() || (wins.array() < Scalar(0)).any()) {
    throw DegenerateMatrix("win matrix entries must be finite and non-negative");
  }
  if (regularization < Scalar(0)) throw DegenerateMatrix("regularization must be >= 0");

  Matrix<Scalar> w = wins;
  w.diagonal().setZero();
  const Scalar off_mean = w.sum() / Scalar(m * (m - 1));
  const Scalar eps = regularization * (off_mean > Scalar(0) ? off_mean : Scalar(1));
  w.array() += eps;
  w.diagonal().setZero();
  return w;
}

template <typename Derived>
StrengthFit<typename Derived::Scalar> fit_strengths(
    const Eigen::MatrixBase<Derived>& wins,
    const FitOptions<typename Derived::Scalar>& options = {}) {
  using Scalar = typename Derived::Scalar;
  const Matrix<Scalar> w = regularized_wins(wins, options.regularization);
  const auto m = w.rows();

  const Vector<Scalar> total_wins = w.rowwise().sum();
  const Matrix<Scalar> games = w + w.transpose();
  for (Eigen::Index x = 0; x < m; ++x) {
    if (games.row(x).sum() <= Scalar(0)) {
      throw DegenerateMatrix("item " + std::to_string(x) + " has no comparisons");
    }
    if (total_wins[x] <= Scalar(0)) {
      throw DegenerateMatrix("item " + std::to_string(x) + " never wins; strength is not finite");
    }
  }

  StrengthFit<Scalar> fit;
  fit.p = Vector<Scalar>::Constant(m, Scalar(1) / Scalar(m));
  for (int it = 1; it <= options.max_iter; ++it) {
    // pair_sums(x, y) = p_x + p_y; the zero diagonal of `games` drops y == x.
    const Matrix<Scalar> pair_sums =
        fit.p.replicate(1, m) + fit.p.transpose().replicate(m, 1);
    const Vector<Scalar> denom = (games.array() / pair_sums.array()).rowwise().sum();
    Vector<Scalar> next = total_wins.cwiseQuotient(denom);
    next /= next.sum();

    fit.max_change = (next - fit.p).cwiseAbs().maxCoeff();
    fit.p = std::move(next);
    fit.iterations = it;
    if (fit.max_change < options.tol) return fit;
  }
  throw NotConverged("strength fit did not converge in " + std::to_string(options.max_iter) +
                         " iterations (max change " + std::to_string(double(fit.max_change)) + ")",
                     fit.p.template cast<double>(), double(fit.max_change), fit.iterations);
}

/// P(x beats y) = p_x / (p_x + p_y).
template <typename Derived>
typename Derived::Scalar win_probability(const Eigen::MatrixBase<Derived>& p, Eigen::Index x,
                                         Eigen::Index y) {
  return p[x] / (p[x] + p[y]);
}

}  // namespace define
