#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "dmlkit/errors.hpp"
#include "dmlkit/learners.hpp"

namespace dmlkit {
namespace {

// Column-standardized copy of a design plus centered targets.
struct Standardized {
  Eigen::MatrixXd X;  // column-major for column sweeps
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd scale;  // 0 marks a constant column
  Eigen::MatrixXd Y;         // centered targets, one column per task
  Eigen::RowVectorXd y_mean;
};

Standardized standardize(const Matrix& X, const Eigen::MatrixXd& Y) {
  Standardized s;
  const double n = static_cast<double>(X.rows());
  s.mean = X.colwise().mean();
  s.X = X.rowwise() - s.mean;
  s.scale = (s.X.colwise().squaredNorm() / n).cwiseSqrt();
  for (Index j = 0; j < s.X.cols(); ++j) {
    if (s.scale[j] > 0.0) s.X.col(j) /= s.scale[j];
    else s.X.col(j).setZero();
  }
  s.y_mean = Y.colwise().mean();
  s.Y = Y.rowwise() - s.y_mean;
  return s;
}

double soft_threshold(double z, double gamma) {
  if (z > gamma) return z - gamma;
  if (z < -gamma) return z + gamma;
  return 0.0;
}

struct CdOutcome {
  bool converged = false;
  int sweeps = 0;
};

// Single-task coordinate descent on a standardized problem; `beta` is the warm start.
CdOutcome lasso_cd(const Standardized& s, double lambda, double tol, int max_iter, Eigen::VectorXd& beta,
                   std::vector<double>* trace) {
  const double n = static_cast<double>(s.X.rows());
  Eigen::VectorXd resid = s.Y.col(0) - s.X * beta;
  CdOutcome out;
  for (int sweep = 0; sweep < max_iter; ++sweep) {
    double max_change = 0.0;
    for (Index j = 0; j < s.X.cols(); ++j) {
      if (s.scale[j] == 0.0) continue;
      const double old = beta[j];
      const double rho = s.X.col(j).dot(resid) / n + old;
      const double updated = soft_threshold(rho, lambda);
      if (updated != old) {
        resid -= (updated - old) * s.X.col(j);
        beta[j] = updated;
        max_change = std::max(max_change, std::abs(updated - old));
      }
    }
    out.sweeps = sweep + 1;
    if (trace) trace->push_back(0.5 * resid.squaredNorm() / n + lambda * beta.lpNorm<1>());
    if (max_change < tol) {
      out.converged = true;
      break;
    }
  }
  return out;
}

CdOutcome multitask_cd(const Standardized& s, double lambda, double tol, int max_iter, Eigen::MatrixXd& W) {
  const double n = static_cast<double>(s.X.rows());
  Eigen::MatrixXd resid = s.Y - s.X * W;
  CdOutcome out;
  for (int sweep = 0; sweep < max_iter; ++sweep) {
    double max_change = 0.0;
    for (Index j = 0; j < s.X.cols(); ++j) {
      if (s.scale[j] == 0.0) continue;
      const Eigen::RowVectorXd old = W.row(j);
      const Eigen::RowVectorXd rho = (s.X.col(j).transpose() * resid) / n + old;
      const double norm = rho.norm();
      const Eigen::RowVectorXd updated =
          norm > lambda ? Eigen::RowVectorXd((1.0 - lambda / norm) * rho) : Eigen::RowVectorXd::Zero(rho.size());
      const Eigen::RowVectorXd delta = updated - old;
      const double change = delta.cwiseAbs().maxCoeff();
      if (change > 0.0) {
        resid -= s.X.col(j) * delta;
        W.row(j) = updated;
        max_change = std::max(max_change, change);
      }
    }
    out.sweeps = sweep + 1;
    if (max_change < tol) {
      out.converged = true;
      break;
    }
  }
  return out;
}

// Back to the original feature scale.
void unstandardize(const Standardized& s, const Eigen::MatrixXd& W, Eigen::MatrixXd& coef, Eigen::RowVectorXd& intercept) {
  coef = W;
  for (Index j = 0; j < W.rows(); ++j) {
    if (s.scale[j] > 0.0) coef.row(j) /= s.scale[j];
    else coef.row(j).setZero();
  }
  intercept = s.y_mean - s.mean * coef;
}

void check_grid(const std::vector<double>& grid, int folds, const char* where) {
  if (grid.empty()) throw InvalidArgument(std::string(where) + ": lambda grid is empty");
  if (folds < 2) throw InvalidArgument(std::string(where) + ": need at least 2 folds");
  for (double l : grid) {
    if (!(l >= 0.0)) throw InvalidArgument(std::string(where) + ": lambda values must be non-negative");
  }
}

// Grid positions ordered by descending lambda, stable on ties.
std::vector<std::size_t> descending_order(const std::vector<double>& grid) {
  std::vector<std::size_t> order(grid.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return grid[a] > grid[b]; });
  return order;
}

// Shared selection rule: lowest mean held-out error among fully converged
// candidates, scanning from the largest lambda so ties keep the larger one.
std::size_t pick_lambda(const std::vector<double>& grid, const std::vector<double>& cv_mse,
                        const std::vector<bool>& failed, const char* where) {
  const auto order = descending_order(grid);
  std::size_t best = grid.size();
  for (std::size_t pos : order) {
    if (failed[pos]) continue;
    if (best == grid.size() || cv_mse[pos] < cv_mse[best]) best = pos;
  }
  if (best == grid.size()) {
    std::ostringstream msg;
    msg << where << ": coordinate descent did not converge for any lambda; failed values:";
    for (double l : grid) msg << ' ' << l;
    throw FitError(msg.str());
  }
  return best;
}

}  // namespace

double lasso_lambda_max(const Matrix& X, const Vector& y) {
  if (X.rows() != y.size()) throw ShapeError("lasso_lambda_max: X/y row mismatch");
  const Standardized s = standardize(X, y);
  return (s.X.transpose() * s.Y.col(0)).cwiseAbs().maxCoeff() / static_cast<double>(X.rows());
}

double multitask_lambda_max(const Matrix& X, const Matrix& Y) {
  if (X.rows() != Y.rows()) throw ShapeError("multitask_lambda_max: X/Y row mismatch");
  const Standardized s = standardize(X, Y);
  // Same expression as the first coordinate-descent sweep, so lambda_max zeroes every row exactly.
  const double n = static_cast<double>(X.rows());
  double best = 0.0;
  for (Index j = 0; j < s.X.cols(); ++j) {
    const Eigen::RowVectorXd rho = (s.X.col(j).transpose() * s.Y) / n;
    best = std::max(best, rho.norm());
  }
  return best;
}

namespace {
std::vector<double> log_grid(double top, int count, double ratio) {
  if (count < 1) throw InvalidArgument("lasso grid: count must be positive");
  if (!(ratio > 0.0 && ratio <= 1.0)) throw InvalidArgument("lasso grid: ratio must lie in (0, 1]");
  if (!(top > 0.0)) top = 1e-12;
  std::vector<double> grid(static_cast<std::size_t>(count));
  const double lo = std::log(top * ratio);
  const double hi = std::log(top);
  for (int i = 0; i < count; ++i) {
    const double t = count == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(count - 1);
    grid[static_cast<std::size_t>(i)] = std::exp(hi + t * (lo - hi));
  }
  return grid;
}
}  // namespace

std::vector<double> lasso_lambda_grid(const Matrix& X, const Vector& y, int count, double ratio) {
  return log_grid(lasso_lambda_max(X, y), count, ratio);
}

std::vector<double> multitask_lambda_grid(const Matrix& X, const Matrix& Y, int count, double ratio) {
  return log_grid(multitask_lambda_max(X, Y), count, ratio);
}

LassoResult lasso_coordinate_descent(const Matrix& X, const Vector& y, double lambda, double tol, int max_iter) {
  if (X.rows() != y.size()) {
    throw ShapeError("lasso_coordinate_descent: X has " + std::to_string(X.rows()) + " rows but y has length " +
                     std::to_string(y.size()));
  }
  if (!(lambda >= 0.0)) throw InvalidArgument("lasso_coordinate_descent: lambda must be non-negative");
  if (max_iter < 1) throw InvalidArgument("lasso_coordinate_descent: max_iter must be positive");

  const Standardized s = standardize(X, y);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(X.cols());
  LassoResult out;
  const CdOutcome cd = lasso_cd(s, lambda, tol, max_iter, beta, &out.objective_trace);
  out.converged = cd.converged;
  out.sweeps = cd.sweeps;

  Eigen::MatrixXd coef;
  Eigen::RowVectorXd intercept;
  unstandardize(s, beta, coef, intercept);
  out.coef = coef.col(0);
  out.intercept = intercept[0];
  return out;
}

LambdaSelection select_lambda_cv(const Matrix& X, const Vector& y, int folds, const std::vector<double>& grid,
                                 Rng& rng, double tol, int max_iter) {
  check_grid(grid, folds, "select_lambda_cv");
  if (X.rows() != y.size()) throw ShapeError("select_lambda_cv: X/y row mismatch");

  const auto splits = kfold_indices(X.rows(), folds, rng);
  const auto order = descending_order(grid);
  std::vector<double> cv_mse(grid.size(), 0.0);
  std::vector<bool> failed(grid.size(), false);

  for (const Fold& fold : splits) {
    const Matrix X_train = take_rows(X, fold.train);
    const Vector y_train = take_rows(y, fold.train);
    const Matrix X_held = take_rows(X, fold.heldout);
    const Vector y_held = take_rows(y, fold.heldout);
    const Standardized s = standardize(X_train, y_train);
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(X.cols());
    for (std::size_t pos : order) {
      const CdOutcome cd = lasso_cd(s, grid[pos], tol, max_iter, beta, nullptr);
      if (!cd.converged) failed[pos] = true;
      Eigen::MatrixXd coef;
      Eigen::RowVectorXd intercept;
      unstandardize(s, beta, coef, intercept);
      const Vector pred = (X_held * coef.col(0)).array() + intercept[0];
      cv_mse[pos] += (y_held - pred).squaredNorm() / static_cast<double>(y_held.size());
    }
  }
  for (double& v : cv_mse) v /= static_cast<double>(splits.size());

  const std::size_t best = pick_lambda(grid, cv_mse, failed, "select_lambda_cv");
  LambdaSelection out;
  out.lambda = grid[best];
  out.grid = grid;
  out.cv_mse = std::move(cv_mse);
  out.fit = lasso_coordinate_descent(X, y, out.lambda, tol, max_iter);
  return out;
}

MultiTaskLassoResult multitask_lasso(const Matrix& X, const Matrix& Y, double lambda, double tol, int max_iter) {
  if (X.rows() != Y.rows()) {
    throw ShapeError("multitask_lasso: X has " + std::to_string(X.rows()) + " rows but Y has " +
                     std::to_string(Y.rows()));
  }
  if (!(lambda >= 0.0)) throw InvalidArgument("multitask_lasso: lambda must be non-negative");
  const Standardized s = standardize(X, Y);
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(X.cols(), Y.cols());
  const CdOutcome cd = multitask_cd(s, lambda, tol, max_iter, W);
  MultiTaskLassoResult out;
  out.converged = cd.converged;
  out.sweeps = cd.sweeps;
  Eigen::MatrixXd coef;
  Eigen::RowVectorXd intercept;
  unstandardize(s, W, coef, intercept);
  out.coef = coef;
  out.intercept = intercept.transpose();
  return out;
}

MultiTaskLambdaSelection select_multitask_lambda_cv(const Matrix& X, const Matrix& Y, int folds,
                                                    const std::vector<double>& grid, Rng& rng, double tol,
                                                    int max_iter) {
  check_grid(grid, folds, "select_multitask_lambda_cv");
  if (X.rows() != Y.rows()) throw ShapeError("select_multitask_lambda_cv: X/Y row mismatch");

  const auto splits = kfold_indices(X.rows(), folds, rng);
  const auto order = descending_order(grid);
  std::vector<double> cv_mse(grid.size(), 0.0);
  std::vector<bool> failed(grid.size(), false);

  for (const Fold& fold : splits) {
    const Matrix X_train = take_rows(X, fold.train);
    const Matrix Y_train = take_rows(Y, fold.train);
    const Matrix X_held = take_rows(X, fold.heldout);
    const Matrix Y_held = take_rows(Y, fold.heldout);
    const Standardized s = standardize(X_train, Y_train);
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(X.cols(), Y.cols());
    for (std::size_t pos : order) {
      const CdOutcome cd = multitask_cd(s, grid[pos], tol, max_iter, W);
      if (!cd.converged) failed[pos] = true;
      Eigen::MatrixXd coef;
      Eigen::RowVectorXd intercept;
      unstandardize(s, W, coef, intercept);
      const Eigen::MatrixXd pred = (X_held * coef).rowwise() + intercept;
      cv_mse[pos] += (Y_held - pred).squaredNorm() / static_cast<double>(Y_held.size());
    }
  }
  for (double& v : cv_mse) v /= static_cast<double>(splits.size());

  const std::size_t best = pick_lambda(grid, cv_mse, failed, "select_multitask_lambda_cv");
  MultiTaskLambdaSelection out;
  out.lambda = grid[best];
  out.cv_mse = std::move(cv_mse);
  out.fit = multitask_lasso(X, Y, out.lambda, tol, max_iter);
  return out;
}

}  // namespace dmlkit
