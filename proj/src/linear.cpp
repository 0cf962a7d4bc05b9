#include <string>

#include "dmlkit/errors.hpp"
#include "dmlkit/learners.hpp"

namespace dmlkit {
namespace {

void check_rows(const Matrix& X, const Vector& y, const char* where) {
  if (X.rows() != y.size()) {
    throw ShapeError(std::string(where) + ": X has " + std::to_string(X.rows()) + " rows but y has length " +
                     std::to_string(y.size()));
  }
}

}  // namespace

LeastSquaresResult least_squares(const Matrix& Z, const Vector& y) {
  check_rows(Z, y, "least_squares");
  Eigen::MatrixXd design = Z;
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(design);
  LeastSquaresResult out;
  out.coef = cod.solve(y);
  out.rank = cod.rank();
  return out;
}

OlsResult ols_solve(const Matrix& X, const Vector& y) {
  check_rows(X, y, "ols_solve");
  if (X.rows() < 1 || X.cols() < 1) throw InvalidArgument("ols_solve: empty design");
  const Eigen::RowVectorXd x_mean = X.colwise().mean();
  const double y_mean = y.mean();
  const Matrix centered = X.rowwise() - x_mean;
  const LeastSquaresResult ls = least_squares(centered, (y.array() - y_mean).matrix());

  OlsResult out;
  out.coef = ls.coef;
  out.intercept = y_mean - x_mean.dot(out.coef);
  out.rank = ls.rank;
  out.rank_deficient = ls.rank < X.cols();
  out.underdetermined = X.rows() <= X.cols();
  return out;
}

LinearModel ridge_solve(const Matrix& X, const Vector& y, double alpha) {
  check_rows(X, y, "ridge_solve");
  if (!(alpha >= 0.0)) throw InvalidArgument("ridge_solve: alpha must be non-negative");
  const Eigen::RowVectorXd x_mean = X.colwise().mean();
  const double y_mean = y.mean();
  const Eigen::MatrixXd centered = X.rowwise() - x_mean;
  Eigen::MatrixXd gram = centered.transpose() * centered;
  gram.diagonal().array() += alpha;
  const Eigen::VectorXd rhs = centered.transpose() * (y.array() - y_mean).matrix();

  LinearModel out;
  if (alpha > 0.0) {
    out.coef = gram.ldlt().solve(rhs);
  } else {
    out.coef = Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(gram).solve(rhs);
  }
  out.intercept = y_mean - x_mean.dot(out.coef);
  return out;
}

}  // namespace dmlkit
