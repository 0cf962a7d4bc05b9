#include "dmlkit/dml.hpp"

#include <cmath>
#include <optional>
#include <sstream>

#include "dmlkit/errors.hpp"

namespace dmlkit {
namespace {

constexpr double kZ95 = 1.96;

std::string shape_text(const std::vector<Index>& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? ", " : "") << shape[i];
  if (shape.size() == 1) os << ',';
  os << ')';
  return os.str();
}

Matrix to_matrix(const NdArray& a) {
  Matrix m(a.shape[0], a.shape[1]);
  std::copy(a.values.begin(), a.values.end(), m.data());
  return m;
}

void check_consistent(const NdArray& a, const char* name) {
  Index expected = 1;
  for (Index s : a.shape) {
    if (s < 0) throw ShapeError(std::string(name) + " has a negative dimension " + shape_text(a.shape));
    expected *= s;
  }
  if (static_cast<std::size_t>(expected) != a.values.size()) {
    throw ShapeError(std::string(name) + " declares shape " + shape_text(a.shape) + " but holds " +
                     std::to_string(a.values.size()) + " values");
  }
}

Matrix broadcast(const TreatmentLevel& level, Index n, Index d_t, const char* name) {
  if (const double* c = std::get_if<double>(&level)) return Matrix::Constant(n, d_t, *c);
  const Matrix& m = std::get<Matrix>(level);
  if (m.rows() != n || m.cols() != d_t) {
    throw ShapeError(std::string(name) + " must be a scalar or a " + std::to_string(n) + "x" +
                     std::to_string(d_t) + " matrix, got " + shape_string(m));
  }
  return m;
}

}  // namespace

NdArray NdArray::from(const Vector& v) {
  return {{v.size()}, std::vector<double>(v.data(), v.data() + v.size())};
}

NdArray NdArray::from(const Matrix& m) {
  return {{m.rows(), m.cols()}, std::vector<double>(m.data(), m.data() + m.size())};
}

std::string NdArray::shape_string() const { return shape_text(shape); }

ValidatedData validate_shapes(const NdArray& Y, const NdArray& T, const NdArray& X) {
  check_consistent(Y, "Y");
  check_consistent(T, "T");
  check_consistent(X, "X");

  if (Y.rank() != 1) {
    std::ostringstream msg;
    msg << "outcome must be a one-dimensional array of length n; got shape " << Y.shape_string();
    if (Y.rank() == 2 && (Y.shape[1] == 1 || Y.shape[0] == 1)) {
      msg << ". Flatten it to shape (" << Y.shape[0] * Y.shape[1] << ",) before fitting";
    }
    throw ShapeError(msg.str());
  }
  if (T.rank() != 2) {
    throw ShapeError("treatments must be a two-dimensional array of shape (n, d_t); got shape " + T.shape_string());
  }
  if (X.rank() != 2) {
    throw ShapeError("controls must be a two-dimensional array of shape (n, d_x); got shape " + X.shape_string());
  }
  const Index n = Y.shape[0];
  if (n != T.shape[0] || n != X.shape[0]) {
    throw ShapeError("row counts disagree: Y has " + std::to_string(n) + ", T has " + std::to_string(T.shape[0]) +
                     ", X has " + std::to_string(X.shape[0]));
  }
  if (n < 1) throw InvalidArgument("no samples: Y, T and X are empty");
  if (T.shape[1] == 0) throw InvalidArgument("treatments have zero columns (d_t = 0)");
  if (X.shape[1] == 0) throw InvalidArgument("controls have zero columns (d_x = 0)");

  ValidatedData out;
  out.Y = Eigen::Map<const Vector>(Y.values.data(), n);
  out.T = to_matrix(T);
  out.X = to_matrix(X);
  if (!out.Y.allFinite()) throw InvalidArgument("outcome contains NaN or infinite values");
  if (!out.T.allFinite()) throw InvalidArgument("treatments contain NaN or infinite values");
  if (!out.X.allFinite()) throw InvalidArgument("controls contain NaN or infinite values");
  return out;
}

void DmlConfig::validate() const {
  if (n_folds < 2) throw InvalidArgument("DmlConfig: n_folds must be >= 2, got " + std::to_string(n_folds));
  model_y.validate();
  model_t.validate();
}

ResidualSet crossfit_residuals(const Vector& Y, const Matrix& T, const Matrix& X, const DmlConfig& config,
                               Rng& rng) {
  config.validate();
  const Index n = Y.size();
  if (T.rows() != n || X.rows() != n) {
    throw ShapeError("crossfit_residuals: row counts disagree: Y has " + std::to_string(n) + ", T has " +
                     std::to_string(T.rows()) + ", X has " + std::to_string(X.rows()));
  }
  if (n < config.n_folds) {
    throw InvalidArgument("crossfit_residuals: " + std::to_string(n) + " rows cannot fill " +
                          std::to_string(config.n_folds) + " folds");
  }

  const auto folds = kfold_indices(n, config.n_folds, rng);
  ResidualSet res;
  res.y_resid.resize(n);
  res.t_resid.resize(n, T.cols());
  res.fold_of_row.assign(static_cast<std::size_t>(n), -1);

  for (std::size_t k = 0; k < folds.size(); ++k) {
    const Fold& fold = folds[k];
    // Each fold draws from its own stream, so results do not depend on the order folds are processed.
    const Rng fold_rng = rng.derive(k);
    Rng y_rng = fold_rng.derive(0);
    Rng t_rng = fold_rng.derive(1);

    const Matrix X_train = take_rows(X, fold.train);
    const Matrix X_held = take_rows(X, fold.heldout);
    auto fail = [&](const RegressorSpec& spec, const char* role, const std::exception& e) {
      return FitError("cross-fitting fold " + std::to_string(k) + " (" + role + ", " +
                      std::string(learner_name(spec.kind())) + "): " + e.what());
    };

    std::optional<FittedRegressor> model_y;
    try {
      model_y = fit(config.model_y, X_train, take_rows(Y, fold.train), y_rng);
    } catch (const std::exception& e) {
      throw fail(config.model_y, "model_y", e);
    }
    std::optional<MultiOutputFit> model_t;
    try {
      model_t = fit_multi_output(config.model_t, X_train, take_rows(T, fold.train), t_rng);
    } catch (const std::exception& e) {
      throw fail(config.model_t, "model_t", e);
    }

    const Vector y_hat = predict(*model_y, X_held);
    const Matrix t_hat = predict(*model_t, X_held);
    for (std::size_t i = 0; i < fold.heldout.size(); ++i) {
      const Index row = fold.heldout[i];
      const auto local = static_cast<Index>(i);
      res.y_resid[row] = Y[row] - y_hat[local];
      res.t_resid.row(row) = T.row(row) - t_hat.row(local);
      res.fold_of_row[static_cast<std::size_t>(row)] = static_cast<int>(k);
    }
    res.models.push_back({std::move(*model_y), std::move(*model_t)});
  }
  return res;
}

FittedDml final_stage(const ResidualSet& res, const Matrix& X, bool heterogeneity) {
  const Index n = res.y_resid.size();
  if (res.t_resid.rows() != n || X.rows() != n) {
    throw ShapeError("final_stage: residual rows (" + std::to_string(n) + ", " + std::to_string(res.t_resid.rows()) +
                     ") and X rows (" + std::to_string(X.rows()) + ") disagree");
  }
  const Index d_t = res.t_resid.cols();
  const Index d_x = X.cols();
  const Index block = 1 + d_x;
  const Index width = heterogeneity ? d_t * block : d_t;

  Matrix Z(n, width);
  for (Index j = 0; j < d_t; ++j) {
    if (heterogeneity) {
      Z.col(j * block) = res.t_resid.col(j);
      for (Index m = 0; m < d_x; ++m) Z.col(j * block + 1 + m) = res.t_resid.col(j).cwiseProduct(X.col(m));
    } else {
      Z.col(j) = res.t_resid.col(j);
    }
  }

  const LeastSquaresResult ls = least_squares(Z, res.y_resid);

  FittedDml out;
  out.d_t = d_t;
  out.d_x = d_x;
  out.heterogeneity = heterogeneity;
  out.intercepts.resize(d_t);
  out.slopes = Matrix::Zero(d_t, d_x);
  for (Index j = 0; j < d_t; ++j) {
    if (heterogeneity) {
      out.intercepts[j] = ls.coef[j * block];
      for (Index m = 0; m < d_x; ++m) out.slopes(j, m) = ls.coef[j * block + 1 + m];
    } else {
      out.intercepts[j] = ls.coef[j];
    }
  }
  if (ls.rank < width) {
    out.warnings.push_back("degenerate final-stage design (rank " + std::to_string(ls.rank) + " of " +
                           std::to_string(width) + "): minimum-norm solution");
  }

  const double sse = (res.y_resid - Z * ls.coef).squaredNorm();
  const Index dof = n - ls.rank;
  out.residual_variance = dof > 0 ? sse / static_cast<double>(dof) : 0.0;

  const Eigen::MatrixXd gram = Z.transpose() * Z;
  const Eigen::MatrixXd gram_inv = Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(gram).pseudoInverse();
  Eigen::MatrixXd cov = out.residual_variance * gram_inv;
  cov = 0.5 * (cov + cov.transpose());

  out.covariance = Matrix::Zero(d_t * block, d_t * block);
  if (heterogeneity) {
    out.covariance = cov;
  } else {
    for (Index a = 0; a < d_t; ++a)
      for (Index b = 0; b < d_t; ++b) out.covariance(a * block, b * block) = cov(a, b);
  }
  return out;
}

FittedDml fit_dml(const NdArray& Y, const NdArray& T, const NdArray& X, const DmlConfig& config, Rng& rng) {
  const ValidatedData data = validate_shapes(Y, T, X);
  return fit_dml(data.Y, data.T, data.X, config, rng);
}

FittedDml fit_dml(const Vector& Y, const Matrix& T, const Matrix& X, const DmlConfig& config, Rng& rng) {
  const ValidatedData data = validate_shapes(NdArray::from(Y), NdArray::from(T), NdArray::from(X));
  const ResidualSet res = crossfit_residuals(data.Y, data.T, data.X, config, rng);
  FittedDml out = final_stage(res, data.X, config.heterogeneity);
  for (const auto& fold : res.models) {
    for (const auto& w : fold.model_y.diagnostics.warnings) out.warnings.push_back("model_y: " + w);
    for (const auto& child : fold.model_t.children)
      for (const auto& w : child.diagnostics.warnings) out.warnings.push_back("model_t: " + w);
  }
  return out;
}

Matrix const_marginal_effect(const FittedDml& model, const Matrix& X) {
  if (X.cols() != model.d_x) {
    throw ShapeError("const_marginal_effect: model expects " + std::to_string(model.d_x) +
                     " control columns but X has " + std::to_string(X.cols()));
  }
  Matrix out = X * model.slopes.transpose();
  out.rowwise() += model.intercepts.transpose();
  return out;
}

Vector effect(const FittedDml& model, const Matrix& X, const TreatmentLevel& T0, const TreatmentLevel& T1) {
  const Matrix theta = const_marginal_effect(model, X);
  const Matrix lo = broadcast(T0, X.rows(), model.d_t, "T0");
  const Matrix hi = broadcast(T1, X.rows(), model.d_t, "T1");
  return theta.cwiseProduct(hi - lo).rowwise().sum();
}

double ate(const FittedDml& model, const Matrix& X, const TreatmentLevel& T0, const TreatmentLevel& T1) {
  if (X.rows() < 1) throw InvalidArgument("ate: X has no rows");
  return effect(model, X, T0, T1).mean();
}

EffectInterval dispersion_interval(const Matrix& effects, Index j) {
  if (effects.rows() < 2) throw InvalidArgument("dispersion_interval: need at least 2 rows");
  if (j < 0 || j >= effects.cols()) {
    throw ShapeError("dispersion_interval: treatment " + std::to_string(j) + " out of range for " +
                     shape_string(effects));
  }
  // Plain left-to-right sums keep the result independent of SIMD width.
  const Index n = effects.rows();
  double total = 0.0;
  for (Index i = 0; i < n; ++i) total += effects(i, j);
  const double mean = total / static_cast<double>(n);
  double ss = 0.0;
  for (Index i = 0; i < n; ++i) ss += (effects(i, j) - mean) * (effects(i, j) - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  return {mean, mean - kZ95 * sd, mean + kZ95 * sd};
}

EffectInterval analytic_coef_interval(const FittedDml& model, Index j) {
  if (j < 0 || j >= model.d_t) {
    throw ShapeError("analytic_coef_interval: treatment " + std::to_string(j) + " out of range (d_t = " +
                     std::to_string(model.d_t) + ")");
  }
  const Index at = model.intercept_index(j);
  const double se = std::sqrt(std::max(0.0, model.covariance(at, at)));
  const double mean = model.intercepts[j];
  return {mean, mean - kZ95 * se, mean + kZ95 * se};
}

}  // namespace dmlkit
