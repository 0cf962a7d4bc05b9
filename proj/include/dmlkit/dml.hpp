#pragma once

// Partially linear Double Machine Learning with cross-fitted nuisances.
//
// Stage one predicts E[Y|X] and E[T|X] out of fold; stage two regresses the
// outcome residual on the treatment residuals, optionally interacted with the
// controls so that theta(x) = A + B x.

#include <string>
#include <variant>
#include <vector>

#include "dmlkit/learners.hpp"
#include "dmlkit/numeric.hpp"

namespace dmlkit {

/// Untyped n-dimensional input as a caller might hand it over: a shape plus
/// row-major values. `validate_shapes` turns it into typed containers.
struct NdArray {
  std::vector<Index> shape;
  std::vector<double> values;

  static NdArray from(const Vector& v);
  static NdArray from(const Matrix& m);
  Index rank() const { return static_cast<Index>(shape.size()); }
  std::string shape_string() const;
};

struct ValidatedData {
  Vector Y;
  Matrix T;
  Matrix X;
};

/// Checks that Y is one-dimensional with length n and that T (n x d_t) and
/// X (n x d_x) are two-dimensional with matching row counts. Throws
/// ShapeError for any rank or row mismatch, InvalidArgument for empty
/// treatment/control blocks or non-finite values.
ValidatedData validate_shapes(const NdArray& Y, const NdArray& T, const NdArray& X);

struct DmlConfig {
  RegressorSpec model_y = RegressorSpec::random_forest();
  RegressorSpec model_t = RegressorSpec::random_forest();
  int n_folds = 2;
  bool heterogeneity = true;

  void validate() const;
};

struct FoldModels {
  FittedRegressor model_y;
  MultiOutputFit model_t;
};

struct ResidualSet {
  Vector y_resid;  // Y - E^[Y|X], out of fold
  Matrix t_resid;  // T - E^[T|X], out of fold
  std::vector<int> fold_of_row;
  std::vector<FoldModels> models;  // one entry per fold
};

struct FittedDml {
  Vector intercepts;  // A, length d_t
  Matrix slopes;      // B, d_t x d_x (all zero without heterogeneity)
  /// Covariance of the stacked coefficients [A_0, B_0., A_1, B_1., ...];
  /// entries for B are zero when heterogeneity is off.
  Matrix covariance;
  double residual_variance = 0.0;
  Index d_t = 0;
  Index d_x = 0;
  bool heterogeneity = true;
  std::vector<std::string> warnings;

  /// Position of A_j in the stacked coefficient vector.
  Index intercept_index(Index j) const { return j * (1 + d_x); }
};

struct EffectInterval {
  double mean = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

/// A treatment level: a scalar broadcast to every cell, or an explicit n x d_t matrix.
using TreatmentLevel = std::variant<double, Matrix>;

ResidualSet crossfit_residuals(const Vector& Y, const Matrix& T, const Matrix& X, const DmlConfig& config, Rng& rng);

/// Ordinary least squares of y_resid on {t_resid_j} and, with heterogeneity,
/// {t_resid_j * X_m}. There is no extra intercept. Rank-deficient designs
/// resolve to the minimum-norm solution and record a warning.
FittedDml final_stage(const ResidualSet& res, const Matrix& X, bool heterogeneity);

FittedDml fit_dml(const NdArray& Y, const NdArray& T, const NdArray& X, const DmlConfig& config, Rng& rng);
FittedDml fit_dml(const Vector& Y, const Matrix& T, const Matrix& X, const DmlConfig& config, Rng& rng);

/// theta(x_i) = A + B x_i for every row; n x d_t.
Matrix const_marginal_effect(const FittedDml& model, const Matrix& X);

/// effect_i = sum_j theta_j(x_i) * (T1_ij - T0_ij).
Vector effect(const FittedDml& model, const Matrix& X, const TreatmentLevel& T0, const TreatmentLevel& T1);

double ate(const FittedDml& model, const Matrix& X, const TreatmentLevel& T0, const TreatmentLevel& T1);

/// mean +/- 1.96 * sample std of column `j` of per-row effects. This describes
/// how spread out the per-row effects are; it is not a standard error of the
/// mean and does not shrink with n.
EffectInterval dispersion_interval(const Matrix& effects, Index j);

/// A_j +/- 1.96 * sqrt(Var(A_j)) from the final-stage OLS covariance.
EffectInterval analytic_coef_interval(const FittedDml& model, Index j);

}  // namespace dmlkit
