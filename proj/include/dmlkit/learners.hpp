#pragma once

// First-stage regressors: a uniform fit/predict contract over linear models,
// cross-validated lasso, random forests, gradient-boosted trees and an MLP.

#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "dmlkit/numeric.hpp"
#include "dmlkit/tree.hpp"

namespace dmlkit {

enum class LearnerKind {
  kOls,
  kRidge,
  kLassoCv,
  kMultiTaskLassoCv,
  kRandomForest,
  kGradientBoostedTrees,
  kMlp,
};

std::string_view learner_name(LearnerKind kind);
/// Accepts canonical names ("RandomForest") and CLI spellings ("random-forest", "rf").
LearnerKind parse_learner_kind(std::string_view name);

struct OlsParams {};

struct RidgeParams {
  double alpha = 1.0;
};

struct LassoCvParams {
  int folds = 5;
  int n_lambdas = 100;
  double lambda_ratio = 1e-3;  // smallest grid value relative to lambda_max
  double tol = 1e-7;
  int max_iter = 10000;
};

struct ForestParams {
  int n_trees = 100;
  int max_depth = 32;
  int min_samples_leaf = 1;
  int max_features = 0;  // 0 selects max(1, d / 3)
  bool bootstrap = true;
};

struct BoostingParams {
  int n_rounds = 200;
  double learning_rate = 0.05;
  int max_depth = 6;
  int min_samples_leaf = 1;
};

struct MlpParams {
  std::vector<int> hidden = {128, 64};
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int epochs = 500;
  double l2 = 1e-4;
};

using LearnerParams =
    std::variant<OlsParams, RidgeParams, LassoCvParams, ForestParams, BoostingParams, MlpParams>;

/// Declarative learner configuration. Build through the named constructors;
/// `validate` runs on construction and again before every fit.
class RegressorSpec {
 public:
  static RegressorSpec ols();
  static RegressorSpec ridge(RidgeParams p = {});
  static RegressorSpec lasso_cv(LassoCvParams p = {});
  static RegressorSpec multitask_lasso_cv(LassoCvParams p = {});
  static RegressorSpec random_forest(ForestParams p = {});
  static RegressorSpec gradient_boosted_trees(BoostingParams p = {});
  static RegressorSpec mlp(MlpParams p = {});
  /// Default hyperparameters for `kind`.
  static RegressorSpec defaults(LearnerKind kind);

  LearnerKind kind() const { return kind_; }
  const LearnerParams& params() const { return params_; }
  template <class P>
  const P& get() const { return std::get<P>(params_); }

  void validate() const;

 private:
  RegressorSpec(LearnerKind kind, LearnerParams params);
  LearnerKind kind_;
  LearnerParams params_;
};

struct LinearModel {
  Vector coef;
  double intercept = 0.0;
};

struct TreeEnsemble {
  double base = 0.0;   // initial prediction
  double scale = 1.0;  // per-tree multiplier (1/n_trees for forests, learning rate for boosting)
  std::vector<RegressionTree> trees;
};

struct MlpModel {
  std::vector<Eigen::MatrixXd> weights;  // layer l maps width_l -> width_{l+1}
  std::vector<Eigen::VectorXd> biases;
};

using LearnedParameters = std::variant<LinearModel, TreeEnsemble, MlpModel>;

struct FitDiagnostics {
  double selected_lambda = 0.0;  // lasso family only
  bool converged = true;
  std::vector<std::string> warnings;
};

struct FittedRegressor {
  RegressorSpec spec;
  Index n_features = 0;
  LearnedParameters model;
  FitDiagnostics diagnostics;
};

struct MultiOutputFit {
  std::vector<FittedRegressor> children;

  Index n_outputs() const { return static_cast<Index>(children.size()); }
  Index n_features() const { return children.empty() ? 0 : children.front().n_features; }
};

FittedRegressor fit(const RegressorSpec& spec, const Matrix& X, const Vector& y, Rng& rng);
Vector predict(const FittedRegressor& model, const Matrix& X);

/// One child per column of `Y`. The multi-task lasso fits all columns jointly
/// and shares one selected penalty; every other kind fits columns independently.
MultiOutputFit fit_multi_output(const RegressorSpec& spec, const Matrix& X, const Matrix& Y, Rng& rng);
Matrix predict(const MultiOutputFit& model, const Matrix& X);

// ---------------------------------------------------------------------------
// Linear solvers

struct OlsResult {
  Vector coef;
  double intercept = 0.0;
  Index rank = 0;
  bool rank_deficient = false;
  bool underdetermined = false;  // n <= d
};

/// Least squares with intercept via complete orthogonal decomposition of the
/// centered design. Rank-deficient designs resolve to the minimum-norm slope.
OlsResult ols_solve(const Matrix& X, const Vector& y);

struct LeastSquaresResult {
  Vector coef;
  Index rank = 0;
};

/// Least squares without intercept; minimum-norm when rank deficient.
LeastSquaresResult least_squares(const Matrix& Z, const Vector& y);

/// Ridge with unpenalized intercept: minimizes |y - Xb - c|^2 + alpha |b|^2.
LinearModel ridge_solve(const Matrix& X, const Vector& y, double alpha);

// ---------------------------------------------------------------------------
// Lasso

struct LassoResult {
  Vector coef;  // original feature scale
  double intercept = 0.0;
  bool converged = false;
  int sweeps = 0;
  /// Objective (1/2n)|y - Xb|^2 + lambda |b|_1 on the standardized problem,
  /// recorded after every sweep.
  std::vector<double> objective_trace;
};

/// Cyclic coordinate descent with soft-thresholding. Features are
/// standardized internally (population scale) and `y` centered; coefficients
/// are reported on the original scale. Converged when the largest coefficient
/// change in a sweep falls below `tol`. On non-convergence the last iterate is
/// returned with `converged == false`.
LassoResult lasso_coordinate_descent(const Matrix& X, const Vector& y, double lambda, double tol = 1e-7,
                                     int max_iter = 10000);

/// Smallest penalty that zeroes every coefficient, max_j |x_j' y| / n on the
/// standardized problem.
double lasso_lambda_max(const Matrix& X, const Vector& y);

/// `count` log-spaced values from lambda_max down to lambda_max * ratio.
std::vector<double> lasso_lambda_grid(const Matrix& X, const Vector& y, int count = 100, double ratio = 1e-3);

struct LambdaSelection {
  double lambda = 0.0;
  LassoResult fit;
  std::vector<double> grid;     // as supplied
  std::vector<double> cv_mse;   // mean held-out MSE per grid entry
};

/// K-fold choice of the lasso penalty. The minimum mean held-out MSE wins;
/// ties go to the larger penalty. The winner is refit on all rows.
LambdaSelection select_lambda_cv(const Matrix& X, const Vector& y, int folds, const std::vector<double>& grid,
                                 Rng& rng, double tol = 1e-7, int max_iter = 10000);

struct MultiTaskLassoResult {
  Matrix coef;  // d x tasks, original scale
  Vector intercept;
  bool converged = false;
  int sweeps = 0;
};

/// Group-penalized lasso shared across tasks: (1/2n)|Y - XW|_F^2 + lambda sum_j |W_j.|_2.
MultiTaskLassoResult multitask_lasso(const Matrix& X, const Matrix& Y, double lambda, double tol = 1e-7,
                                     int max_iter = 10000);

struct MultiTaskLambdaSelection {
  double lambda = 0.0;
  MultiTaskLassoResult fit;
  std::vector<double> cv_mse;
};

MultiTaskLambdaSelection select_multitask_lambda_cv(const Matrix& X, const Matrix& Y, int folds,
                                                    const std::vector<double>& grid, Rng& rng,
                                                    double tol = 1e-7, int max_iter = 10000);

double multitask_lambda_max(const Matrix& X, const Matrix& Y);
std::vector<double> multitask_lambda_grid(const Matrix& X, const Matrix& Y, int count = 100, double ratio = 1e-3);

// ---------------------------------------------------------------------------
// Tree ensembles and networks

TreeEnsemble fit_random_forest(const ForestParams& p, const Matrix& X, const Vector& y, Rng& rng);
TreeEnsemble fit_gradient_boosting(const BoostingParams& p, const Matrix& X, const Vector& y);
Vector predict_ensemble(const TreeEnsemble& model, const Matrix& X);

MlpModel fit_mlp(const MlpParams& p, const Matrix& X, const Vector& y, Rng& rng);
Vector predict_mlp(const MlpModel& model, const Matrix& X);
/// Mean squared error (without the L2 term) of `model` on (X, y).
double mlp_training_loss(const MlpModel& model, const Matrix& X, const Vector& y);

}  // namespace dmlkit
