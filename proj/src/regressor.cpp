#include <algorithm>
#include <cctype>
#include <string>

#include "dmlkit/errors.hpp"
#include "dmlkit/learners.hpp"

namespace dmlkit {
namespace {

std::string normalized(std::string_view name) {
  std::string out;
  for (char c : name) {
    if (c == '-' || c == '_' || c == ' ') continue;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidArgument("RegressorSpec: " + what);
}

template <class... Fs>
struct Overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
Overloaded(Fs...) -> Overloaded<Fs...>;

}  // namespace

std::string_view learner_name(LearnerKind kind) {
  switch (kind) {
    case LearnerKind::kOls: return "OLS";
    case LearnerKind::kRidge: return "Ridge";
    case LearnerKind::kLassoCv: return "LassoCV";
    case LearnerKind::kMultiTaskLassoCv: return "MultiTaskLassoCV";
    case LearnerKind::kRandomForest: return "RandomForest";
    case LearnerKind::kGradientBoostedTrees: return "GradientBoostedTrees";
    case LearnerKind::kMlp: return "MLP";
  }
  return "unknown";
}

LearnerKind parse_learner_kind(std::string_view name) {
  const std::string key = normalized(name);
  if (key == "ols" || key == "linear" || key == "linearregression") return LearnerKind::kOls;
  if (key == "ridge") return LearnerKind::kRidge;
  if (key == "lassocv" || key == "lasso") return LearnerKind::kLassoCv;
  if (key == "multitasklassocv" || key == "multitasklasso") return LearnerKind::kMultiTaskLassoCv;
  if (key == "randomforest" || key == "rf") return LearnerKind::kRandomForest;
  if (key == "gradientboostedtrees" || key == "gbt" || key == "gbdt" || key == "xgboost" || key == "catboost")
    return LearnerKind::kGradientBoostedTrees;
  if (key == "mlp") return LearnerKind::kMlp;
  throw InvalidArgument("unknown learner kind '" + std::string(name) +
                        "' (expected one of OLS, Ridge, LassoCV, MultiTaskLassoCV, RandomForest, "
                        "GradientBoostedTrees, MLP)");
}

RegressorSpec::RegressorSpec(LearnerKind kind, LearnerParams params) : kind_(kind), params_(std::move(params)) {
  validate();
}

RegressorSpec RegressorSpec::ols() { return {LearnerKind::kOls, OlsParams{}}; }
RegressorSpec RegressorSpec::ridge(RidgeParams p) { return {LearnerKind::kRidge, p}; }
RegressorSpec RegressorSpec::lasso_cv(LassoCvParams p) { return {LearnerKind::kLassoCv, p}; }
RegressorSpec RegressorSpec::multitask_lasso_cv(LassoCvParams p) { return {LearnerKind::kMultiTaskLassoCv, p}; }
RegressorSpec RegressorSpec::random_forest(ForestParams p) { return {LearnerKind::kRandomForest, p}; }
RegressorSpec RegressorSpec::gradient_boosted_trees(BoostingParams p) {
  return {LearnerKind::kGradientBoostedTrees, p};
}
RegressorSpec RegressorSpec::mlp(MlpParams p) { return {LearnerKind::kMlp, std::move(p)}; }

RegressorSpec RegressorSpec::defaults(LearnerKind kind) {
  switch (kind) {
    case LearnerKind::kOls: return ols();
    case LearnerKind::kRidge: return ridge();
    case LearnerKind::kLassoCv: return lasso_cv();
    case LearnerKind::kMultiTaskLassoCv: return multitask_lasso_cv();
    case LearnerKind::kRandomForest: return random_forest();
    case LearnerKind::kGradientBoostedTrees: return gradient_boosted_trees();
    case LearnerKind::kMlp: return mlp();
  }
  throw InvalidArgument("RegressorSpec::defaults: unknown kind");
}

void RegressorSpec::validate() const {
  std::visit(Overloaded{
                 [](const OlsParams&) {},
                 [](const RidgeParams& p) { require(p.alpha >= 0.0, "ridge alpha must be >= 0"); },
                 [](const LassoCvParams& p) {
                   require(p.folds >= 2, "lasso folds must be >= 2");
                   require(p.n_lambdas >= 1, "lasso grid size must be >= 1");
                   require(p.lambda_ratio > 0.0 && p.lambda_ratio <= 1.0, "lasso lambda_ratio must lie in (0, 1]");
                   require(p.tol > 0.0, "lasso tol must be > 0");
                   require(p.max_iter >= 1, "lasso max_iter must be >= 1");
                 },
                 [](const ForestParams& p) {
                   require(p.n_trees >= 1, "forest n_trees must be >= 1");
                   require(p.max_depth >= 1, "forest max_depth must be >= 1");
                   require(p.min_samples_leaf >= 1, "forest min_samples_leaf must be >= 1");
                   require(p.max_features >= 0, "forest max_features must be >= 0");
                 },
                 [](const BoostingParams& p) {
                   // Zero rounds is allowed and yields the constant initial prediction.
                   require(p.n_rounds >= 0, "boosting n_rounds must be >= 0");
                   require(p.learning_rate > 0.0 && p.learning_rate <= 1.0, "learning_rate must lie in (0, 1]");
                   require(p.max_depth >= 1, "boosting max_depth must be >= 1");
                   require(p.min_samples_leaf >= 1, "boosting min_samples_leaf must be >= 1");
                 },
                 [](const MlpParams& p) {
                   require(!p.hidden.empty(), "mlp needs at least one hidden layer");
                   for (int w : p.hidden) require(w >= 1, "mlp hidden widths must be >= 1");
                   require(p.learning_rate > 0.0 && p.learning_rate <= 1.0, "learning_rate must lie in (0, 1]");
                   require(p.beta1 >= 0.0 && p.beta1 < 1.0 && p.beta2 >= 0.0 && p.beta2 < 1.0,
                           "adam betas must lie in [0, 1)");
                   require(p.epsilon > 0.0, "adam epsilon must be > 0");
                   require(p.epochs >= 1, "mlp epochs must be >= 1");
                   require(p.l2 >= 0.0, "mlp l2 must be >= 0");
                 },
             },
             params_);

  const bool matches = [&] {
    switch (kind_) {
      case LearnerKind::kOls: return std::holds_alternative<OlsParams>(params_);
      case LearnerKind::kRidge: return std::holds_alternative<RidgeParams>(params_);
      case LearnerKind::kLassoCv:
      case LearnerKind::kMultiTaskLassoCv: return std::holds_alternative<LassoCvParams>(params_);
      case LearnerKind::kRandomForest: return std::holds_alternative<ForestParams>(params_);
      case LearnerKind::kGradientBoostedTrees: return std::holds_alternative<BoostingParams>(params_);
      case LearnerKind::kMlp: return std::holds_alternative<MlpParams>(params_);
    }
    return false;
  }();
  require(matches, "hyperparameters do not match learner kind");
}

namespace {

void check_training_shapes(const Matrix& X, Index y_len, const char* where) {
  if (X.rows() != y_len) {
    throw ShapeError(std::string(where) + ": X has " + std::to_string(X.rows()) + " rows but the target has " +
                     std::to_string(y_len));
  }
  if (X.rows() < 2) throw InvalidArgument(std::string(where) + ": need at least 2 training rows");
  if (X.cols() < 1) throw InvalidArgument(std::string(where) + ": need at least 1 feature column");
  if (!X.allFinite()) throw InvalidArgument(std::string(where) + ": features contain non-finite values");
}

FittedRegressor linear_child(const RegressorSpec& spec, Index d, Vector coef, double intercept, double lambda,
                             bool converged) {
  FittedRegressor out{spec, d, LinearModel{std::move(coef), intercept}, {}};
  out.diagnostics.selected_lambda = lambda;
  out.diagnostics.converged = converged;
  if (!converged) out.diagnostics.warnings.push_back("coordinate descent hit max_iter before converging");
  return out;
}

}  // namespace

FittedRegressor fit(const RegressorSpec& spec, const Matrix& X, const Vector& y, Rng& rng) {
  spec.validate();
  check_training_shapes(X, y.size(), "fit");
  if (!y.allFinite()) throw InvalidArgument("fit: target contains non-finite values");
  const Index d = X.cols();

  switch (spec.kind()) {
    case LearnerKind::kOls: {
      OlsResult r = ols_solve(X, y);
      FittedRegressor out{spec, d, LinearModel{std::move(r.coef), r.intercept}, {}};
      if (r.underdetermined) out.diagnostics.warnings.push_back("under-determined design (n <= d): minimum-norm solution");
      else if (r.rank_deficient) out.diagnostics.warnings.push_back("rank-deficient design: minimum-norm solution");
      return out;
    }
    case LearnerKind::kRidge:
      return {spec, d, ridge_solve(X, y, spec.get<RidgeParams>().alpha), {}};
    case LearnerKind::kLassoCv: {
      const auto& p = spec.get<LassoCvParams>();
      const auto grid = lasso_lambda_grid(X, y, p.n_lambdas, p.lambda_ratio);
      const int folds = static_cast<int>(std::min<Index>(p.folds, X.rows()));
      LambdaSelection sel = select_lambda_cv(X, y, folds, grid, rng, p.tol, p.max_iter);
      return linear_child(spec, d, std::move(sel.fit.coef), sel.fit.intercept, sel.lambda, sel.fit.converged);
    }
    case LearnerKind::kMultiTaskLassoCv: {
      // A single task reduces the group penalty to the ordinary lasso.
      MultiOutputFit joint = fit_multi_output(spec, X, as_column(y), rng);
      return std::move(joint.children.front());
    }
    case LearnerKind::kRandomForest:
      return {spec, d, fit_random_forest(spec.get<ForestParams>(), X, y, rng), {}};
    case LearnerKind::kGradientBoostedTrees:
      return {spec, d, fit_gradient_boosting(spec.get<BoostingParams>(), X, y), {}};
    case LearnerKind::kMlp:
      return {spec, d, fit_mlp(spec.get<MlpParams>(), X, y, rng), {}};
  }
  throw InvalidArgument("fit: unknown learner kind");
}

Vector predict(const FittedRegressor& model, const Matrix& X) {
  if (X.cols() != model.n_features) {
    throw ShapeError("predict: model was trained on " + std::to_string(model.n_features) +
                     " feature columns but X has " + std::to_string(X.cols()));
  }
  return std::visit(Overloaded{
                        [&](const LinearModel& m) -> Vector { return (X * m.coef).array() + m.intercept; },
                        [&](const TreeEnsemble& m) -> Vector { return predict_ensemble(m, X); },
                        [&](const MlpModel& m) -> Vector { return predict_mlp(m, X); },
                    },
                    model.model);
}

MultiOutputFit fit_multi_output(const RegressorSpec& spec, const Matrix& X, const Matrix& Y, Rng& rng) {
  spec.validate();
  check_training_shapes(X, Y.rows(), "fit_multi_output");
  if (Y.cols() < 1) throw ShapeError("fit_multi_output: target matrix has no columns");
  const Index d = X.cols();

  MultiOutputFit out;
  if (spec.kind() == LearnerKind::kMultiTaskLassoCv) {
    const auto& p = spec.get<LassoCvParams>();
    const auto grid = multitask_lambda_grid(X, Y, p.n_lambdas, p.lambda_ratio);
    const int folds = static_cast<int>(std::min<Index>(p.folds, X.rows()));
    MultiTaskLambdaSelection sel = select_multitask_lambda_cv(X, Y, folds, grid, rng, p.tol, p.max_iter);
    for (Index c = 0; c < Y.cols(); ++c) {
      out.children.push_back(
          linear_child(spec, d, sel.fit.coef.col(c), sel.fit.intercept[c], sel.lambda, sel.fit.converged));
    }
    return out;
  }
  // Every child is a clone seeded with the same stream, so identical target
  // columns yield identical models whatever the learner.
  const Rng shared = rng.derive(0);
  for (Index c = 0; c < Y.cols(); ++c) {
    Rng child = shared;
    out.children.push_back(fit(spec, X, Y.col(c), child));
  }
  return out;
}

Matrix predict(const MultiOutputFit& model, const Matrix& X) {
  Matrix out(X.rows(), model.n_outputs());
  for (Index c = 0; c < model.n_outputs(); ++c) out.col(c) = predict(model.children[static_cast<std::size_t>(c)], X);
  return out;
}

}  // namespace dmlkit
