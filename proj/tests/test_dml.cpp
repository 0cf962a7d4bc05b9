#include <gtest/gtest.h>

#include <cmath>

#include "dmlkit/dgp.hpp"
#include "dmlkit/dml.hpp"
#include "dmlkit/errors.hpp"

using namespace dmlkit;

namespace {

Vector true_theta() {
  Vector t(3);
  t << 1.5, -2.0, 0.5;
  return t;
}

struct Design {
  Vector Y;
  Matrix T;
  Matrix X;
};

Design dgp(std::uint64_t seed, Index n = 1000, double noise = 1.0) {
  DgpSpec spec;
  spec.n = n;
  spec.seed = seed;
  spec.noise_std = noise;
  const Dataset d = make_synthetic(spec);
  const Partition p = partition_columns(d);
  return {d.outcome, p.T, p.X};
}

// Residuals the nuisance models would produce with perfect knowledge:
// E[Y|X] = 3 x5 and E[T|X] = 0.
ResidualSet oracle_residuals(const Design& d) {
  ResidualSet r;
  r.y_resid = d.Y - 3.0 * d.X.col(1);
  r.t_resid = d.T;
  return r;
}

DmlConfig ols_config(bool heterogeneity = true) {
  DmlConfig c;
  c.model_y = RegressorSpec::ols();
  c.model_t = RegressorSpec::ols();
  c.heterogeneity = heterogeneity;
  return c;
}

double correlation(const Vector& a, const Vector& b) {
  const Vector ac = a.array() - a.mean();
  const Vector bc = b.array() - b.mean();
  return ac.dot(bc) / std::sqrt(ac.squaredNorm() * bc.squaredNorm());
}

}  // namespace

// ---------------------------------------------------------------------------
// validate_shapes

TEST(ValidateShapes, OutcomeAsColumnMatrixIsRejectedWithHint) {
  const Design d = dgp(42);
  try {
    validate_shapes(NdArray::from(as_column(d.Y)), NdArray::from(d.T), NdArray::from(d.X));
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("outcome must be a one-dimensional array of length n"), std::string::npos) << msg;
    EXPECT_NE(msg.find("(1000, 1)"), std::string::npos) << msg;
  }
}

TEST(ValidateShapes, OutcomeAsRowMatrixIsRejected) {
  const Design d = dgp(42, 20);
  const Matrix row = d.Y.transpose();
  EXPECT_THROW(validate_shapes(NdArray::from(row), NdArray::from(d.T), NdArray::from(d.X)), ShapeError);
}

TEST(ValidateShapes, StandardPartitionAccepted) {
  const Design d = dgp(42);
  const ValidatedData v = validate_shapes(NdArray::from(d.Y), NdArray::from(d.T), NdArray::from(d.X));
  EXPECT_EQ(v.Y.size(), 1000);
  EXPECT_EQ(v.T.cols(), 3);
  EXPECT_EQ(v.X.cols(), 2);
  EXPECT_EQ(v.Y, d.Y);
  EXPECT_EQ(v.T, d.T);
  EXPECT_EQ(v.X, d.X);
}

TEST(ValidateShapes, RowMismatchListsAllCounts) {
  const Design d = dgp(42);
  try {
    validate_shapes(NdArray::from(Vector(d.Y.head(999))), NdArray::from(d.T), NdArray::from(d.X));
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("999"), std::string::npos) << msg;
    EXPECT_NE(msg.find("1000"), std::string::npos) << msg;
  }
}

TEST(ValidateShapes, EmptyBlocksAndNonFiniteValues) {
  const Design d = dgp(1, 10);
  EXPECT_THROW(validate_shapes(NdArray::from(d.Y), NdArray::from(Matrix(10, 0)), NdArray::from(d.X)),
               InvalidArgument);
  EXPECT_THROW(validate_shapes(NdArray::from(d.Y), NdArray::from(d.T), NdArray::from(Matrix(10, 0))),
               InvalidArgument);
  Vector bad = d.Y;
  bad[3] = std::nan("");
  EXPECT_THROW(validate_shapes(NdArray::from(bad), NdArray::from(d.T), NdArray::from(d.X)), InvalidArgument);
}

TEST(ValidateShapes, Idempotent) {
  const Design d = dgp(3, 25);
  const ValidatedData once = validate_shapes(NdArray::from(d.Y), NdArray::from(d.T), NdArray::from(d.X));
  const ValidatedData twice =
      validate_shapes(NdArray::from(once.Y), NdArray::from(once.T), NdArray::from(once.X));
  EXPECT_EQ(once.Y, twice.Y);
  EXPECT_EQ(once.T, twice.T);
  EXPECT_EQ(once.X, twice.X);
}

TEST(FitDml, WrongOutcomeRankPropagates) {
  const Design d = dgp(42, 50);
  Rng rng(1);
  EXPECT_THROW(fit_dml(NdArray::from(as_column(d.Y)), NdArray::from(d.T), NdArray::from(d.X), ols_config(), rng),
               ShapeError);
}

// ---------------------------------------------------------------------------
// crossfit_residuals

TEST(Crossfit, OlsResidualMeanNearZero) {
  const Design d = dgp(42);
  Rng rng(1);
  const ResidualSet r = crossfit_residuals(d.Y, d.T, d.X, ols_config(), rng);
  EXPECT_NEAR(r.y_resid.mean(), 0.0, 0.15);
}

TEST(Crossfit, OracleResidualMeanBound) {
  // The oracle residual 1.5x1 - 2x2 + 0.5x3 + e has sd sqrt(7.5); its mean over
  // n = 1000 has sd ~0.087. Check the 0.15 tolerance covers nearly all seeds.
  int inside = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    if (std::abs(oracle_residuals(dgp(seed)).y_resid.mean()) <= 0.15) ++inside;
  }
  EXPECT_GE(inside, 90);
}

TEST(Crossfit, ConstantOutcomeLeavesZeroResidual) {
  const Design d = dgp(5, 200);
  Rng rng(1);
  const ResidualSet r = crossfit_residuals(Vector::Constant(200, 3.25), d.T, d.X, ols_config(), rng);
  EXPECT_LT(r.y_resid.cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Crossfit, TreatmentResidualsTrackTreatments) {
  const Design d = dgp(42);
  for (auto kind : {LearnerKind::kOls, LearnerKind::kRandomForest}) {
    DmlConfig c;
    c.model_y = RegressorSpec::defaults(kind);
    c.model_t = RegressorSpec::defaults(kind);
    Rng rng(2);
    const ResidualSet r = crossfit_residuals(d.Y, d.T, d.X, c, rng);
    for (Index j = 0; j < 3; ++j) {
      EXPECT_GT(correlation(r.t_resid.col(j), d.T.col(j)), 0.99 - (kind == LearnerKind::kRandomForest ? 0.1 : 0.0))
          << learner_name(kind) << " column " << j;
    }
  }
}

TEST(Crossfit, ResidualsAreOutOfFold) {
  const Design d = dgp(8, 120);
  DmlConfig c = ols_config();
  c.n_folds = 3;
  Rng rng(4);
  const ResidualSet r = crossfit_residuals(d.Y, d.T, d.X, c, rng);
  ASSERT_EQ(r.models.size(), 3u);
  // Refit each fold's OLS on the rows outside it and recompute its residuals.
  for (int k = 0; k < 3; ++k) {
    IndexList train;
    IndexList held;
    for (Index i = 0; i < 120; ++i) (r.fold_of_row[static_cast<std::size_t>(i)] == k ? held : train).push_back(i);
    const OlsResult oy = ols_solve(take_rows(d.X, train), take_rows(d.Y, train));
    const Matrix Xh = take_rows(d.X, held);
    const Vector expected = take_rows(d.Y, held) - (Xh * oy.coef).array().matrix() -
                            Vector::Constant(static_cast<Index>(held.size()), oy.intercept);
    EXPECT_LT((take_rows(r.y_resid, held) - expected).cwiseAbs().maxCoeff(), 1e-10) << "fold " << k;
    EXPECT_LT((take_rows(r.y_resid, held) - (take_rows(d.Y, held) - predict(r.models[static_cast<std::size_t>(k)].model_y, Xh)))
                  .cwiseAbs()
                  .maxCoeff(),
              1e-12);
  }
}

TEST(Crossfit, LearnerFailureNamesFoldAndKind) {
  const Design d = dgp(9, 100);
  LassoCvParams p;
  p.max_iter = 1;
  p.tol = 1e-300;
  DmlConfig c;
  c.model_y = RegressorSpec::lasso_cv(p);
  c.model_t = RegressorSpec::ols();
  Rng rng(1);
  try {
    crossfit_residuals(d.Y, d.T, d.X, c, rng);
    FAIL() << "expected FitError";
  } catch (const FitError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("fold"), std::string::npos) << msg;
    EXPECT_NE(msg.find(std::string(learner_name(LearnerKind::kLassoCv))), std::string::npos) << msg;
  }
}

// ---------------------------------------------------------------------------
// final_stage

TEST(FinalStage, OracleResidualsRecoverTheta) {
  const Vector theta = true_theta();
  double worst_a = 0.0;
  double worst_b = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Design d = dgp(seed);
    const FittedDml m = final_stage(oracle_residuals(d), d.X, true);
    worst_a = std::max(worst_a, (m.intercepts - theta).cwiseAbs().maxCoeff());
    worst_b = std::max(worst_b, m.slopes.cwiseAbs().maxCoeff());
  }
  EXPECT_LE(worst_a, 0.12);
  EXPECT_LE(worst_b, 0.12);
}

TEST(FinalStage, NoiselessSingleTreatment) {
  Rng rng(3);
  ResidualSet r;
  r.t_resid = standard_normal_matrix(rng, 40, 1);
  r.y_resid = 2.0 * r.t_resid.col(0);
  const FittedDml m = final_stage(r, standard_normal_matrix(rng, 40, 2), false);
  EXPECT_NEAR(m.intercepts[0], 2.0, 1e-8);
  EXPECT_EQ(m.slopes.cwiseAbs().maxCoeff(), 0.0);
}

TEST(FinalStage, ZeroTargetGivesZeroCoefficients) {
  Rng rng(4);
  ResidualSet r;
  r.t_resid = standard_normal_matrix(rng, 30, 2);
  r.y_resid = Vector::Zero(30);
  const FittedDml m = final_stage(r, standard_normal_matrix(rng, 30, 2), true);
  EXPECT_LT(m.intercepts.cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT(m.slopes.cwiseAbs().maxCoeff(), 1e-14);
}

TEST(FinalStage, DegenerateDesignWarns) {
  Rng rng(5);
  ResidualSet r;
  r.t_resid = Matrix::Zero(20, 2);
  r.t_resid.col(0) = standard_normal_matrix(rng, 20, 1).col(0);
  r.t_resid.col(1) = r.t_resid.col(0);
  r.y_resid = r.t_resid.col(0);
  const FittedDml m = final_stage(r, standard_normal_matrix(rng, 20, 1), false);
  EXPECT_TRUE(m.intercepts.allFinite());
  EXPECT_FALSE(m.warnings.empty());
  EXPECT_NEAR(m.intercepts[0], 0.5, 1e-9);
  EXPECT_NEAR(m.intercepts[1], 0.5, 1e-9);
}

// ---------------------------------------------------------------------------
// fit_dml and queries

TEST(FitDml, RandomForestNuisancesRecoverTheta) {
  const Design d = dgp(42);
  DmlConfig c;  // random forest defaults
  Rng rng(42);
  const FittedDml m = fit_dml(d.Y, d.T, d.X, c, rng);
  EXPECT_LT((m.intercepts - true_theta()).cwiseAbs().maxCoeff(), 0.15) << m.intercepts.transpose();
}

TEST(FitDml, Deterministic) {
  const Design d = dgp(11, 300);
  DmlConfig c;
  c.model_y = RegressorSpec::gradient_boosted_trees();
  c.model_t = RegressorSpec::random_forest();
  Rng a(5), b(5);
  const FittedDml m1 = fit_dml(d.Y, d.T, d.X, c, a);
  const FittedDml m2 = fit_dml(d.Y, d.T, d.X, c, b);
  EXPECT_EQ(m1.intercepts, m2.intercepts);
  EXPECT_EQ(m1.slopes, m2.slopes);
  EXPECT_EQ(m1.covariance, m2.covariance);
}

TEST(FitDml, ConfigValidation) {
  DmlConfig c = ols_config();
  c.n_folds = 1;
  EXPECT_THROW(c.validate(), InvalidArgument);
}

namespace {

FittedDml hand_model() {
  FittedDml m;
  m.d_t = 2;
  m.d_x = 2;
  m.intercepts = Vector(2);
  m.intercepts << 1.0, -3.0;
  m.slopes = Matrix(2, 2);
  m.slopes << 0.5, 0.0, 0.0, 2.0;
  m.covariance = Matrix::Identity(6, 6) * 0.01;
  return m;
}

}  // namespace

TEST(ConstMarginalEffect, ZeroSlopesGiveIntercepts) {
  FittedDml m = hand_model();
  m.slopes.setZero();
  Rng rng(1);
  const Matrix X = standard_normal_matrix(rng, 6, 2);
  const Matrix cme = const_marginal_effect(m, X);
  for (Index i = 0; i < 6; ++i) EXPECT_EQ(Vector(cme.row(i).transpose()), m.intercepts);
}

TEST(ConstMarginalEffect, ZeroRowGivesIntercept) {
  const FittedDml m = hand_model();
  const Matrix cme = const_marginal_effect(m, Matrix::Zero(1, 2));
  EXPECT_EQ(Vector(cme.row(0).transpose()), m.intercepts);
}

TEST(ConstMarginalEffect, AffineInControls) {
  const FittedDml m = hand_model();
  Matrix X(1, 2);
  X << 2.0, 0.5;
  const Matrix cme = const_marginal_effect(m, X);
  EXPECT_DOUBLE_EQ(cme(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(cme(0, 1), -2.0);
  EXPECT_THROW(const_marginal_effect(m, Matrix::Zero(1, 3)), ShapeError);
}

TEST(Effect, NullContrastIsZero) {
  const FittedDml m = hand_model();
  Rng rng(2);
  const Matrix X = standard_normal_matrix(rng, 5, 2);
  EXPECT_EQ(effect(m, X, 0.7, 0.7), Vector::Zero(5));
  EXPECT_EQ(ate(m, X, 0.7, 0.7), 0.0);
}

TEST(Effect, UnitContrastSelectsColumn) {
  const FittedDml m = hand_model();
  Rng rng(3);
  const Matrix X = standard_normal_matrix(rng, 5, 2);
  const Matrix T0 = standard_normal_matrix(rng, 5, 2);
  Matrix T1 = T0;
  T1.col(1).array() += 1.0;
  const Vector e = effect(m, X, T0, T1);
  const Matrix cme = const_marginal_effect(m, X);
  EXPECT_LT((e - cme.col(1)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Effect, BroadcastMismatchIsShapeError) {
  const FittedDml m = hand_model();
  const Matrix X = Matrix::Zero(4, 2);
  EXPECT_THROW(effect(m, X, Matrix::Zero(3, 2), 1.0), ShapeError);
  EXPECT_THROW(effect(m, X, 0.0, Matrix::Zero(4, 3)), ShapeError);
}

TEST(Ate, SingleRowEqualsThatRowsEffect) {
  const FittedDml m = hand_model();
  Matrix X(1, 2);
  X << 0.3, -1.1;
  EXPECT_DOUBLE_EQ(ate(m, X, 0.0, 1.0), effect(m, X, 0.0, 1.0)[0]);
}

TEST(Ate, DgpUnitContrastNearZero) {
  const Design d = dgp(42);
  Rng rng(6);
  const FittedDml m = fit_dml(d.Y, d.T, d.X, ols_config(), rng);
  const Vector e = effect(m, d.X, 0.0, 1.0);
  EXPECT_LT(std::abs(e.mean()), 0.2);
  EXPECT_LT(std::abs(ate(m, d.X, 0.0, 1.0)), 0.2);
  const Matrix cme = const_marginal_effect(m, d.X);
  EXPECT_LT((cme.colwise().mean().transpose() - true_theta()).cwiseAbs().maxCoeff(), 0.15);
}

TEST(DispersionInterval, ConstantColumnHasZeroWidth) {
  const EffectInterval i = dispersion_interval(Matrix::Constant(5, 1, 2.5), 0);
  EXPECT_EQ(i.mean, 2.5);
  EXPECT_EQ(i.lower, 2.5);
  EXPECT_EQ(i.upper, 2.5);
}

TEST(DispersionInterval, HandComputedPair) {
  Matrix e(2, 1);
  e << 0.0, 2.0;
  const EffectInterval i = dispersion_interval(e, 0);
  EXPECT_DOUBLE_EQ(i.mean, 1.0);
  EXPECT_DOUBLE_EQ(i.lower, 1.0 - 1.96 * std::sqrt(2.0));
  EXPECT_DOUBLE_EQ(i.upper, 1.0 + 1.96 * std::sqrt(2.0));
}

TEST(DispersionInterval, RejectsSingleRow) { EXPECT_THROW(dispersion_interval(Matrix::Zero(1, 1), 0), InvalidArgument); }

TEST(DispersionInterval, DgpEffectsStayNarrow) {
  const Design d = dgp(42);
  Rng rng(7);
  const FittedDml m = fit_dml(d.Y, d.T, d.X, DmlConfig{}, rng);
  const Matrix cme = const_marginal_effect(m, d.X);
  for (Index j = 0; j < 3; ++j) {
    const EffectInterval i = dispersion_interval(cme, j);
    EXPECT_LT(i.upper - i.lower, 1.0) << "treatment " << j;
  }
}

TEST(AnalyticInterval, OracleHalfWidth) {
  const Design d = dgp(42);
  const FittedDml m = final_stage(oracle_residuals(d), d.X, true);
  for (Index j = 0; j < 3; ++j) {
    const EffectInterval i = analytic_coef_interval(m, j);
    const double half = 0.5 * (i.upper - i.lower);
    EXPECT_GE(half, 0.05);
    EXPECT_LE(half, 0.12);
    EXPECT_DOUBLE_EQ(i.mean, m.intercepts[j]);
  }
}

TEST(AnalyticInterval, ZeroNoiseCollapses) {
  const Design d = dgp(42, 1000, 0.0);
  const FittedDml m = final_stage(oracle_residuals(d), d.X, true);
  for (Index j = 0; j < 3; ++j) {
    const EffectInterval i = analytic_coef_interval(m, j);
    EXPECT_LT(0.5 * (i.upper - i.lower), 1e-6);
  }
}

TEST(AnalyticInterval, MonteCarloCoverage) {
  const Vector theta = true_theta();
  int covered = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Design d = dgp(1000 + seed);
    const FittedDml m = final_stage(oracle_residuals(d), d.X, true);
    const EffectInterval i = analytic_coef_interval(m, 0);
    if (i.lower <= theta[0] && theta[0] <= i.upper) ++covered;
  }
  EXPECT_GE(covered, 90);
}
