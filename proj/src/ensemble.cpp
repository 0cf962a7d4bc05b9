#include <algorithm>
#include <numeric>

#include "dmlkit/errors.hpp"
#include "dmlkit/learners.hpp"

namespace dmlkit {

TreeEnsemble fit_random_forest(const ForestParams& p, const Matrix& X, const Vector& y, Rng& rng) {
  if (X.rows() != y.size()) throw ShapeError("fit_random_forest: X/y row mismatch");
  const Index n = X.rows();
  const int d = static_cast<int>(X.cols());

  TreeParams tree_params;
  tree_params.max_depth = p.max_depth;
  tree_params.min_samples_leaf = p.min_samples_leaf;
  tree_params.max_features = p.max_features > 0 ? p.max_features : std::max(1, d / 3);

  TreeEnsemble forest;
  forest.base = 0.0;
  forest.scale = 1.0 / static_cast<double>(p.n_trees);
  forest.trees.reserve(static_cast<std::size_t>(p.n_trees));

  IndexList rows(static_cast<std::size_t>(n));
  for (int t = 0; t < p.n_trees; ++t) {
    Rng tree_rng = rng.derive(static_cast<std::uint64_t>(t));
    if (p.bootstrap) {
      for (auto& r : rows) r = static_cast<Index>(tree_rng.below(static_cast<std::uint64_t>(n)));
    } else {
      std::iota(rows.begin(), rows.end(), Index{0});
    }
    forest.trees.push_back(RegressionTree::grow(X, y, rows, tree_params, tree_rng));
  }
  return forest;
}

TreeEnsemble fit_gradient_boosting(const BoostingParams& p, const Matrix& X, const Vector& y) {
  if (X.rows() != y.size()) throw ShapeError("fit_gradient_boosting: X/y row mismatch");
  const Index n = X.rows();

  TreeParams tree_params;
  tree_params.max_depth = p.max_depth;
  tree_params.min_samples_leaf = p.min_samples_leaf;
  tree_params.max_features = 0;

  TreeEnsemble model;
  model.base = y.mean();
  model.scale = p.learning_rate;
  model.trees.reserve(static_cast<std::size_t>(p.n_rounds));

  IndexList rows(static_cast<std::size_t>(n));
  std::iota(rows.begin(), rows.end(), Index{0});
  Vector fitted = Vector::Constant(n, model.base);
  // Trees see every feature and every row, so the generator is never consulted.
  Rng unused(0);
  for (int round = 0; round < p.n_rounds; ++round) {
    const Vector gradient = y - fitted;  // negative gradient of squared error / 2
    RegressionTree tree = RegressionTree::grow(X, gradient, rows, tree_params, unused);
    for (Index i = 0; i < n; ++i) fitted[i] += p.learning_rate * tree.predict_row(X.row(i).data());
    model.trees.push_back(std::move(tree));
  }
  return model;
}

Vector predict_ensemble(const TreeEnsemble& model, const Matrix& X) {
  Vector out(X.rows());
  for (Index i = 0; i < X.rows(); ++i) {
    const double* row = X.row(i).data();
    double acc = 0.0;
    for (const auto& tree : model.trees) acc += tree.predict_row(row);
    out[i] = model.base + model.scale * acc;
  }
  return out;
}

}  // namespace dmlkit
