#pragma once

#include <span>
#include <vector>

#include "dmlkit/numeric.hpp"

namespace dmlkit {

struct TreeParams {
  int max_depth = 32;
  int min_samples_leaf = 1;
  int max_features = 0;  // features examined per split; 0 or >= d means all
};

/// Binary CART regression tree stored as a flat node array; node 0 is the root.
class RegressionTree {
 public:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;  // rows with x[feature] <= threshold go left
    int left = -1;
    int right = -1;
    double value = 0.0;
  };

  /// Grows a squared-error tree on the rows listed in `rows` (duplicates allowed,
  /// which is how bootstrap samples are passed). Candidate thresholds are the
  /// midpoints between consecutive distinct values. Ties between equally good
  /// splits resolve to the lowest feature index, then the lowest threshold.
  static RegressionTree grow(const Matrix& X, const Vector& y, std::span<const Index> rows,
                             const TreeParams& params, Rng& rng);

  double predict_row(const double* x) const;
  const std::vector<Node>& nodes() const { return nodes_; }
  int depth() const;
  int leaf_count() const;

 private:
  std::vector<Node> nodes_;
};

}  // namespace dmlkit
