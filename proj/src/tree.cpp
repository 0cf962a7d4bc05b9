#include "dmlkit/tree.hpp"

#include <algorithm>
#include <numeric>

#include "dmlkit/errors.hpp"

namespace dmlkit {
namespace {

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double score = 0.0;  // sumL^2/nL + sumR^2/nR; larger is better
};

class Grower {
 public:
  Grower(const Matrix& X, const Vector& y, const TreeParams& params, Rng& rng,
         std::vector<RegressionTree::Node>& nodes)
      : X_(X), y_(y), params_(params), rng_(rng), nodes_(nodes) {
    const int d = static_cast<int>(X.cols());
    n_try_ = (params.max_features <= 0 || params.max_features >= d) ? d : params.max_features;
    features_.resize(static_cast<std::size_t>(d));
  }

  int build(std::span<Index> idx, int depth) {
    const int node_id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();

    double sum = 0.0;
    double lo = y_[idx.front()];
    double hi = lo;
    for (Index i : idx) {
      sum += y_[i];
      lo = std::min(lo, y_[i]);
      hi = std::max(hi, y_[i]);
    }
    const auto m = static_cast<Index>(idx.size());
    nodes_[static_cast<std::size_t>(node_id)].value = sum / static_cast<double>(m);

    if (depth >= params_.max_depth || m < 2 * params_.min_samples_leaf || lo == hi) return node_id;

    const Split best = find_split(idx);
    if (best.feature < 0) return node_id;

    auto mid = std::partition(idx.begin(), idx.end(),
                              [&](Index i) { return X_(i, best.feature) <= best.threshold; });
    const auto n_left = static_cast<std::size_t>(mid - idx.begin());
    const int left = build(idx.subspan(0, n_left), depth + 1);
    const int right = build(idx.subspan(n_left), depth + 1);

    auto& node = nodes_[static_cast<std::size_t>(node_id)];
    node.feature = best.feature;
    node.threshold = best.threshold;
    node.left = left;
    node.right = right;
    return node_id;
  }

 private:
  Split find_split(std::span<const Index> idx) {
    const int d = static_cast<int>(X_.cols());
    std::iota(features_.begin(), features_.end(), 0);
    if (n_try_ < d) {
      for (int i = 0; i < n_try_; ++i) {
        const auto j = i + static_cast<int>(rng_.below(static_cast<std::uint64_t>(d - i)));
        std::swap(features_[static_cast<std::size_t>(i)], features_[static_cast<std::size_t>(j)]);
      }
      std::sort(features_.begin(), features_.begin() + n_try_);
    }

    const std::size_t m = idx.size();
    const auto min_leaf = static_cast<std::size_t>(params_.min_samples_leaf);
    double total = 0.0;
    for (Index i : idx) total += y_[i];

    Split best;
    bool found = false;
    sorted_.resize(m);
    for (int t = 0; t < n_try_; ++t) {
      const int f = features_[static_cast<std::size_t>(t)];
      for (std::size_t k = 0; k < m; ++k) sorted_[k] = {X_(idx[k], f), y_[idx[k]]};
      std::sort(sorted_.begin(), sorted_.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      double left_sum = 0.0;
      for (std::size_t k = 0; k + 1 < m; ++k) {
        left_sum += sorted_[k].second;
        const std::size_t n_left = k + 1;
        const std::size_t n_right = m - n_left;
        if (n_left < min_leaf) continue;
        if (n_right < min_leaf) break;
        const double a = sorted_[k].first;
        const double b = sorted_[k + 1].first;
        if (!(a < b)) continue;
        const double right_sum = total - left_sum;
        const double score = left_sum * left_sum / static_cast<double>(n_left) +
                             right_sum * right_sum / static_cast<double>(n_right);
        if (!found || score > best.score) {
          double threshold = 0.5 * (a + b);
          if (!(threshold < b)) threshold = a;
          best = {f, threshold, score};
          found = true;
        }
      }
    }
    return best;
  }

  const Matrix& X_;
  const Vector& y_;
  const TreeParams& params_;
  Rng& rng_;
  std::vector<RegressionTree::Node>& nodes_;
  int n_try_ = 0;
  std::vector<int> features_;
  std::vector<std::pair<double, double>> sorted_;
};

}  // namespace

RegressionTree RegressionTree::grow(const Matrix& X, const Vector& y, std::span<const Index> rows,
                                    const TreeParams& params, Rng& rng) {
  if (rows.empty()) throw InvalidArgument("RegressionTree::grow: no rows");
  if (params.max_depth < 1 || params.min_samples_leaf < 1) {
    throw InvalidArgument("RegressionTree::grow: max_depth and min_samples_leaf must be >= 1");
  }
  RegressionTree tree;
  IndexList work(rows.begin(), rows.end());
  Grower grower(X, y, params, rng, tree.nodes_);
  grower.build(work, 0);
  return tree;
}

double RegressionTree::predict_row(const double* x) const {
  int at = 0;
  for (;;) {
    const Node& node = nodes_[static_cast<std::size_t>(at)];
    if (node.feature < 0) return node.value;
    at = x[node.feature] <= node.threshold ? node.left : node.right;
  }
}

int RegressionTree::depth() const {
  std::vector<int> level(nodes_.size(), 0);
  int deepest = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& node = nodes_[i];
    deepest = std::max(deepest, level[i]);
    if (node.feature >= 0) {
      level[static_cast<std::size_t>(node.left)] = level[i] + 1;
      level[static_cast<std::size_t>(node.right)] = level[i] + 1;
    }
  }
  return deepest;
}

int RegressionTree::leaf_count() const {
  return static_cast<int>(std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.feature < 0; }));
}

}  // namespace dmlkit
