#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace flipaudit::identify {

// Column-major feature matrix.
struct FeatureMatrix {
  std::size_t rows = 0;
  std::vector<std::vector<double>> columns;

  std::size_t cols() const { return columns.size(); }
  std::vector<double> row(std::size_t i) const;
};

struct GbdtParams {
  int n_rounds = 100;
  double learning_rate = 0.1;
  int max_depth = 3;
  int min_leaf = 5;
  // Fraction of rows drawn (without replacement) per round; 1 uses every row
  // and makes the fit independent of the seed.
  double subsample = 1.0;
};

struct TreeNode {
  int feature = -1;  // -1 for a leaf
  double threshold = 0.0;  // rows with x < threshold go left
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaf contribution to the logit, learning rate applied
};

class RegressionTree {
 public:
  explicit RegressionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}

  double predict(std::span<const double> row) const;
  double predict(const FeatureMatrix& x, std::size_t row) const;
  const std::vector<TreeNode>& nodes() const { return nodes_; }
  int depth() const;

 private:
  std::vector<TreeNode> nodes_;
};

// Additive ensemble on the logit scale.
class GbdtModel {
 public:
  GbdtModel(double base_logit, std::vector<RegressionTree> trees)
      : base_logit_(base_logit), trees_(std::move(trees)) {}

  double predict_logit(std::span<const double> row) const;
  double predict_proba(std::span<const double> row) const;
  std::vector<double> predict_proba(const FeatureMatrix& x) const;

  double base_logit() const { return base_logit_; }
  const std::vector<RegressionTree>& trees() const { return trees_; }

 private:
  double base_logit_;
  std::vector<RegressionTree> trees_;
};

// Gradient boosting on the logistic loss: each round fits a depth-limited
// least-squares regression tree to the residuals y - p by exact greedy search
// over every feature (variance-reduction criterion), with leaf value equal to
// the learning rate times the mean residual. Starts from the base-rate logit.
GbdtModel fit_gbdt(const FeatureMatrix& x, std::span<const int> y, const GbdtParams& params,
                   std::uint64_t seed);

}  // namespace flipaudit::identify
