#include "flipaudit/identifiers/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "flipaudit/error.hpp"
#include "flipaudit/kernels/kernels.hpp"
#include "flipaudit/util/seed.hpp"

namespace flipaudit::identify {

std::vector<double> FeatureMatrix::row(std::size_t i) const {
  std::vector<double> out(columns.size());
  for (std::size_t j = 0; j < columns.size(); ++j) out[j] = columns[j][i];
  return out;
}

double RegressionTree::predict(std::span<const double> row) const {
  int node = 0;
  while (nodes_[static_cast<std::size_t>(node)].feature >= 0) {
    const TreeNode& n = nodes_[static_cast<std::size_t>(node)];
    node = row[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left : n.right;
  }
  return nodes_[static_cast<std::size_t>(node)].value;
}

double RegressionTree::predict(const FeatureMatrix& x, std::size_t row) const {
  int node = 0;
  while (nodes_[static_cast<std::size_t>(node)].feature >= 0) {
    const TreeNode& n = nodes_[static_cast<std::size_t>(node)];
    node = x.columns[static_cast<std::size_t>(n.feature)][row] < n.threshold ? n.left : n.right;
  }
  return nodes_[static_cast<std::size_t>(node)].value;
}

int RegressionTree::depth() const {
  std::vector<int> d(nodes_.size(), 0);
  int best = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].feature >= 0) {
      d[static_cast<std::size_t>(nodes_[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes_[i].right)] = d[i] + 1;
    }
    best = std::max(best, d[i]);
  }
  return best;
}

double GbdtModel::predict_logit(std::span<const double> row) const {
  double f = base_logit_;
  for (const auto& t : trees_) f += t.predict(row);
  return f;
}

double GbdtModel::predict_proba(std::span<const double> row) const {
  const double f = predict_logit(row);
  double p;
  kernels::active().logistic(&f, &p, 1);
  return p;
}

std::vector<double> GbdtModel::predict_proba(const FeatureMatrix& x) const {
  std::vector<double> f(x.rows, base_logit_);
  for (const auto& t : trees_) {
    for (std::size_t i = 0; i < x.rows; ++i) f[i] += t.predict(x, i);
  }
  std::vector<double> p(x.rows);
  kernels::logistic(f, p);
  return p;
}

namespace {

struct SplitChoice {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

class TreeBuilder {
 public:
  TreeBuilder(const FeatureMatrix& x, const std::vector<std::vector<std::size_t>>& sorted,
              std::span<const double> residual, const GbdtParams& params)
      : x_(x), sorted_(sorted), residual_(residual), params_(params), in_node_(x.rows, 0) {}

  RegressionTree build(const std::vector<std::size_t>& rows) {
    nodes_.clear();
    grow(rows, 0);
    return RegressionTree(std::move(nodes_));
  }

 private:
  int grow(const std::vector<std::size_t>& rows, int depth) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    double sum = 0.0;
    for (std::size_t i : rows) sum += residual_[i];
    const double mean = rows.empty() ? 0.0 : sum / static_cast<double>(rows.size());

    SplitChoice split;
    if (depth < params_.max_depth && rows.size() >= 2 * static_cast<std::size_t>(params_.min_leaf)) {
      split = best_split(rows, sum);
    }
    if (split.feature < 0) {
      nodes_[static_cast<std::size_t>(id)].value = params_.learning_rate * mean;
      return id;
    }

    std::vector<std::size_t> left, right;
    const auto& col = x_.columns[static_cast<std::size_t>(split.feature)];
    for (std::size_t i : rows) (col[i] < split.threshold ? left : right).push_back(i);
    const int l = grow(left, depth + 1);
    const int r = grow(right, depth + 1);
    TreeNode& node = nodes_[static_cast<std::size_t>(id)];
    node.feature = split.feature;
    node.threshold = split.threshold;
    node.left = l;
    node.right = r;
    return id;
  }

  SplitChoice best_split(const std::vector<std::size_t>& rows, double total) {
    for (std::size_t i : rows) in_node_[i] = 1;
    const auto n = static_cast<double>(rows.size());
    const double parent = total * total / n;
    const auto min_leaf = static_cast<std::size_t>(params_.min_leaf);

    SplitChoice best;
    // Gains below this are rounding noise (e.g. constant residuals).
    double best_gain = 1e-12 * std::max(1.0, parent);
    for (std::size_t f = 0; f < x_.cols(); ++f) {
      const auto& col = x_.columns[f];
      std::size_t count_left = 0;
      double sum_left = 0.0;
      double prev_value = 0.0;
      bool have_prev = false;
      for (std::size_t i : sorted_[f]) {
        if (!in_node_[i]) continue;
        const double v = col[i];
        if (have_prev && v != prev_value && count_left >= min_leaf && rows.size() - count_left >= min_leaf) {
          const double sum_right = total - sum_left;
          const auto nl = static_cast<double>(count_left);
          const double gain = sum_left * sum_left / nl + sum_right * sum_right / (n - nl) - parent;
          if (gain > best_gain) {
            best_gain = gain;
            best.feature = static_cast<int>(f);
            double mid = prev_value + (v - prev_value) / 2.0;
            if (!(mid > prev_value)) mid = v;
            best.threshold = mid;
            best.gain = gain;
          }
        }
        sum_left += residual_[i];
        ++count_left;
        prev_value = v;
        have_prev = true;
      }
    }
    for (std::size_t i : rows) in_node_[i] = 0;
    return best;
  }

  const FeatureMatrix& x_;
  const std::vector<std::vector<std::size_t>>& sorted_;
  std::span<const double> residual_;
  const GbdtParams& params_;
  std::vector<char> in_node_;
  std::vector<TreeNode> nodes_;
};

}  // namespace

GbdtModel fit_gbdt(const FeatureMatrix& x, std::span<const int> y, const GbdtParams& params,
                   std::uint64_t seed) {
  const std::size_t n = y.size();
  if (n == 0) throw InputError("fit_gbdt: empty training data");
  if (x.rows != n) throw InputError(fmt::format("fit_gbdt: {} feature rows for {} labels", x.rows, n));
  for (const auto& c : x.columns) {
    if (c.size() != n) throw InputError("fit_gbdt: ragged feature matrix");
  }
  if (params.n_rounds < 0 || params.max_depth < 0 || params.min_leaf < 1 || !(params.learning_rate > 0) ||
      !(params.subsample > 0.0 && params.subsample <= 1.0)) {
    throw InputError("fit_gbdt: invalid hyperparameters");
  }

  std::vector<double> yd(n);
  double positives = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (y[i] != 0 && y[i] != 1) throw InputError("fit_gbdt: labels must be 0 or 1");
    yd[i] = y[i];
    positives += y[i];
  }
  const double base_rate = std::clamp(positives / static_cast<double>(n), 1e-12, 1.0 - 1e-12);
  const double base_logit = std::log(base_rate / (1.0 - base_rate));

  std::vector<std::vector<std::size_t>> sorted(x.cols());
  for (std::size_t f = 0; f < x.cols(); ++f) {
    auto& idx = sorted[f];
    idx.resize(n);
    std::iota(idx.begin(), idx.end(), 0);
    const auto& col = x.columns[f];
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return col[a] < col[b]; });
  }

  std::vector<double> f(n, base_logit), p(n), r(n);
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  const auto n_sample = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(params.subsample * static_cast<double>(n))));

  std::vector<RegressionTree> trees;
  trees.reserve(static_cast<std::size_t>(params.n_rounds));
  TreeBuilder builder(x, sorted, r, params);
  for (int round = 0; round < params.n_rounds; ++round) {
    kernels::logistic(f, p);
    kernels::residual(yd, p, r);

    std::vector<std::size_t> rows = all;
    if (n_sample < n) {
      Rng rng = make_rng(seed, "gbdt-subsample", {static_cast<std::uint64_t>(round)});
      for (std::size_t i = 0; i < n_sample; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, n - 1);
        std::swap(rows[i], rows[pick(rng)]);
      }
      rows.resize(n_sample);
      std::sort(rows.begin(), rows.end());
    }

    RegressionTree tree = builder.build(rows);
    for (std::size_t i = 0; i < n; ++i) f[i] += tree.predict(x, i);
    trees.push_back(std::move(tree));
  }
  return GbdtModel(base_logit, std::move(trees));
}

}  // namespace flipaudit::identify
