#pragma once

// Brute-force reference implementations. Deliberately naive: nothing here
// shares code with the library.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <set>
#include <vector>

namespace oracle {

// Pairwise concordance, ties counted as one half, as an exact fraction.
struct Fraction {
  std::int64_t num2 = 0;  // twice the numerator (ties contribute 1)
  std::int64_t den = 0;
  double value() const { return static_cast<double>(num2) / (2.0 * static_cast<double>(den)); }
};

inline Fraction auroc_pairs(const std::vector<double>& s, const std::vector<int>& y) {
  Fraction f;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (y[i] != 1) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[j] != 0) continue;
      f.den += 1;
      if (s[i] > s[j]) f.num2 += 2;
      else if (s[i] == s[j]) f.num2 += 1;
    }
  }
  return f;
}

inline double auroc(const std::vector<double>& s, const std::vector<int>& y) { return auroc_pairs(s, y).value(); }

struct Cut {
  double threshold;
  double j;
};

// Every candidate cut-point scanned by direct counting.
inline Cut youden_scan(const std::vector<double>& s, const std::vector<int>& y) {
  std::set<double> distinct(s.begin(), s.end());
  std::vector<double> v(distinct.begin(), distinct.end());
  std::vector<double> cands = {-std::numeric_limits<double>::infinity()};
  for (std::size_t i = 0; i + 1 < v.size(); ++i) cands.push_back(v[i] + (v[i + 1] - v[i]) / 2.0);
  cands.push_back(std::numeric_limits<double>::infinity());
  double P = 0, N = 0;
  for (int l : y) (l ? P : N) += 1;

  Cut best{0, -2};
  std::int64_t best_num = std::numeric_limits<std::int64_t>::min();
  for (double t : cands) {
    std::int64_t tp = 0, fp = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] > t) (y[i] ? tp : fp) += 1;
    }
    // J * P * N as an integer, so ties compare exactly
    const std::int64_t num = tp * static_cast<std::int64_t>(N) - fp * static_cast<std::int64_t>(P);
    if (num > best_num) {
      best_num = num;
      best = {t, tp / P - fp / N};
    }
  }
  return best;
}

inline double f1(const std::vector<int>& pred, const std::vector<int>& y) {
  double tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (pred[i] && y[i]) tp++;
    if (pred[i] && !y[i]) fp++;
    if (!pred[i] && y[i]) fn++;
  }
  if (tp + fp + fn == 0) return 1.0;
  return 2 * tp / (2 * tp + fp + fn);
}

// A study list realising given sub-matrix counts. The flipped partition comes
// first with likelihood 1, the rest get likelihood 0.
struct Studies {
  std::vector<int> pred, label, wrong;
  std::vector<double> likelihood;
};

inline Studies reconstruct(std::size_t kn01, std::size_t kn11, std::size_t kp01, std::size_t kp11,
                           std::size_t rn00, std::size_t rn10, std::size_t rp00, std::size_t rp10) {
  Studies st;
  auto add = [&](std::size_t count, int label, int wrong, double like) {
    for (std::size_t i = 0; i < count; ++i) {
      st.label.push_back(label);
      st.wrong.push_back(wrong);
      st.pred.push_back(wrong ? 1 - label : label);
      st.likelihood.push_back(like);
    }
  };
  add(kn01, 0, 0, 1.0);
  add(kn11, 0, 1, 1.0);
  add(kp01, 1, 0, 1.0);
  add(kp11, 1, 1, 1.0);
  add(rn00, 0, 0, 0.0);
  add(rn10, 0, 1, 0.0);
  add(rp00, 1, 0, 0.0);
  add(rp10, 1, 1, 0.0);
  return st;
}

// Ancestors by depth-first search over the raw edge list.
template <typename Edge>
std::set<int> reachable_up(const std::vector<Edge>& edges, int start) {
  std::set<int> seen;
  std::vector<int> stack = {start};
  while (!stack.empty()) {
    int cur = stack.back();
    stack.pop_back();
    for (const auto& e : edges) {
      int parent = static_cast<int>(e.first), child = static_cast<int>(e.second);
      if (child == cur && seen.insert(parent).second) stack.push_back(parent);
    }
  }
  return seen;
}

template <typename Edge>
std::set<int> reachable_down(const std::vector<Edge>& edges, int start) {
  std::set<int> seen;
  std::vector<int> stack = {start};
  while (!stack.empty()) {
    int cur = stack.back();
    stack.pop_back();
    for (const auto& e : edges) {
      int parent = static_cast<int>(e.first), child = static_cast<int>(e.second);
      if (parent == cur && seen.insert(child).second) stack.push_back(child);
    }
  }
  return seen;
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace oracle
