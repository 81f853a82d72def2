#pragma once

// Naive reference implementations used only by the tests. They share no code
// with the library: plain loops over std::vector<double>, no Eigen.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;
using Mat = std::vector<std::vector<double>>;  // row-major rows

struct Net {
  Mat w1;
  Vec b1;
  Mat w2;
  Vec b2;
};

/// Mean cross-entropy of the relu -> L2 -> linear -> softmax network, written
/// out term by term.
inline double loss(const Net& net, const Mat& xs, const std::vector<std::size_t>& labels) {
  double total = 0.0;
  for (std::size_t s = 0; s < xs.size(); ++s) {
    Vec h(net.w1.size());
    for (std::size_t i = 0; i < h.size(); ++i) {
      double a = net.b1[i];
      for (std::size_t j = 0; j < xs[s].size(); ++j) a += net.w1[i][j] * xs[s][j];
      h[i] = a > 0 ? a : 0;
    }
    double norm = 0;
    for (double v : h) norm += v * v;
    norm = std::max(std::sqrt(norm), 1e-12);
    Vec z(net.w2.size());
    for (std::size_t k = 0; k < z.size(); ++k) {
      double a = net.b2[k];
      for (std::size_t i = 0; i < h.size(); ++i) a += net.w2[k][i] * h[i] / norm;
      z[k] = a;
    }
    double denom = 0;
    for (double v : z) denom += std::exp(v);
    total += -std::log(std::exp(z[labels[s]]) / denom);
  }
  return total / static_cast<double>(xs.size());
}

/// Pre-activations of the hidden layer, to keep finite differences away from
/// ReLU kinks.
inline double min_abs_preactivation(const Net& net, const Mat& xs) {
  double best = 1e300;
  for (const auto& x : xs) {
    for (std::size_t i = 0; i < net.w1.size(); ++i) {
      double a = net.b1[i];
      for (std::size_t j = 0; j < x.size(); ++j) a += net.w1[i][j] * x[j];
      best = std::min(best, std::abs(a));
    }
  }
  return best;
}

/// AP straight from the definition: for every relevant item, the fraction of
/// relevant items ranked at or above it, divided by its rank. Ranks come from
/// pairwise comparisons (higher score first, earlier index on ties).
inline double brute_force_ap(const std::vector<float>& scores, const std::vector<bool>& relevant) {
  const std::size_t n = scores.size();
  auto before = [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b] || (scores[a] == scores[b] && a < b);
  };
  std::size_t num_relevant = 0;
  for (bool r : relevant) num_relevant += r;
  if (num_relevant == 0) return -1.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!relevant[i]) continue;
    std::size_t rank = 1, relevant_at_or_above = 1;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i && before(j, i)) {
        ++rank;
        if (relevant[j]) ++relevant_at_or_above;
      }
    }
    sum += static_cast<double>(relevant_at_or_above) / static_cast<double>(rank);
  }
  return sum / static_cast<double>(num_relevant);
}

inline double dot(const std::vector<float>& a, const std::vector<float>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * b[i];
  return s;
}

}  // namespace oracle
