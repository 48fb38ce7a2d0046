#pragma once

// Independent reference implementations used by the tests. They favour
// obviousness over speed and share no code with the library.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "rmsd/task_model.hpp"

namespace oracle {

// Covered length of a set of intervals by sweeping sorted breakpoints.
inline double temporal_iou(double a0, double a1, double b0, double b1) {
  std::set<double> cuts{a0, a1, b0, b1};
  std::vector<double> xs(cuts.begin(), cuts.end());
  double inter = 0.0, uni = 0.0;
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    const double mid = 0.5 * (xs[i] + xs[i + 1]);
    const bool in_a = a0 <= mid && mid <= a1;
    const bool in_b = b0 <= mid && mid <= b1;
    const double len = xs[i + 1] - xs[i];
    if (in_a && in_b) inter += len;
    if (in_a || in_b) uni += len;
  }
  if (uni == 0.0) return (a0 == b0 && a1 == b1) ? 1.0 : 0.0;
  return inter / uni;
}

// Area by coordinate compression: classify every grid cell between
// consecutive box edges.
inline double spatial_iou(const rmsd::SpatialBox& a, const rmsd::SpatialBox& b) {
  std::set<double> xs{a.x1, a.x2, b.x1, b.x2}, ys{a.y1, a.y2, b.y1, b.y2};
  const std::vector<double> X(xs.begin(), xs.end()), Y(ys.begin(), ys.end());
  auto inside = [](const rmsd::SpatialBox& r, double x, double y) {
    return r.x1 <= x && x <= r.x2 && r.y1 <= y && y <= r.y2;
  };
  double inter = 0.0, uni = 0.0;
  for (std::size_t i = 0; i + 1 < X.size(); ++i) {
    for (std::size_t j = 0; j + 1 < Y.size(); ++j) {
      const double cx = 0.5 * (X[i] + X[i + 1]), cy = 0.5 * (Y[j] + Y[j + 1]);
      const double area = (X[i + 1] - X[i]) * (Y[j + 1] - Y[j]);
      const bool ia = inside(a, cx, cy), ib = inside(b, cx, cy);
      if (ia && ib) inter += area;
      if (ia || ib) uni += area;
    }
  }
  if (uni == 0.0) return a == b ? 1.0 : 0.0;
  return inter / uni;
}

// Plain recursive definition with a full memo table.
inline std::size_t edit_distance(const std::string& s, const std::string& t) {
  std::vector<std::vector<long>> memo(s.size() + 1, std::vector<long>(t.size() + 1, -1));
  std::function<long(std::size_t, std::size_t)> d = [&](std::size_t i, std::size_t j) -> long {
    if (i == 0) return static_cast<long>(j);
    if (j == 0) return static_cast<long>(i);
    long& m = memo[i][j];
    if (m >= 0) return m;
    m = std::min({d(i - 1, j) + 1, d(i, j - 1) + 1, d(i - 1, j - 1) + (s[i - 1] == t[j - 1] ? 0 : 1)});
    return m;
  };
  return static_cast<std::size_t>(d(s.size(), t.size()));
}

inline double edit_similarity(const std::string& s, const std::string& t) {
  const std::size_t m = std::max(s.size(), t.size());
  return m == 0 ? 1.0 : 1.0 - static_cast<double>(edit_distance(s, t)) / static_cast<double>(m);
}

inline int epsilon_accuracy(double pred, double gt, double eps) {
  const double tol = gt > 1.0 || gt < -1.0 ? eps * std::fabs(gt) : eps;
  return std::fabs(pred - gt) <= tol ? 1 : 0;
}

template <class Rng>
std::string random_string(Rng& rng, std::size_t max_len) {
  static const std::string alphabet = "abcab";
  std::string s(rng() % (max_len + 1), 'a');
  for (auto& c : s) c = alphabet[rng() % alphabet.size()];
  return s;
}

// Raw strings around the response grammar: well-formed templates with a few
// random edits, plus pure noise.
template <class Rng>
std::string fuzz_response(Rng& rng) {
  static const std::vector<std::string> templates = {
      "<answer>B</answer>",
      "<think>why</think><answer>yes</answer>",
      "<answer><t>1.0</t> <t>4.5</t></answer>",
      "<answer><t>5.0</t> to <t>2.0</t></answer>",
      "<answer>[0.1, 0.2, 0.5, 0.6]</answer>",
      "<answer>2.04</answer>",
      "<answer>EXIT</answer>",
      "<answer></answer>",
      "plain text",
  };
  static const std::vector<std::string> pieces = {"<answer>", "</answer>", "<think>", "</think>",
                                                  "<t>",      "</t>",      "<",       ">",
                                                  "B",        "no",        "1",       " "};
  std::string s = templates[rng() % templates.size()];
  const int edits = static_cast<int>(rng() % 4);
  for (int e = 0; e < edits; ++e) {
    const std::size_t pos = s.empty() ? 0 : rng() % (s.size() + 1);
    switch (rng() % 3) {
      case 0:
        s.insert(pos, pieces[rng() % pieces.size()]);
        break;
      case 1:
        if (!s.empty()) s.erase(std::min(pos, s.size() - 1), 1 + rng() % 3);
        break;
      default:
        if (!s.empty()) s[std::min(pos, s.size() - 1)] = static_cast<char>(32 + rng() % 95);
    }
  }
  return s;
}

inline double binomial(unsigned n, unsigned k) {
  if (k > n) return 0.0;
  return std::round(std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0)));
}

inline double kl(const std::vector<double>& p, const std::vector<double>& q) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) s += p[i] * std::log(p[i] / q[i]);
  }
  return s;
}

inline std::vector<double> softmax(const std::vector<double>& z) {
  double m = *std::max_element(z.begin(), z.end());
  std::vector<double> p(z.size());
  double s = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) s += p[i] = std::exp(z[i] - m);
  for (auto& v : p) v /= s;
  return p;
}

// d/dz sum_a softmax(z)_a r_a
inline std::vector<double> expected_reward_gradient(const std::vector<double>& p,
                                                    const std::vector<double>& r) {
  double mean = 0.0;
  for (std::size_t a = 0; a < p.size(); ++a) mean += p[a] * r[a];
  std::vector<double> g(p.size());
  for (std::size_t a = 0; a < p.size(); ++a) g[a] = p[a] * (r[a] - mean);
  return g;
}

// Exact expectation of the group-mean REINFORCE estimator by enumerating
// every N-tuple of actions.
inline std::vector<double> enumerate_group_mean_estimator(const std::vector<double>& p,
                                                          const std::vector<double>& r,
                                                          std::size_t N) {
  const std::size_t m = p.size();
  std::vector<double> out(m, 0.0);
  std::vector<std::size_t> tuple(N, 0);
  while (true) {
    double prob = 1.0, mean_r = 0.0;
    for (auto a : tuple) {
      prob *= p[a];
      mean_r += r[a];
    }
    mean_r /= static_cast<double>(N);
    std::vector<double> g(m, 0.0);
    for (auto a : tuple) {
      const double adv = r[a] - mean_r;
      for (std::size_t j = 0; j < m; ++j) g[j] += adv * ((j == a ? 1.0 : 0.0) - p[j]);
    }
    for (std::size_t j = 0; j < m; ++j) out[j] += prob * g[j] / static_cast<double>(N);
    std::size_t k = 0;
    while (k < N && ++tuple[k] == m) tuple[k++] = 0;
    if (k == N) break;
  }
  return out;
}

}  // namespace oracle
