#pragma once

// Brute-force reference computations used as test oracles. Nothing here calls
// into the library's numeric code; inputs are plain nested vectors.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <set>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;
using Mat = std::vector<Vec>;  // row-major, Mat[r][c]

inline Vec matvec(const Mat& a, const Vec& w) {
  Vec out(a.size(), 0.0);
  for (std::size_t r = 0; r < a.size(); ++r) {
    for (std::size_t c = 0; c < w.size(); ++c) out[r] += a[r][c] * w[c];
  }
  return out;
}

inline double norm(const Vec& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

// sum_j max(0, m + mean_i ||A p_i|| - ||A n_j||)
inline double hinge_loss(const Mat& a, const std::vector<Vec>& pos, const std::vector<Vec>& neg, double m) {
  double mean = 0.0;
  for (const auto& p : pos) mean += norm(matvec(a, p));
  mean /= static_cast<double>(pos.size());
  double loss = 0.0;
  for (const auto& n : neg) loss += std::max(0.0, m + mean - norm(matvec(a, n)));
  return loss;
}

// Central differences of hinge_loss on every entry of A.
inline Mat hinge_loss_fd_gradient(Mat a, const std::vector<Vec>& pos, const std::vector<Vec>& neg, double m,
                                  double h) {
  Mat g(a.size(), Vec(a[0].size()));
  for (std::size_t r = 0; r < a.size(); ++r) {
    for (std::size_t c = 0; c < a[r].size(); ++c) {
      const double x = a[r][c];
      a[r][c] = x + h;
      const double up = hinge_loss(a, pos, neg, m);
      a[r][c] = x - h;
      const double down = hinge_loss(a, pos, neg, m);
      a[r][c] = x;
      g[r][c] = (up - down) / (2 * h);
    }
  }
  return g;
}

struct Metrics {
  double cp, cr, cf1, op, orr, of1;
};

inline double f1(double p, double r) { return p + r > 0 ? 2 * p * r / (p + r) : 0.0; }

// Per-class loops over images with set membership; overall counts from set
// intersections per image.
inline Metrics metrics(const std::vector<std::vector<std::size_t>>& predicted,
                       const std::vector<std::vector<std::size_t>>& truth, std::size_t vocab) {
  std::vector<std::set<std::size_t>> P, T;
  for (const auto& p : predicted) P.emplace_back(p.begin(), p.end());
  for (const auto& t : truth) T.emplace_back(t.begin(), t.end());

  std::size_t correct = 0, n_pred = 0, n_true = 0;
  for (std::size_t i = 0; i < P.size(); ++i) {
    n_pred += P[i].size();
    n_true += T[i].size();
    for (auto x : P[i]) correct += T[i].count(x);
  }

  double psum = 0, rsum = 0;
  std::size_t pc = 0, rc = 0;
  for (std::size_t c = 0; c < vocab; ++c) {
    std::size_t both = 0, pr = 0, tr = 0;
    for (std::size_t i = 0; i < P.size(); ++i) {
      const bool in_p = P[i].count(c) > 0;
      const bool in_t = T[i].count(c) > 0;
      pr += in_p;
      tr += in_t;
      both += in_p && in_t;
    }
    if (pr) {
      psum += static_cast<double>(both) / static_cast<double>(pr);
      ++pc;
    }
    if (tr) {
      rsum += static_cast<double>(both) / static_cast<double>(tr);
      ++rc;
    }
  }
  Metrics m;
  m.cp = pc ? psum / static_cast<double>(pc) : 0.0;
  m.cr = rc ? rsum / static_cast<double>(rc) : 0.0;
  m.op = n_pred ? static_cast<double>(correct) / static_cast<double>(n_pred) : 0.0;
  m.orr = n_true ? static_cast<double>(correct) / static_cast<double>(n_true) : 0.0;
  m.cf1 = f1(m.cp, m.cr);
  m.of1 = f1(m.op, m.orr);
  return m;
}

inline Mat random_mat(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Mat a(rows, Vec(cols));
  for (auto& r : a) {
    for (double& x : r) x = n(rng);
  }
  return a;
}

inline Vec random_vec(std::size_t n, std::mt19937_64& rng) { return random_mat(1, n, rng)[0]; }

// Haar-ish orthogonal matrix via Gram-Schmidt on a Gaussian matrix.
inline Mat random_orthogonal(std::size_t n, std::mt19937_64& rng) {
  Mat q = random_mat(n, n, rng);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      double d = 0;
      for (std::size_t c = 0; c < n; ++c) d += q[i][c] * q[j][c];
      for (std::size_t c = 0; c < n; ++c) q[i][c] -= d * q[j][c];
    }
    const double nn = norm(q[i]);
    for (double& x : q[i]) x /= nn;
  }
  return q;
}

inline Mat matmul(const Mat& a, const Mat& b) {
  Mat out(a.size(), Vec(b[0].size(), 0.0));
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t k = 0; k < b.size(); ++k) {
      for (std::size_t j = 0; j < b[0].size(); ++j) out[i][j] += a[i][k] * b[k][j];
    }
  }
  return out;
}

inline Mat transpose(const Mat& a) {
  Mat t(a[0].size(), Vec(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < a[0].size(); ++j) t[j][i] = a[i][j];
  }
  return t;
}

}  // namespace oracle
