#pragma once

// Reference computations written independently of the library code paths
// they check. Kept deliberately naive.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

namespace oracle {

/// Closest-approach midpoint of two viewing rays (origin, direction).
inline Eigen::Vector3d midpoint_triangulation(const Eigen::Vector3d& c1, const Eigen::Vector3d& d1,
                                              const Eigen::Vector3d& c2, const Eigen::Vector3d& d2) {
  // Solve for s, t minimizing |c1 + s d1 - (c2 + t d2)|.
  const Eigen::Vector3d w = c1 - c2;
  const double a = d1.dot(d1);
  const double b = d1.dot(d2);
  const double c = d2.dot(d2);
  const double d = d1.dot(w);
  const double e = d2.dot(w);
  const double den = a * c - b * b;
  const double s = (b * e - c * d) / den;
  const double t = (a * e - b * d) / den;
  return 0.5 * ((c1 + s * d1) + (c2 + t * d2));
}

/// Viewing ray direction in world coordinates for pixel u, camera (K, R_wc).
inline Eigen::Vector3d pixel_ray(const Eigen::Matrix3d& k, const Eigen::Matrix3d& r_wc,
                                 const Eigen::Vector2d& u) {
  return r_wc * (k.inverse() * Eigen::Vector3d(u.x(), u.y(), 1.0));
}

/// Mean of |(R1 p + t1) - (R2 p + t2)|, plain loop and plain sum.
inline double brute_force_add(std::span<const Eigen::Vector3d> points, const Eigen::Matrix3d& r1,
                              const Eigen::Vector3d& t1, const Eigen::Matrix3d& r2,
                              const Eigen::Vector3d& t2) {
  double sum = 0.0;
  for (const auto& p : points) {
    const Eigen::Vector3d a = r1 * p + t1;
    const Eigen::Vector3d b = r2 * p + t2;
    sum += std::sqrt((a - b).squaredNorm());
  }
  return sum / static_cast<double>(points.size());
}

/// Largest distance over all point pairs.
inline double brute_force_diameter(std::span<const Eigen::Vector3d> points) {
  double best = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = 0; j < points.size(); ++j) {
      best = std::max(best, (points[i] - points[j]).norm());
    }
  }
  return best;
}

/// Central differences of f: R^n -> R^m at x with step h.
inline Eigen::MatrixXd central_difference(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x,
    double h = 1e-6) {
  const Eigen::VectorXd f0 = f(x);
  Eigen::MatrixXd j(f0.size(), x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Eigen::VectorXd xp = x;
    Eigen::VectorXd xm = x;
    xp(i) += h;
    xm(i) -= h;
    j.col(i) = (f(xp) - f(xm)) / (2.0 * h);
  }
  return j;
}

/// Rodrigues via the matrix exponential series; independent of exp_so3.
inline Eigen::Matrix3d series_exp(const Eigen::Vector3d& phi) {
  Eigen::Matrix3d w;
  w << 0, -phi.z(), phi.y(), phi.z(), 0, -phi.x(), -phi.y(), phi.x(), 0;
  Eigen::Matrix3d result = Eigen::Matrix3d::Identity();
  Eigen::Matrix3d term = Eigen::Matrix3d::Identity();
  for (int k = 1; k < 40; ++k) {
    term = term * w / static_cast<double>(k);
    result += term;
  }
  return result;
}

/// Rotation angle from the trace, clamped.
inline double trace_angle(const Eigen::Matrix3d& r) {
  return std::acos(std::clamp((r.trace() - 1.0) / 2.0, -1.0, 1.0));
}

/// Minimum-cost one-to-one assignment (rows to columns, gate applied) by
/// enumerating every partial matching. Returns total cost and match count;
/// only usable for tiny problems.
struct BruteAssignment {
  std::vector<std::optional<std::size_t>> row_to_col;
  std::size_t matches = 0;
  double cost = 0.0;
};

inline BruteAssignment brute_force_assignment(const std::vector<std::vector<double>>& cost,
                                              double gate) {
  const std::size_t rows = cost.size();
  const std::size_t cols = rows ? cost[0].size() : 0;
  BruteAssignment best;
  best.row_to_col.assign(rows, std::nullopt);
  std::vector<std::optional<std::size_t>> cur(rows);
  std::vector<bool> used(cols, false);
  std::function<void(std::size_t, std::size_t, double)> rec = [&](std::size_t r, std::size_t m,
                                                                  double c) {
    if (r == rows) {
      if (m > best.matches || (m == best.matches && c < best.cost)) {
        best.row_to_col = cur;
        best.matches = m;
        best.cost = c;
      }
      return;
    }
    cur[r] = std::nullopt;
    rec(r + 1, m, c);
    for (std::size_t col = 0; col < cols; ++col) {
      if (used[col] || !(cost[r][col] < gate)) continue;
      used[col] = true;
      cur[r] = col;
      rec(r + 1, m + 1, c + cost[r][col]);
      used[col] = false;
    }
    cur[r] = std::nullopt;
  };
  rec(0, 0, 0.0);
  return best;
}

/// Every product of two elements is within tol (Frobenius) of some element.
inline bool is_closed(const std::vector<Eigen::Matrix3d>& elements, double tol) {
  for (const auto& a : elements) {
    for (const auto& b : elements) {
      const Eigen::Matrix3d ab = a * b;
      const bool found = std::any_of(elements.begin(), elements.end(),
                                     [&](const Eigen::Matrix3d& c) { return (ab - c).norm() < tol; });
      if (!found) return false;
    }
  }
  return true;
}

/// Median of a copy.
inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace oracle
