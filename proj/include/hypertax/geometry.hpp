#pragma once

// Unit-ball model of hyperbolic space: containment, distance, the conformal
// metric factor, analytic distance gradients, retraction back into the ball,
// and the logarithmic map at the origin. All functions are pure and operate
// on double-precision spans; single precision underflows near the boundary
// where 1 - ||x||^2 gets small.

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "hypertax/errors.hpp"

namespace hypertax {

// Margin kept between embedded points and the unit sphere. Bounds the
// conformal factor and keeps distance gradients finite.
inline constexpr double kDefaultEpsilon = 1e-5;

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double squared_norm(std::span<const double> x) { return dot(x, x); }

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

inline bool all_finite(std::span<const double> x) {
  for (double v : x) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

// Containment test: ||x|| <= 1 - eps. The relative allowance of 1e-12 keeps
// freshly projected boundary points (whose norm lands on 1 - eps up to
// rounding) inside their own invariant.
inline bool in_ball(std::span<const double> x, double eps = kDefaultEpsilon) {
  if (!all_finite(x)) return false;
  const double limit = (1.0 - eps) * (1.0 + 1e-12);
  return squared_norm(x) <= limit * limit;
}

inline void require_in_ball(std::span<const double> x, double eps, const char* where) {
  if (!in_ball(x, eps)) {
    throw DomainError(std::string(where) + ": point outside the open unit ball");
  }
}

// arcosh via log; arguments that round slightly below 1 are clamped.
inline double arcosh(double z) {
  if (z < 1.0) z = 1.0;
  return std::log(z + std::sqrt(z * z - 1.0));
}

inline double artanh(double r) { return 0.5 * std::log((1.0 + r) / (1.0 - r)); }

// d(u, v) = arcosh(1 + 2 ||u - v||^2 / ((1 - ||u||^2)(1 - ||v||^2)))
inline double distance(std::span<const double> u, std::span<const double> v,
                       double eps = kDefaultEpsilon) {
  require_in_ball(u, eps, "distance");
  require_in_ball(v, eps, "distance");
  const double alpha = 1.0 - squared_norm(u);
  const double beta = 1.0 - squared_norm(v);
  const double gamma = 1.0 + 2.0 * squared_distance(u, v) / (alpha * beta);
  return arcosh(gamma);
}

// Conformal factor (2 / (1 - ||x||^2))^2 scaling the Euclidean metric.
inline double metric_scale(std::span<const double> x, double eps = kDefaultEpsilon) {
  require_in_ball(x, eps, "metric_scale");
  const double a = 2.0 / (1.0 - squared_norm(x));
  return a * a;
}

// Euclidean gradients of d(u, v) with respect to both arguments. With
// alpha = 1 - ||u||^2, beta = 1 - ||v||^2, gamma as in distance():
//   dd/du = 4 / (beta sqrt(gamma^2 - 1)) * ((||v||^2 - 2<u,v> + 1) / alpha^2 * u - v / alpha)
// and symmetrically for v. The numerator ||v||^2 - 2<u,v> + 1 equals
// ||u - v||^2 + alpha, which is what gets evaluated (less cancellation).
inline void distance_grad(std::span<const double> u, std::span<const double> v,
                          std::span<double> wrt_u, std::span<double> wrt_v,
                          double eps = kDefaultEpsilon) {
  require_in_ball(u, eps, "distance_grad");
  require_in_ball(v, eps, "distance_grad");
  const double alpha = 1.0 - squared_norm(u);
  const double beta = 1.0 - squared_norm(v);
  const double diff2 = squared_distance(u, v);
  const double gamma = 1.0 + 2.0 * diff2 / (alpha * beta);
  if (gamma <= 1.0) {
    throw DomainError("distance_grad: gradient undefined at coincident points");
  }
  const double root = std::sqrt(gamma * gamma - 1.0);
  const double cu = 4.0 / (beta * root);
  const double au = (diff2 + alpha) / (alpha * alpha);
  const double cv = 4.0 / (alpha * root);
  const double av = (diff2 + beta) / (beta * beta);
  for (std::size_t i = 0; i < u.size(); ++i) {
    wrt_u[i] = cu * (au * u[i] - v[i] / alpha);
    wrt_v[i] = cv * (av * v[i] - u[i] / beta);
  }
}

struct DistanceGrad {
  std::vector<double> wrt_u;
  std::vector<double> wrt_v;
};

inline DistanceGrad distance_grad(std::span<const double> u, std::span<const double> v,
                                  double eps = kDefaultEpsilon) {
  DistanceGrad g;
  g.wrt_u.resize(u.size());
  g.wrt_v.resize(v.size());
  distance_grad(u, v, g.wrt_u, g.wrt_v, eps);
  return g;
}

// Applies the inverse metric: g -> ((1 - ||x||^2)^2 / 4) g. This is the
// rescaling that turns a Euclidean gradient into the Riemannian one.
inline void riemannian_rescale(std::span<const double> x, std::span<const double> euclidean_grad,
                               std::span<double> out, double eps = kDefaultEpsilon) {
  require_in_ball(x, eps, "riemannian_rescale");
  const double a = 1.0 - squared_norm(x);
  const double f = a * a / 4.0;
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = f * euclidean_grad[i];
}

inline std::vector<double> riemannian_rescale(std::span<const double> x,
                                              std::span<const double> euclidean_grad,
                                              double eps = kDefaultEpsilon) {
  std::vector<double> out(x.size());
  riemannian_rescale(x, euclidean_grad, out, eps);
  return out;
}

// Radial retraction: points with ||x|| <= 1 - eps pass through unchanged,
// anything farther out is pulled back onto the 1 - eps sphere.
inline void project_to_ball_inplace(std::span<double> x, double eps = kDefaultEpsilon) {
  if (!all_finite(x)) throw DomainError("project_to_ball: non-finite input");
  const double limit = 1.0 - eps;
  // Trigger on the same bound in_ball accepts, so projecting is idempotent:
  // the rescale lands within an ulp of `limit`, inside the allowance.
  const double allowed = limit * (1.0 + 1e-12);
  const double n2 = squared_norm(x);
  if (n2 > allowed * allowed) {
    const double scale = limit / std::sqrt(n2);
    for (double& v : x) v *= scale;
  }
}

inline std::vector<double> project_to_ball(std::span<const double> x,
                                           double eps = kDefaultEpsilon) {
  std::vector<double> out(x.begin(), x.end());
  project_to_ball_inplace(out, eps);
  return out;
}

// Log map at the origin: y -> 2 artanh(||y||) y / ||y||. Radial, and the
// image norm equals the hyperbolic distance from the origin to y.
inline std::vector<double> log_map_origin(std::span<const double> y,
                                          double eps = kDefaultEpsilon) {
  require_in_ball(y, eps, "log_map_origin");
  std::vector<double> out(y.size(), 0.0);
  const double r = std::sqrt(squared_norm(y));
  if (r == 0.0) return out;
  const double scale = 2.0 * artanh(r) / r;
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = scale * y[i];
  return out;
}

}  // namespace hypertax
