#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <tuple>
#include <vector>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>

#include "wulff/error.hpp"
#include "wulff/tilted.hpp"

namespace wulff {

// Undirected weighted graph on nodes 0..nodes-1.
struct Network {
  std::int64_t nodes = 0;
  std::vector<std::tuple<std::int64_t, std::int64_t, double>> edges;  // (a, b, conductance)

  void add_edge(std::int64_t a, std::int64_t b, double c) { edges.emplace_back(a, b, c); }

  double weight(std::int64_t v) const {
    double w = 0.0;
    for (const auto& [a, b, c] : edges) {
      if (a == v || b == v) w += c;
    }
    return w;
  }
};

struct ResistanceResult {
  double reff = std::numeric_limits<double>::infinity();
  bool connected = false;
  double w_y = 0.0;     // total conductance at y
  double escape = 0.0;  // 1 / (w_y Reff), the probability of reaching x before returning to y
  int iterations = 0;
  double residual = 0.0;
};

inline bool connected(const Network& g, std::int64_t y, std::int64_t x) {
  std::vector<std::vector<std::int64_t>> adj(static_cast<std::size_t>(g.nodes));
  for (const auto& [a, b, c] : g.edges) {
    if (c <= 0.0) continue;
    adj[static_cast<std::size_t>(a)].push_back(b);
    adj[static_cast<std::size_t>(b)].push_back(a);
  }
  std::vector<char> seen(static_cast<std::size_t>(g.nodes), 0);
  std::vector<std::int64_t> queue{y};
  seen[static_cast<std::size_t>(y)] = 1;
  for (std::size_t h = 0; h < queue.size(); ++h) {
    for (auto v : adj[static_cast<std::size_t>(queue[h])]) {
      if (!seen[static_cast<std::size_t>(v)]) {
        seen[static_cast<std::size_t>(v)] = 1;
        queue.push_back(v);
      }
    }
  }
  return seen[static_cast<std::size_t>(x)] != 0;
}

// Effective resistance between y and x: ground x, inject unit current at y
// and solve the reduced Laplacian system with conjugate gradients.
inline ResistanceResult effective_resistance(const Network& g, std::int64_t y, std::int64_t x, double tolerance = 1e-10) {
  if (y < 0 || x < 0 || y >= g.nodes || x >= g.nodes) throw DomainError("resistance endpoints out of range");
  ResistanceResult res;
  res.w_y = g.weight(y);
  if (x == y) {
    res.reff = 0.0;
    res.connected = true;
    res.escape = std::numeric_limits<double>::quiet_NaN();
    return res;
  }
  if (!connected(g, y, x)) return res;
  res.connected = true;
  // Isolated nodes get a unit diagonal so the reduced matrix stays regular.
  auto reduced = [x](std::int64_t v) { return v < x ? v : v - 1; };
  const std::int64_t m = g.nodes - 1;
  std::vector<Eigen::Triplet<double>> trip;
  std::vector<double> diag(static_cast<std::size_t>(m), 0.0);
  for (const auto& [a, b, c] : g.edges) {
    if (c <= 0.0) continue;
    if (a != x) diag[static_cast<std::size_t>(reduced(a))] += c;
    if (b != x) diag[static_cast<std::size_t>(reduced(b))] += c;
    if (a != x && b != x) {
      trip.emplace_back(reduced(a), reduced(b), -c);
      trip.emplace_back(reduced(b), reduced(a), -c);
    }
  }
  for (std::int64_t i = 0; i < m; ++i) {
    const double d = diag[static_cast<std::size_t>(i)];
    trip.emplace_back(i, i, d > 0.0 ? d : 1.0);
  }
  Eigen::SparseMatrix<double> A(m, m);
  A.setFromTriplets(trip.begin(), trip.end());
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
  rhs(reduced(y)) = 1.0;
  Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper> cg;
  cg.setTolerance(tolerance);
  cg.setMaxIterations(static_cast<Eigen::Index>(std::max<std::int64_t>(1000, 20 * m)));
  cg.compute(A);
  const Eigen::VectorXd v = cg.solve(rhs);
  res.iterations = static_cast<int>(cg.iterations());
  res.residual = (A * v - rhs).norm() / rhs.norm();
  if (cg.info() != Eigen::Success || !(res.residual <= 10 * tolerance)) {
    throw NumericalError("conjugate gradient failed: " + std::to_string(res.iterations) + " iterations, residual " +
                         std::to_string(res.residual));
  }
  res.reff = v(reduced(y));
  res.escape = 1.0 / (res.w_y * res.reff);
  return res;
}

// Electrical network of the tilted chain: conductance sqrt(pi(a) pi(b)) on
// each support edge, so that the jump chain is the network walk.
template <int D>
Network tilted_network(const TiltedProfile<D>& p) {
  Network g;
  g.nodes = p.support_size();
  for (std::int64_t i = 0; i < g.nodes; ++i) {
    const Site<D> x = p.site(i);
    for (int a = 0; a < D; ++a) {
      const Site<D> y = x + unit_step<D>(2 * a);
      if (!p.in_support(y)) continue;
      g.add_edge(i, p.index(y), std::sqrt(p.pi(x) * p.pi(y)));
    }
  }
  return g;
}

template <int D>
ResistanceResult tilted_escape(const TiltedProfile<D>& p, const Site<D>& y, const Site<D>& x) {
  if (!p.in_support(x) || !p.in_support(y)) throw DomainError("escape endpoints must lie in the support");
  return effective_resistance(tilted_network<D>(p), p.index(y), p.index(x));
}

}  // namespace wulff
