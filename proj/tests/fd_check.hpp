#pragma once

// Central finite-difference gradient oracle used by the gradient tests. The
// analytic gradient under test comes from Graph<double>::backward; the oracle
// re-evaluates the scalar objective at x +/- h per coordinate and never goes
// through the backward code paths.

#include <functional>
#include <vector>

#include "depthgan/graph.hpp"

namespace fdtest {

using depthgan::Graph;
using depthgan::Tensor;
using depthgan::Var;

using BuildFn = std::function<Var(Graph<double>&, const std::vector<Var>&)>;

// Max relative error between analytic and central-difference gradients over
// every coordinate of every input. Relative scale |a| + |fd| with a small
// absolute floor so near-zero gradients are judged on absolute error.
inline double fd_max_rel(const std::vector<Tensor<double>*>& inputs, const BuildFn& build,
                         double h = 1e-5) {
  std::vector<Tensor<double>> grads;
  grads.reserve(inputs.size());
  for (auto* t : inputs) grads.emplace_back(t->shape);
  {
    Graph<double> g;
    std::vector<Var> leaves;
    for (std::size_t i = 0; i < inputs.size(); ++i)
      leaves.push_back(g.param(*inputs[i], &grads[i], true));
    g.backward(build(g, leaves));
  }
  auto eval = [&]() {
    Graph<double> g;
    std::vector<Var> leaves;
    for (std::size_t i = 0; i < inputs.size(); ++i)
      leaves.push_back(g.param(*inputs[i], nullptr, false));
    return g.scalar(build(g, leaves));
  };
  double max_rel = 0.0;
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    for (std::int64_t e = 0; e < inputs[t]->numel(); ++e) {
      double orig = (*inputs[t])[e];
      (*inputs[t])[e] = orig + h;
      double fp = eval();
      (*inputs[t])[e] = orig - h;
      double fm = eval();
      (*inputs[t])[e] = orig;
      double fd = (fp - fm) / (2.0 * h);
      double a = grads[t][e];
      double rel = std::abs(a - fd) / std::max(1e-3, std::abs(a) + std::abs(fd));
      max_rel = std::max(max_rel, rel);
    }
  }
  return max_rel;
}

inline void fill_uniform(Tensor<double>& t, depthgan::Rng& rng, double lo, double hi) {
  for (auto& v : t.v) v = rng.uniform(lo, hi);
}

// Values bounded away from zero (for ops with a kink at the origin).
inline void fill_away_from_zero(Tensor<double>& t, depthgan::Rng& rng, double lo, double hi) {
  for (auto& v : t.v) {
    double m = rng.uniform(lo, hi);
    v = rng.uniform() < 0.5 ? -m : m;
  }
}

}  // namespace fdtest
