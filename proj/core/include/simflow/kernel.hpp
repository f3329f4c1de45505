#pragma once

// Discrete operators and the lowered per-field right-hand side program.

#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "simflow/expr.hpp"

namespace simflow::disc {

using Rational = boost::multiprecision::cpp_rational;

/// Finite-difference stencil for d^m/dx^m along one axis. Applying it means
/// sum_k values[k] * u[i + offsets[k]] scaled by dx^-order.
struct Stencil {
  int order = 0;
  std::string axis;
  std::vector<int> offsets;
  std::vector<Rational> weights;
  std::vector<double> values;

  int radius() const;
  int points() const { return static_cast<int>(offsets.size()); }
  int spacing_exponent() const { return -order; }
  /// Short tag used in printed equations, e.g. `D2_x[5pt]`.
  std::string label() const;
};

enum class NodeKind { pointwise, stencil, sum, product };

struct KernelNode {
  NodeKind kind = NodeKind::pointwise;
  expr::Expression expression;  // pointwise
  int stencil = -1;             // index into KernelProgram::stencils
  std::vector<int> inputs;      // stencil: one input; sum/product: two or more
};

/// Kreiss-Oliger dissipation added to every evolved field along every axis.
struct Dissipation {
  int order = 3;          // r: uses (D+D-)^r, a 2r+1 point stencil
  double strength = 0.0;  // sigma; zero disables
  bool enabled() const { return strength > 0.0; }
  int radius() const { return enabled() ? order : 0; }
};

/// One Shu-Osher stage: u_k = base*u_n + prev*(u_{k-1} + dt_scale*dt*L(u_{k-1})).
struct ShuOsherStage {
  Rational base;
  Rational prev;
};

struct TimeIntegrator {
  std::string scheme = "ssp_rk3";
  std::vector<ShuOsherStage> stages;

  static TimeIntegrator ssp_rk3();
};

struct KernelProgram {
  std::vector<std::string> fields;
  std::vector<std::string> axes;
  std::string time = "t";
  std::vector<Stencil> stencils;
  std::vector<KernelNode> nodes;  // topologically ordered: inputs precede users
  std::vector<int> rhs;           // per field, node index
  int halo = 0;
  Dissipation dissipation;
  TimeIntegrator integrator = TimeIntegrator::ssp_rk3();

  /// Widest stencil reach along any path from a field read to a root.
  int dag_radius() const;
  /// How far beyond the interior each node must be evaluated.
  std::vector<int> node_reach() const;
  /// Human-readable discrete equation for field `f`.
  std::string equation(std::size_t f) const;
};

}  // namespace simflow::disc
