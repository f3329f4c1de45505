#pragma once

// Method-of-lines lowering: stencil generation, operator lowering to a
// kernel DAG, dissipation and the SSP-RK3 step.

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "simflow/docmodel.hpp"
#include "simflow/kernel.hpp"

namespace simflow::disc {

class LoweringError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Exact weights w with sum_k w_k * offsets_k^j / j! = delta(j, m) for
/// j < offsets.size(). Throws std::invalid_argument on duplicates or too
/// few points.
std::vector<Rational> fd_weights(int m, const std::vector<int>& offsets);

/// Symmetric offsets for an order-m derivative of even accuracy p.
std::vector<int> centered_offsets(int m, int accuracy);

Stencil make_stencil(int m, std::string axis, std::vector<int> offsets);
Stencil centered_stencil(int m, std::string axis, int accuracy);

/// Kreiss-Oliger operator for one axis: sigma * weights . u / dx. The
/// stencil's order is 1 so it scales like a first derivative.
Stencil ko_dissipation(int r, double sigma, std::string axis);

/// Lowers one term into `program`, reusing structurally equal nodes.
/// Returns the index of the node holding the term's value.
int lower_term(const doc::TermNode& term, const doc::OperatorPolicy& policy, KernelProgram& program);

KernelProgram build_kernel(const doc::GenericPdeProblem& problem, const doc::GenericPdeModel& model,
                           const doc::DiscretizationPolicy& policy);

/// Full stage-3 document: problem, model, kernel and printed equations.
doc::DiscretizedProblem discretize(const doc::GenericPdeProblem& problem, const doc::GenericPdeModel& model,
                                   const doc::DiscretizationPolicy& policy);

/// Right-hand side evaluator. It may refresh ghost entries of `stage` but
/// must not change anything else in it.
using Rhs = std::function<void(std::vector<double>& stage, std::vector<double>& out)>;

/// One Shu-Osher step in increment form: u_k = u + prev_k*((u_{k-1} - u) + dt*L(u_{k-1})).
void rk3_step(std::vector<double>& u, const Rhs& rhs, double dt,
              const TimeIntegrator& integrator = TimeIntegrator::ssp_rk3());

}  // namespace simflow::disc
