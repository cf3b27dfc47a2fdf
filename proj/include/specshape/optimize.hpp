#pragma once

#include "specshape/assembly.hpp"
#include "specshape/coeff.hpp"
#include "specshape/geometry.hpp"
#include "specshape/shapederiv.hpp"
#include "specshape/spectrum.hpp"

#include <functional>
#include <iosfwd>
#include <vector>

namespace specshape {

/// What is being optimized: Lambda_{F,s} for the cluster around eigenvalue
/// `index` (1-based) of the given problem.
struct OptTarget
{
    BoundaryCondition bc = BoundaryCondition::Dirichlet;
    CoefficientTensor tensor = make_laplacian(1);
    int index = 1;
    int s = 1;
    int order = 2;
    double cluster_tol = kPhysicalClusterTol;
    int n_eigs = 0;  // 0: index + 4
    bool maximize = false;
};

/// Everything derived from one mesh for a target.
struct Evaluation
{
    double lambda_F = 0.0;
    double Lambda_s = 0.0;
    double residual = 0.0;
    std::vector<int> indices;
    BoundaryDensity density;
};

Evaluation evaluate(const Mesh& mesh, const OptTarget& target);

struct HistoryRow
{
    int step = 0;
    double lambda_F = 0.0;
    double Lambda_s = 0.0;
    double volume = 0.0;
    double residual = 0.0;
    double step_size = 0.0;
};

struct OptState
{
    Mesh mesh;
    OptTarget target;
    double volume0 = 0.0;
    Evaluation current;
    std::vector<HistoryRow> history;
};

OptState make_state(Mesh mesh, const OptTarget& target);

/// Nodal field whose boundary normal speed is +-(g - gbar) / mean|g| (plus
/// for descent, minus for ascent), g the summed cluster density averaged to
/// boundary nodes and gbar chosen so the boundary flux vanishes. Interior
/// nodes follow by radial blending about the centroid. Throws Error when the
/// mesh is not star-shaped with respect to its centroid.
PerturbationField descent_field(const Mesh& mesh, const BoundaryDensity& density, bool maximize);

/// One backtracking step starting at step0 and halving up to 12 times. The
/// trial mesh is rescaled about its centroid to the initial volume; a step
/// is accepted only if it improves Lambda_{F,s}. Otherwise the state is kept
/// and a zero step size is recorded.
void step(OptState& state, double step0);

/// Build the start mesh and take n_steps steps. `on_step` (optional) sees
/// the state after every step.
OptState run(const DomainSpec& spec, const OptTarget& target, int n_steps, double step0,
             const std::function<void(const OptState&)>& on_step = {});

/// CSV "step,lambda_F,Lambda_s,volume,residual,step_size" with a header.
void write_history_csv(const std::vector<HistoryRow>& history, std::ostream& out);

}  // namespace specshape
