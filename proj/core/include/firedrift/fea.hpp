#pragma once

#include <array>
#include <map>
#include <stdexcept>
#include <vector>

#include "firedrift/structure.hpp"

namespace firedrift {

struct SingularSystem : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Square hollow-free 0.1 m section used throughout the generated corpus.
struct SectionProps {
  double area = 0.01;           // m^2
  double inertia_y = 8.3333e-6;  // m^4
  double inertia_z = 8.3333e-6;  // m^4
  double torsion_j = 1.406e-5;   // m^4
};

// Stiffness retention of carbon steel vs absolute temperature, tabulated at
// 100 degC knots with linear interpolation in between. The retention factor
// scales the secant Young's modulus; below the first knot it clamps to 1,
// and temperatures beyond the last knot clamp to the final value (0).
struct StiffnessLaw {
  std::vector<double> knot_temp;    // degC, ascending
  std::vector<double> knot_factor;  // retention in [0, 1]
  double thermal_expansion = 1.2e-5;  // 1/degC
  double ambient = 20.0;              // degC

  static StiffnessLaw carbon_steel();

  // Retention factor at absolute temperature T [degC].
  double eta(double temp) const;
};

// Load is applied in increments: the gravity share first, then the thermal
// share, each step solving the total secant system at the interpolated
// temperature. The material law is secant (stiffness depends on the current
// temperature only), so the final step equals a single solve at the final
// temperatures; `stepped` exists to make that equivalence testable and to
// surface a singular configuration at the load level where it first appears.
struct StepSchedule {
  int gravity_steps = 10;
  int thermal_steps = 100;
};

struct FeaConfig {
  SectionProps section;
  StiffnessLaw law = StiffnessLaw::carbon_steel();
  StepSchedule schedule;
  double poisson = 0.3;
  bool stepped = false;
};

// Extra concentrated nodal loads, node id -> [Fx, Fy, Fz, Mx, My, Mz] in N
// and N*m. Used by tests and one-off analyses; the pipeline only applies
// member loads.
using NodalLoads = std::map<int, std::array<double, 6>>;

struct FrameSolution {
  // node id -> [ux, uy, uz, rx, ry, rz], meters and radians
  std::map<int, std::array<double, 6>> displacements;
  // reactions at ground (h = 0) nodes, same layout, N and N*m
  std::map<int, std::array<double, 6>> reactions;
};

// Direct-stiffness solve of the elastic 3D frame: 6 DoF per node, ground
// nodes fully fixed, member gravity loads as consistent equivalent nodal
// loads, thermal action as equivalent axial end forces E(T)*A*alpha*dT.
// `temp_rise` holds per-element rises over ambient aligned with s.elements
// (empty means no thermal action). Throws SingularSystem when the reduced
// stiffness matrix is not SPD.
FrameSolution solve_frame(const Structure& s,
                          const std::vector<double>& temp_rise,
                          const FeaConfig& config = {},
                          const NodalLoads& extra = {});

std::map<int, std::array<double, 6>> assemble_and_solve(
    const Structure& s, const std::vector<double>& temp_rise,
    const FeaConfig& config = {}, const NodalLoads& extra = {});

struct IdrField {
  std::map<int, double> node_idr;  // percent, nodes with a node one story below
  double midr = 0.0;               // percent
  int skipped = 0;  // nodes above ground with no same-plan node below
};

// Inter-story drift ratios from a displacement field: for each node, the
// in-plan displacement offset to the node at the same plan position one
// story below, over the story height, in percent.
IdrField compute_idr(const Structure& s,
                     const std::map<int, std::array<double, 6>>& disp);

struct SimResult {
  int structure_id = 0;
  int scenario_id = 0;
  std::map<int, std::array<double, 6>> node_displacements;
  std::map<int, double> node_idr;  // percent
  double midr = 0.0;               // percent
  int idr_skipped = 0;
};

SimResult run_scenario(const Structure& s, int scenario_id,
                       const std::vector<double>& temp_rise,
                       const FeaConfig& config = {});

// Sum of member gravity loads in N (w * L over all elements); reactions of a
// gravity-only solve must balance this.
double total_gravity_load(const Structure& s);

void to_json(Json& j, const SimResult& r);
void from_json(const Json& j, SimResult& r);

}  // namespace firedrift
