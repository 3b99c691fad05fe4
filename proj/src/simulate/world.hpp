#pragma once

#include <cstdint>

#include "core/types.hpp"

namespace phaseseg {

enum class Scenario { free_space, valley, hose_coupler };

// Rigid environment plus the controller saturation limits. All contacts are
// penalty springs with Coulomb friction resolved quasi-statically.
struct ContactWorld {
  Scenario scenario = Scenario::free_space;

  // Valley: two plates meeting in a line along y at x = 0, z = apex_height,
  // rising on both sides at plate_angle_deg from the horizontal.
  double plate_angle_deg = 45.0;
  double apex_height = 0.0;
  double table_z = -1.0;  // horizontal backstop well below the apex by default

  // Hose coupler: axial contact at z = coupler_z; while engaged a detent
  // resists rotation about z up to coupler_detent_torque, and a hard stop
  // blocks rotation past coupler_lock_deg.
  double coupler_z = 0.02;
  double coupler_lock_deg = 30.0;
  double coupler_detent_torque = 0.5;

  double stiffness_env = 1e4;  // penalty stiffness [N/m]
  double friction_mu = 0.2;

  double noise_pos = 0.0;    // measurement noise sigma per state component
  double noise_force = 0.0;  // measurement noise sigma per wrench component

  // Setpoint leash: the commanded offset is clamped so the controller spring
  // never requests more than this much force (torque for the rotational part).
  double force_cap = 15.0;
  double torque_cap = 3.0;

  int state_dim() const { return scenario == Scenario::hose_coupler ? 6 : 3; }
  int wrench_dim() const { return state_dim(); }
};

struct PhasePrimitive {
  Vec v_dir;              // unit direction of setpoint motion
  double speed = 0.0;     // setpoint speed along v_dir
  Mat stiffness;          // m x m diagonal controller stiffness
  double damping = 0.0;   // kept for the impedance law; inert in quasi-statics
  bool low_confidence = false;
};

PhasePrimitive default_primitive(const ContactWorld& world, const Vec& v_dir, double speed,
                                 double k_trans = 500.0, double k_rot = 10.0);

// Identifier of the active constraint set: 0 in free space; valley counts
// touching plates (capped at 2); hose coupler reports engagement.
int regime_label(const ContactWorld& world, const Vec& x);

// Static contact wrench on the tool at rest at x (no friction history).
Vec measure_wrench(const ContactWorld& world, const Vec& x);

struct StepOutcome {
  Vec x;       // equilibrium state after the step
  Vec wrench;  // contact wrench on the tool at the new state
  Vec x_star;  // setpoint after advance and leash clamping
};

// Advances the setpoint by one control period and settles the tool into
// quasi-static equilibrium against the environment.
StepOutcome impedance_step(const Vec& x, const Vec& x_star, const PhasePrimitive& prim,
                           const ContactWorld& world, double dt);

}  // namespace phaseseg
