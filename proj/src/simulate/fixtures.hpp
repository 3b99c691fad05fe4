#pragma once

#include "simulate/simulate.hpp"

namespace phaseseg {

// Canonical worlds and scripts used by the CLI defaults and the test suite.
// The valley task: approach from above, slide down one plate, then slide along
// the bottom line. The hose task: press onto the coupler, then twist to the
// interlock.

ContactWorld valley_world(double noise_pos = 3e-4, double noise_force = 0.05);
ContactWorld hose_world(double noise_pos = 3e-4, double noise_force = 0.05);
ContactWorld free_world(double noise_pos = 3e-4, double noise_force = 0.05);

struct FixtureScript {
  Vec start;
  std::vector<ScriptSegment> segments;
  std::string label;
};

// side < 0 starts left of the valley, side > 0 starts right.
FixtureScript valley_script(int side);
FixtureScript hose_script();
FixtureScript free_script();

Demonstration generate_fixture_demo(const ContactWorld& world, const FixtureScript& script,
                                    double dt, std::uint64_t seed);

// The standard training set: left and right valley approach, seeds seed and
// seed + 1.
std::vector<Demonstration> valley_demos(const ContactWorld& world, double dt, std::uint64_t seed);

inline constexpr double kFixtureDt = 0.01;

}  // namespace phaseseg
