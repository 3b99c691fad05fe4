#include "simulate/fixtures.hpp"

#include <cmath>

namespace phaseseg {

namespace {

ContactWorld base_world(Scenario sc, double noise_pos, double noise_force) {
  ContactWorld w;
  w.scenario = sc;
  w.noise_pos = noise_pos;
  w.noise_force = noise_force;
  return w;
}

Vec dir3(double x, double y, double z) {
  Vec v(3);
  v << x, y, z;
  return v;
}

Vec dir6(double x, double y, double z, double rx, double ry, double rz) {
  Vec v(6);
  v << x, y, z, rx, ry, rz;
  return v;
}

}  // namespace

ContactWorld valley_world(double noise_pos, double noise_force) {
  return base_world(Scenario::valley, noise_pos, noise_force);
}

ContactWorld hose_world(double noise_pos, double noise_force) {
  return base_world(Scenario::hose_coupler, noise_pos, noise_force);
}

ContactWorld free_world(double noise_pos, double noise_force) {
  return base_world(Scenario::free_space, noise_pos, noise_force);
}

namespace {

// A setpoint displacement over a fixed window; the direction is normalized at
// execution, so speed = |delta| / duration lands exactly on the endpoint.
void push_leg(FixtureScript& fs, const Vec& delta, double duration) {
  fs.segments.push_back({delta, delta.norm() / duration, duration});
}

}  // namespace

FixtureScript valley_script(int side) {
  const double s = side < 0 ? -1.0 : 1.0;
  FixtureScript fs;
  fs.start = dir3(s * 0.10, 0.0, 0.24);
  // Free approach braking like a hand does, with speed proportional to the
  // remaining drop; a shallow first touch, then a guided slide along the plate
  // whose press deepens into slow swings with the pace tracking the press
  // (harder pushes move faster), the way a person guides a part along a
  // chamfer; the slide ends on the bottom line so the seated travel squeezes
  // both plates symmetrically.
  {
    const double z0 = 0.24, z_end = 0.0975, t_fall = 1.2, rate = 3.0, tick = 0.01;
    const double z_inf =
        (z_end - z0 * std::exp(-rate * t_fall)) / (1.0 - std::exp(-rate * t_fall));
    const int n = static_cast<int>(std::lround(t_fall / tick));
    double z_prev = z0;
    for (int k = 1; k <= n; ++k) {
      const double z_k = z_inf + (z0 - z_inf) * std::exp(-rate * k * tick);
      push_leg(fs, dir3(0.0, 0.0, z_k - z_prev), tick);
      z_prev = z_k;
    }
  }
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  const Vec tang = dir3(-s * inv_sqrt2, 0.0, -inv_sqrt2);  // downhill along the plate
  const Vec press = dir3(s * inv_sqrt2, 0.0, -inv_sqrt2);  // into the touched plate
  // Normal press depth at leg boundaries: a ramp from the shallow touch the
  // approach leaves behind up to the working depth, then three triangle cycles
  // around that depth.
  const double base = 0.010 * inv_sqrt2;
  const double amp = 0.004;
  auto depth = [&](int j) {
    if (j <= 4) return base * (0.25 + 0.75 * j / 4.0);
    const int c = (j - 4) % 12;
    const double u = c <= 3 ? c / 3.0 : (c <= 9 ? (6 - c) / 3.0 : (c - 12) / 3.0);
    return base + amp * u;
  };
  double wsum = 0.0;
  for (int k = 0; k < 40; ++k) wsum += 0.5 * (depth(k) + depth(k + 1));
  for (int k = 0; k < 40; ++k) {
    const double along = (0.10 / inv_sqrt2) * 0.5 * (depth(k) + depth(k + 1)) / wsum;
    push_leg(fs, Vec(tang * along + press * (depth(k + 1) - depth(k))), 0.1);
  }
  for (int k = 0; k < 8; ++k)
    push_leg(fs, dir3(0.0, 0.049, k % 2 == 0 ? -0.005 : 0.005), 0.475);
  fs.label = side < 0 ? "valley_left" : "valley_right";
  return fs;
}

FixtureScript hose_script() {
  FixtureScript fs;
  fs.start = dir6(0.0, 0.0, 0.10, 0.0, 0.0, 0.0);
  fs.segments = {
      {dir6(0.0, 0.0, -1.0, 0.0, 0.0, 0.0), 0.04, 2.5},
      {dir6(0.0, 0.0, 0.0, 0.0, 0.0, 1.0), 0.25, 3.5},
  };
  fs.label = "hose_coupler";
  return fs;
}

FixtureScript free_script() {
  FixtureScript fs;
  fs.start = dir3(0.0, 0.0, 0.10);
  fs.segments = {
      {dir3(1.0, 0.0, 0.0), 0.05, 2.0},
      {dir3(0.0, 1.0, 0.0), 0.05, 2.0},
  };
  fs.label = "free_space";
  return fs;
}

Demonstration generate_fixture_demo(const ContactWorld& world, const FixtureScript& script,
                                    double dt, std::uint64_t seed) {
  return generate_demo(world, script.start, script.segments, dt, seed, script.label);
}

std::vector<Demonstration> valley_demos(const ContactWorld& world, double dt,
                                        std::uint64_t seed) {
  return {generate_fixture_demo(world, valley_script(-1), dt, seed),
          generate_fixture_demo(world, valley_script(+1), dt, seed + 1)};
}

}  // namespace phaseseg
