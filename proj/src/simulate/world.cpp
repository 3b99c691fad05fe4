#include "simulate/world.hpp"

#include <Eigen/LU>
#include <cmath>
#include <vector>

#include "common/error.hpp"

namespace phaseseg {

namespace {

constexpr double kForceTol = 1e-10;      // equilibrium residual tolerance [N]
constexpr double kDetentStiffness = 200.0;   // tangential detent spring [N*m/rad]
constexpr double kStopStiffness = 2000.0;    // hard-stop spring [N*m/rad]

struct PlaneContact {
  Eigen::Vector3d n;  // unit normal pointing into free space
  double depth;       // penetration depth, > 0 while violating
};

std::vector<PlaneContact> plane_contacts(const ContactWorld& w, const Eigen::Vector3d& p) {
  std::vector<PlaneContact> out;
  switch (w.scenario) {
    case Scenario::free_space:
      break;
    case Scenario::valley: {
      const double a = w.plate_angle_deg * M_PI / 180.0;
      const double sn = std::sin(a), cs = std::cos(a);
      const Eigen::Vector3d apex(0.0, 0.0, w.apex_height);
      const Eigen::Vector3d nl(sn, 0.0, cs);    // left plate, rises toward -x
      const Eigen::Vector3d nr(-sn, 0.0, cs);   // right plate, rises toward +x
      const double fl = nl.dot(p - apex);
      const double fr = nr.dot(p - apex);
      if (fl < 0.0) out.push_back({nl, -fl});
      if (fr < 0.0) out.push_back({nr, -fr});
      if (p.z() < w.table_z) out.push_back({Eigen::Vector3d::UnitZ(), w.table_z - p.z()});
      break;
    }
    case Scenario::hose_coupler:
      if (p.z() < w.coupler_z)
        out.push_back({Eigen::Vector3d::UnitZ(), w.coupler_z - p.z()});
      break;
  }
  return out;
}

double stick_stiffness(const ContactWorld& w) { return w.stiffness_env; }

struct Equilibrium {
  Vec x;
  Vec wrench;
};

// Net force/torque on the tool and its (negated) derivative, with friction
// branches decided at the current iterate. Also accumulates the environment
// part of the wrench.
void assemble(const ContactWorld& world, const Vec& k_diag, const Vec& x_star, const Vec& x,
              const Vec& x_anchor, Vec* F, Mat* J, Vec* env_wrench) {
  const int m = static_cast<int>(x.size());
  *F = k_diag.asDiagonal() * (x_star - x);
  *J = Mat(k_diag.asDiagonal());
  env_wrench->setZero();

  const Eigen::Vector3d pos = x.head<3>();
  const Eigen::Vector3d slip_base = pos - x_anchor.head<3>();
  const double k_env = world.stiffness_env;
  const double k_t = stick_stiffness(world);
  const double mu = world.friction_mu;

  bool engaged = false;
  for (const PlaneContact& c : plane_contacts(world, pos)) {
    engaged = true;
    const double N = k_env * c.depth;
    Eigen::Vector3d f = N * c.n;
    J->topLeftCorner<3, 3>() += k_env * c.n * c.n.transpose();
    if (mu > 0.0) {
      const Eigen::Vector3d slip = slip_base - slip_base.dot(c.n) * c.n;
      const Eigen::Vector3d stick = -k_t * slip;
      if (stick.norm() <= mu * N) {
        f += stick;
        J->topLeftCorner<3, 3>() +=
            k_t * (Mat::Identity(3, 3) - c.n * c.n.transpose());
      } else if (slip.norm() > 0.0) {
        const Eigen::Vector3d u = slip.normalized();
        f += -mu * N * u;
        J->topLeftCorner<3, 3>() += -mu * k_env * u * c.n.transpose();
      }
    }
    F->head<3>() += f;
    env_wrench->head<3>() += f;
  }

  if (world.scenario == Scenario::hose_coupler && m == 6 && engaged) {
    const double lock = world.coupler_lock_deg * M_PI / 180.0;
    const double slip_r = x[5] - x_anchor[5];
    const double stick_t = -kDetentStiffness * slip_r;
    double tau = 0.0;
    if (std::abs(stick_t) <= world.coupler_detent_torque) {
      tau += stick_t;
      (*J)(5, 5) += kDetentStiffness;
    } else {
      tau += -world.coupler_detent_torque * (slip_r > 0.0 ? 1.0 : -1.0);
    }
    if (x[5] > lock) {
      tau += -kStopStiffness * (x[5] - lock);
      (*J)(5, 5) += kStopStiffness;
    }
    (*F)[5] += tau;
    (*env_wrench)[5] += tau;
  }
}

Equilibrium solve_equilibrium(const ContactWorld& world, const Vec& x_start, const Vec& x_star,
                              const Vec& k_diag) {
  const int m = static_cast<int>(x_start.size());
  Equilibrium eq;
  eq.wrench = Vec::Zero(m);

  // Free region is convex, so both endpoints free means the spring settles
  // exactly on its setpoint.
  if (plane_contacts(world, x_start.head<3>()).empty() &&
      plane_contacts(world, x_star.head<3>()).empty()) {
    eq.x = x_star;
    return eq;
  }

  Vec x = x_start;
  Vec F(m);
  Mat J(m, m);
  Vec env(m);
  bool converged = false;
  for (int iter = 0; iter < 120 && !converged; ++iter) {
    assemble(world, k_diag, x_star, x, x_start, &F, &J, &env);
    if (F.cwiseAbs().maxCoeff() < kForceTol) {
      converged = true;
      break;
    }
    Vec dx = J.partialPivLu().solve(F);
    if (!dx.allFinite()) fail(ErrorCode::instability, "equilibrium solve produced NaN");
    const double step = dx.cwiseAbs().maxCoeff();
    if (step > 0.1) dx *= 0.1 / step;  // keep branch switches local
    x += dx;
  }
  if (!converged) {
    // Damped fixed-point fallback for the rare branch-cycling case.
    Vec D = k_diag.array() + 2.0 * (world.stiffness_env + stick_stiffness(world));
    if (m == 6) {
      for (int i = 3; i < 6; ++i) D[i] = k_diag[i] + kDetentStiffness + kStopStiffness;
    }
    for (long iter = 0; iter < 2000000 && !converged; ++iter) {
      assemble(world, k_diag, x_star, x, x_start, &F, &J, &env);
      if (F.cwiseAbs().maxCoeff() < kForceTol) {
        converged = true;
        break;
      }
      x += (F.array() / D.array()).matrix();
    }
  }
  if (!converged) fail(ErrorCode::instability, "quasi-static equilibrium did not converge");

  const double depth_limit = 10.0 * std::max(world.force_cap, 1.0) / world.stiffness_env;
  for (const PlaneContact& c : plane_contacts(world, x.head<3>()))
    if (c.depth > depth_limit)
      fail(ErrorCode::instability, "contact penetration exceeded the stability bound");

  eq.x = x;
  eq.wrench = env;
  return eq;
}

}  // namespace

PhasePrimitive default_primitive(const ContactWorld& world, const Vec& v_dir, double speed,
                                 double k_trans, double k_rot) {
  const int m = world.state_dim();
  if (v_dir.size() != m) fail(ErrorCode::invalid_argument, "direction dimension mismatch");
  PhasePrimitive prim;
  prim.v_dir = v_dir;
  prim.speed = speed;
  Vec k(m);
  k.head(3).setConstant(k_trans);
  if (m == 6) k.tail(3).setConstant(k_rot);
  prim.stiffness = k.asDiagonal();
  prim.damping = 2.0 * std::sqrt(k_trans);
  return prim;
}

int regime_label(const ContactWorld& world, const Vec& x) {
  const auto contacts = plane_contacts(world, x.head<3>());
  switch (world.scenario) {
    case Scenario::free_space:
      return 0;
    case Scenario::valley:
      return std::min<int>(2, static_cast<int>(contacts.size()));
    case Scenario::hose_coupler:
      return contacts.empty() ? 0 : 1;
  }
  return 0;
}

Vec measure_wrench(const ContactWorld& world, const Vec& x) {
  const int m = world.state_dim();
  if (x.size() != m) fail(ErrorCode::invalid_argument, "state dimension mismatch");
  Vec w = Vec::Zero(m);
  for (const PlaneContact& c : plane_contacts(world, x.head<3>()))
    w.head<3>() += world.stiffness_env * c.depth * c.n;
  if (world.scenario == Scenario::hose_coupler && m == 6 &&
      !plane_contacts(world, x.head<3>()).empty()) {
    const double lock = world.coupler_lock_deg * M_PI / 180.0;
    if (x[5] > lock) w[5] += -kStopStiffness * (x[5] - lock);
  }
  return w;
}

StepOutcome impedance_step(const Vec& x, const Vec& x_star, const PhasePrimitive& prim,
                           const ContactWorld& world, double dt) {
  const int m = world.state_dim();
  if (x.size() != m || x_star.size() != m)
    fail(ErrorCode::invalid_argument, "state dimension mismatch");
  if (!(dt > 0.0)) fail(ErrorCode::invalid_argument, "dt must be positive");
  if (prim.v_dir.size() != m) fail(ErrorCode::invalid_argument, "direction dimension mismatch");
  if (prim.speed < 0.0) fail(ErrorCode::invalid_argument, "speed must be nonnegative");
  if (prim.speed > 0.0 && std::abs(prim.v_dir.norm() - 1.0) > 1e-6)
    fail(ErrorCode::invalid_argument, "v_dir must be a unit vector");
  if (prim.stiffness.rows() != m || prim.stiffness.cols() != m)
    fail(ErrorCode::invalid_argument, "stiffness dimension mismatch");

  Vec xs = x_star + prim.v_dir * (prim.speed * dt);
  const Vec k_diag = prim.stiffness.diagonal();

  // Leash: clamp the commanded offset so the spring force stays within the cap.
  {
    Vec f = k_diag.head(3).asDiagonal() * (xs.head(3) - x.head(3));
    const double n = f.norm();
    if (n > world.force_cap)
      xs.head(3) = x.head(3) + (xs.head(3) - x.head(3)) * (world.force_cap / n);
    if (m == 6) {
      Vec tq = k_diag.tail(3).asDiagonal() * (xs.tail(3) - x.tail(3));
      const double tn = tq.norm();
      if (tn > world.torque_cap)
        xs.tail(3) = x.tail(3) + (xs.tail(3) - x.tail(3)) * (world.torque_cap / tn);
    }
  }

  Equilibrium eq = solve_equilibrium(world, x, xs, k_diag);
  StepOutcome out;
  out.x = eq.x;
  out.wrench = eq.wrench;
  out.x_star = xs;
  return out;
}

}  // namespace phaseseg
