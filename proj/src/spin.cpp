#include "geosense/spin.hpp"

#include <cmath>

namespace geosense {

namespace {
const double kInvSqrt2 = 1.0 / std::sqrt(2.0);
const cplx   kI{0.0, 1.0};
} // namespace

SensorState SensorState::zero() { return {1.0, 0.0}; }
SensorState SensorState::one() { return {0.0, 1.0}; }
SensorState SensorState::plus() { return {kInvSqrt2, kInvSqrt2}; }
SensorState SensorState::left() { return {kInvSqrt2, kI * kInvSqrt2}; }

Unitary exp_pauli(const Eigen::Vector3d& a) {
    const double theta = a.norm();
    const double c     = std::cos(theta);
    // sin(theta)/theta without the 0/0 at theta = 0
    const double s = theta < 1e-8 ? 1.0 - theta * theta / 6.0 : std::sin(theta) / theta;
    const double x = a.x() * s, y = a.y() * s, z = a.z() * s;
    Unitary u;
    u(0, 0) = cplx(c, -z);
    u(0, 1) = cplx(-y, -x);
    u(1, 0) = cplx(y, -x);
    u(1, 1) = cplx(c, z);
    return u;
}

Unitary pi_pulse(const Eigen::Vector3d& n) {
    Unitary u;
    u(0, 0) = -kI * n.z();
    u(0, 1) = -kI * cplx(n.x(), -n.y());
    u(1, 0) = -kI * cplx(n.x(), n.y());
    u(1, 1) = kI * n.z();
    return u;
}

Eigen::Matrix3d pi_rotation(const Eigen::Vector3d& n) {
    return 2.0 * n * n.transpose() - Eigen::Matrix3d::Identity();
}

Eigen::Vector3d bloch(const SensorState& psi) {
    const cplx c0 = psi.amp(0), c1 = psi.amp(1);
    const cplx r  = std::conj(c0) * c1;
    return {2.0 * r.real(), 2.0 * r.imag(), std::norm(c0) - std::norm(c1)};
}

double distance_up_to_phase(const Unitary& a, const Unitary& b) {
    // Align the global phase using the overlap tr(b^dagger a).
    const cplx   t     = (b.adjoint() * a).trace();
    const cplx   phase = std::abs(t) > 0.0 ? t / std::abs(t) : cplx(1.0, 0.0);
    const Unitary d    = a - phase * b;
    return d.cwiseAbs().maxCoeff();
}

} // namespace geosense
