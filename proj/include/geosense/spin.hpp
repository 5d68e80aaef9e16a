#pragma once

#include <Eigen/Core>
#include <complex>

namespace geosense {

using cplx    = std::complex<double>;
using Unitary = Eigen::Matrix2cd;

// Pure state c0|0> + c1|1>.
struct SensorState {
    Eigen::Vector2cd amp{1.0, 0.0};

    SensorState() = default;
    SensorState(cplx c0, cplx c1) : amp(c0, c1) {}
    explicit SensorState(const Eigen::Vector2cd& v) : amp(v) {}

    double norm2() const { return amp.squaredNorm(); }

    static SensorState zero();
    static SensorState one();
    static SensorState plus();  // (|0> + |1>)/sqrt2
    static SensorState left();  // |L> = (|0> + i|1>)/sqrt2
};

// exp(-i a.sigma), exact for any 3-vector a.
Unitary exp_pauli(const Eigen::Vector3d& a);

// pi rotation about unit axis n, -i n.sigma.
Unitary pi_pulse(const Eigen::Vector3d& n);

// SO(3) image of a pi rotation about n: 2 n n^T - I.
Eigen::Matrix3d pi_rotation(const Eigen::Vector3d& n);

// Bloch vector of a state.
Eigen::Vector3d bloch(const SensorState& psi);

// Operator distance up to a global phase: min over phases of the max-norm.
double distance_up_to_phase(const Unitary& a, const Unitary& b);

} // namespace geosense
