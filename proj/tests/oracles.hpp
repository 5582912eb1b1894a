#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Complex = std::complex<double>;
using Mat = Eigen::MatrixXcd;

// Fixed-step RK4 for i dU/dt = H(t) U.
inline Mat rk4_unitary(const std::function<Mat(double)>& h, int dim, double duration, int steps) {
  Mat u = Mat::Identity(dim, dim);
  const double dt = duration / steps;
  const Complex mi(0.0, -1.0);
  for (int s = 0; s < steps; ++s) {
    const double t = s * dt;
    const Mat k1 = mi * h(t) * u;
    const Mat k2 = mi * h(t + dt / 2) * (u + dt / 2 * k1);
    const Mat k3 = mi * h(t + dt / 2) * (u + dt / 2 * k2);
    const Mat k4 = mi * h(t + dt) * (u + dt * k3);
    u += dt / 6 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return u;
}

// Fixed-step RK4 for d rho/dt = -i[H, rho] + L rho L^dag - {L^dag L, rho}/2.
inline Mat rk4_lindblad(const std::function<Mat(double)>& h, const Mat& l, Mat rho, double duration,
                        int steps) {
  const double dt = duration / steps;
  const Complex mi(0.0, -1.0);
  const Mat ldl = l.adjoint() * l;
  auto f = [&](double t, const Mat& r) -> Mat {
    const Mat hh = h(t);
    return mi * (hh * r - r * hh) + l * r * l.adjoint() - 0.5 * (ldl * r + r * ldl);
  };
  for (int s = 0; s < steps; ++s) {
    const double t = s * dt;
    const Mat k1 = f(t, rho);
    const Mat k2 = f(t + dt / 2, rho + dt / 2 * k1);
    const Mat k3 = f(t + dt / 2, rho + dt / 2 * k2);
    const Mat k4 = f(t + dt, rho + dt * k3);
    rho += dt / 6 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return rho;
}

inline Mat sigma_x() {
  Mat m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}

inline Mat sigma_y() {
  Mat m(2, 2);
  m << 0, Complex(0, -1), Complex(0, 1), 0;
  return m;
}

// |X_k| = |sum_n x_n e^{-2 pi i k n / N}|
inline double dft_magnitude(const std::vector<Complex>& x, double cycles_per_sample) {
  Complex acc = 0.0;
  for (std::size_t n = 0; n < x.size(); ++n)
    acc += x[n] * std::exp(Complex(0.0, -2.0 * M_PI * cycles_per_sample * static_cast<double>(n)));
  return std::abs(acc);
}

// 1 - |tr(a^dag b) / d|^2
inline double overlap_infidelity(const Mat& a, const Mat& b) {
  const double d = static_cast<double>(a.rows());
  return 1.0 - std::norm((a.adjoint() * b).trace() / d);
}

}  // namespace oracle
