#include "robustpulse/quantum.hpp"

#include <algorithm>
#include <cmath>

#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include "robustpulse/rng.hpp"

namespace robustpulse {

NoiseRealization NoiseRealization::lo_offset_mhz(double mhz) {
  NoiseRealization n;
  n.delta = delta_from_lo_offset_mhz(mhz);
  return n;
}

NoiseRealization NoiseRealization::amplitude(double eps) {
  NoiseRealization n;
  n.eps_common = eps;
  return n;
}

NoiseRealization NoiseRealization::differential(double eps_i, double eps_q) {
  NoiseRealization n;
  n.amp_mode = AmplitudeNoiseMode::differential;
  n.eps_i = eps_i;
  n.eps_q = eps_q;
  return n;
}

bool NoiseRealization::is_zero() const {
  return delta == 0.0 && scale_i() == 1.0 && scale_q() == 1.0;
}

void NoiseRealization::validate() const {
  if (!std::isfinite(delta) || !std::isfinite(eps_common) || !std::isfinite(eps_i) ||
      !std::isfinite(eps_q))
    throw NumericError("non-finite noise parameters");
  if (amp_mode == AmplitudeNoiseMode::common && (eps_i != 0.0 || eps_q != 0.0))
    throw ArgumentError("differential amplitude errors set in common mode");
  if (amp_mode == AmplitudeNoiseMode::differential && eps_common != 0.0)
    throw ArgumentError("common amplitude error set in differential mode");
}

double delta_from_lo_offset_mhz(double mhz) { return 2.0 * angular_from_mhz(mhz); }
double lo_offset_mhz_from_delta(double delta) { return mhz_from_angular(delta / 2.0); }

CMatrix lowering_operator(int levels) {
  if (levels != 2 && levels != 3)
    throw ModelError("hilbert levels must be 2 or 3, got " + std::to_string(levels));
  CMatrix a = CMatrix::Zero(levels, levels);
  for (int k = 1; k < levels; ++k) a(k - 1, k) = std::sqrt(static_cast<double>(k));
  return a;
}

namespace {

void check_qubit(const DeviceModel& device, int qubit) {
  if (qubit < 0 || qubit >= device.qubit_count())
    throw ArgumentError("qubit index " + std::to_string(qubit) + " out of range");
}

struct Drive {
  Complex gamma;
  double delta;
};

Drive segment_drive(const Waveform& w, const NoiseRealization& noise, int k,
                    const DriveCorrection* extra) {
  const Complex g = w.segments()[k];
  if (!std::isfinite(g.real()) || !std::isfinite(g.imag()))
    throw NumericError("non-finite waveform amplitude at segment " + std::to_string(k));
  Drive d{Complex(noise.scale_i() * g.real(), noise.scale_q() * g.imag()), noise.delta};
  if (extra) {
    if (!extra->drive.empty()) d.gamma += extra->drive.at(k);
    if (!extra->detuning.empty()) d.delta += extra->detuning.at(k);
  }
  return d;
}

CMatrix hamiltonian(Complex gamma, double delta, double chi, int levels) {
  const CMatrix a = lowering_operator(levels);
  const CMatrix ad = a.adjoint();
  // 1/2 (I a_I + Q a_Q) with a_I = a + a^dag, a_Q = -i(a - a^dag) equals
  // 1/2 (gamma^* a + gamma a^dag).
  CMatrix h = 0.5 * (std::conj(gamma) * a + gamma * ad);
  h += 0.5 * delta * ad * a;
  if (levels == 3) h += 0.5 * chi * (ad * ad) * (a * a);
  return h;
}

CMatrix expm_2x2(const CMatrix& h, double t) {
  const Complex c0 = 0.5 * (h(0, 0) + h(1, 1));
  const double hz = 0.5 * (h(0, 0) - h(1, 1)).real();
  const Complex off = h(1, 0);  // hx + i hy
  const double r = std::sqrt(hz * hz + std::norm(off));
  const double th = r * t;
  const double c = std::cos(th);
  const double s_over_r = r > 1e-300 ? std::sin(th) / r : t;
  const Complex ph = std::exp(Complex(0.0, -c0.real() * t));
  CMatrix u(2, 2);
  const Complex mi(0.0, -1.0);
  u(0, 0) = ph * (c + mi * s_over_r * hz);
  u(1, 1) = ph * (c - mi * s_over_r * hz);
  u(0, 1) = ph * mi * s_over_r * std::conj(off);
  u(1, 0) = ph * mi * s_over_r * off;
  return u;
}

CMatrix drive_superoperator(const CMatrix& h, const CMatrix& a, double rate, double t) {
  const int d = static_cast<int>(h.rows());
  const CMatrix id = CMatrix::Identity(d, d);
  const CMatrix n = a.adjoint() * a;
  const Complex i(0.0, 1.0);
  CMatrix l = -i * (Eigen::kroneckerProduct(id, h) - Eigen::kroneckerProduct(h.transpose(), id))
                       .eval();
  if (rate > 0.0) {
    l += rate * (Eigen::kroneckerProduct(a.conjugate(), a) -
                 0.5 * Eigen::kroneckerProduct(id, n) -
                 0.5 * Eigen::kroneckerProduct(n.transpose(), id))
                    .eval();
  }
  return (l * t).exp();
}

}  // namespace

CMatrix build_hamiltonian(const Waveform& w, const NoiseRealization& noise,
                          const DeviceModel& device, int qubit, int segment,
                          const DriveCorrection* extra) {
  check_qubit(device, qubit);
  noise.validate();
  if (segment < 0 || segment >= w.size())
    throw ArgumentError("segment index " + std::to_string(segment) + " out of range");
  const Drive d = segment_drive(w, noise, segment, extra);
  return hamiltonian(d.gamma, d.delta, device.qubits[qubit].anharmonicity, device.levels);
}

CMatrix expm_hermitian(const CMatrix& h, double t) {
  if (h.rows() == 2) return expm_2x2(h, t);
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
  const auto& v = es.eigenvectors();
  Eigen::VectorXcd ph(h.rows());
  for (Eigen::Index k = 0; k < h.rows(); ++k)
    ph(k) = std::exp(Complex(0.0, -es.eigenvalues()(k) * t));
  return v * ph.asDiagonal() * v.adjoint();
}

UnitaryResult propagate(const Waveform& w, const NoiseRealization& noise,
                        const DeviceModel& device, int qubit, const DriveCorrection* extra) {
  check_qubit(device, qubit);
  noise.validate();
  const int d = device.levels;
  const double tau = w.grid().segment_duration();
  const double chi = device.qubits[qubit].anharmonicity;
  const NoiseRealization clean;
  CMatrix uc = CMatrix::Identity(d, d);
  CMatrix ut = CMatrix::Identity(d, d);
  for (int k = 0; k < w.size(); ++k) {
    const Drive dc = segment_drive(w, clean, k, nullptr);
    const Drive dn = segment_drive(w, noise, k, extra);
    // Control unitary carries the control Hamiltonian alone; leakage and
    // noise terms enter the total evolution.
    uc = expm_hermitian(hamiltonian(dc.gamma, 0.0, 0.0, d), tau) * uc;
    ut = expm_hermitian(hamiltonian(dn.gamma, dn.delta, chi, d), tau) * ut;
  }
  UnitaryResult r{uc, ut, ut * uc.adjoint()};
  return r;
}

double operational_infidelity(const CMatrix& u, const CMatrix& target, int dim) {
  if (dim <= 0 || u.rows() < dim || target.rows() < dim)
    throw ArgumentError("operational_infidelity: dimension mismatch");
  const Complex ov = (target.topLeftCorner(dim, dim).adjoint() * u.topLeftCorner(dim, dim)).trace();
  const double f = std::norm(ov) / (static_cast<double>(dim) * dim);
  return std::clamp(1.0 - f, 0.0, 1.0);
}

double robustness_fidelity(const Waveform& w, const std::vector<NoiseRealization>& ensemble,
                           const DeviceModel& device, int qubit) {
  if (ensemble.empty()) throw ArgumentError("robustness_fidelity: empty ensemble");
  double acc = 0.0;
  for (const auto& n : ensemble) {
    const auto r = propagate(w, n, device, qubit);
    const double dim = static_cast<double>(r.u_noise.rows());
    acc += std::norm(r.u_noise.trace()) / (dim * dim);
  }
  return std::clamp(acc / ensemble.size(), 0.0, 1.0);
}

CMatrix vec(const CMatrix& rho) {
  return Eigen::Map<const CMatrix>(rho.data(), rho.size(), 1);
}

CMatrix unvec(const CMatrix& v, int dim) { return Eigen::Map<const CMatrix>(v.data(), dim, dim); }

CMatrix basis_state(int levels, int k) {
  CMatrix rho = CMatrix::Zero(levels, levels);
  rho(k, k) = 1.0;
  return rho;
}

CMatrix unitary_superoperator(const CMatrix& u) {
  return Eigen::kroneckerProduct(u.conjugate(), u).eval();
}

CMatrix damping_superoperator(double duration, double t1, int levels) {
  const CMatrix a = lowering_operator(levels);
  const double rate = std::isfinite(t1) ? 1.0 / t1 : 0.0;
  return drive_superoperator(CMatrix::Zero(levels, levels), a, rate, duration);
}

CMatrix pulse_superoperator(const Waveform& w, const NoiseRealization& noise,
                            const DeviceModel& device, int qubit, const DriveCorrection* extra) {
  check_qubit(device, qubit);
  noise.validate();
  const int d = device.levels;
  const auto& q = device.qubits[qubit];
  const double rate = noise.include_t1 && std::isfinite(q.t1) ? 1.0 / q.t1 : 0.0;
  const double tau = w.grid().segment_duration();
  const CMatrix a = lowering_operator(d);
  CMatrix s = CMatrix::Identity(d * d, d * d);
  for (int k = 0; k < w.size(); ++k) {
    const Drive dn = segment_drive(w, noise, k, extra);
    const CMatrix h = hamiltonian(dn.gamma, dn.delta, q.anharmonicity, d);
    if (rate > 0.0)
      s = drive_superoperator(h, a, rate, tau) * s;
    else
      s = unitary_superoperator(expm_hermitian(h, tau)) * s;
  }
  return s;
}

double simulate_with_t1(const Waveform& w, const NoiseRealization& noise,
                        const DeviceModel& device, int qubit, int shots, std::uint64_t seed,
                        const CMatrix* initial) {
  NoiseRealization n = noise;
  n.include_t1 = true;
  const int d = device.levels;
  const CMatrix rho0 = initial ? *initial : basis_state(d, 0);
  if (rho0.rows() != d || rho0.cols() != d) throw ArgumentError("initial state has wrong size");
  const CMatrix rho = unvec(pulse_superoperator(w, n, device, qubit) * vec(rho0), d);
  const double p = rho(1, 1).real();
  auto rng = make_stream(seed, "simulate_with_t1");
  return sample_fraction(p, shots, rng);
}

DriveCorrection crosstalk_noise(const std::vector<NeighborDrive>& drives,
                                const DeviceModel& device, int victim, int segment_count) {
  check_qubit(device, victim);
  DriveCorrection c;
  c.drive.assign(segment_count, Complex(0.0));
  c.detuning.assign(segment_count, 0.0);
  for (const auto& nd : drives) {
    check_qubit(device, nd.source);
    if (nd.waveform.size() != segment_count)
      throw ArgumentError("neighbour waveform is not on the victim's segment grid");
    const auto cp = device.coupling(victim, nd.source);
    const Complex rot = cp.x_coupling * std::polar(1.0, nd.phase);
    for (int k = 0; k < segment_count; ++k) {
      const Complex g = nd.waveform.segments()[k];
      c.drive[k] += rot * g;
      c.detuning[k] += cp.stark_coefficient * std::norm(g);
    }
  }
  return c;
}

}  // namespace robustpulse
