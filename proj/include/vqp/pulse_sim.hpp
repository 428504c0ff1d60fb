// Copyright 2026 The vqp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "vqp/device_model.hpp"
#include "vqp/pulse_ir.hpp"
#include "vqp/rng.hpp"

namespace vqp {

using Eigen::MatrixXcd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

enum class Frame { Rotating, Lab };
enum class CouplingModel { Bus, EffectiveDirect };

/// Integration controls. The propagator is a per-step matrix exponential of
/// the piecewise-constant Hamiltonian sampled at step midpoints.
///
///  - stride_dt > 1 coarsens envelope sampling (rotating frame only; signals
///    there vary on envelope timescales, so strides of ~4-16 dt trade little
///    accuracy for a large speedup).
///  - substeps > 1 subdivides each dt for fast carriers; required for the lab
///    frame, where the qubit LO itself must be resolved.
struct SimOptions {
  Frame frame = Frame::Rotating;
  CouplingModel coupling = CouplingModel::Bus;
  int stride_dt = 1;
  int substeps = 1;
  std::vector<int> active_qubits;  // empty: derive from schedule channels
};

/// The simulated subsystem: the qubits a schedule touches plus one bus mode
/// per coupled pair of active qubits (Bus model). Basis index layout:
/// qubit bits first (active slot 0 most significant), then bus occupation
/// digits in base `cutoff`.
struct StateSpace {
  struct Bus {
    int a = 0;  // device qubit ids
    int b = 0;
    double freq_ghz = 0.0;
    double g_ghz = 0.0;
  };

  std::vector<int> qubits;  // ascending device ids
  std::vector<Bus> buses;
  int cutoff = 1;

  int num_qubits() const { return static_cast<int>(qubits.size()); }

  int bus_block() const {
    int b = 1;
    for (std::size_t i = 0; i < buses.size(); ++i) b *= cutoff;
    return b;
  }

  int dim() const { return (1 << qubits.size()) * bus_block(); }

  int qubit_slot(int device_q) const {
    for (std::size_t s = 0; s < qubits.size(); ++s)
      if (qubits[s] == device_q) return static_cast<int>(s);
    return -1;
  }

  int qubit_stride(int slot) const {
    return (1 << (num_qubits() - 1 - slot)) * bus_block();
  }

  int bus_stride(int m) const {
    int s = 1;
    for (int i = static_cast<int>(buses.size()) - 1; i > m; --i) s *= cutoff;
    return s;
  }

  int qubit_bit(int idx, int slot) const { return (idx / qubit_stride(slot)) % 2; }

  int bus_digit(int idx, int m) const { return (idx / bus_stride(m)) % cutoff; }
};

struct SimResult {
  VectorXcd final_state;  // over qubit (x) bus space
  StateSpace space;
};

// ---------------------------------------------------------------------------
// LO mixing

/// Physical drive value: Re(d * e^{i w t}).
inline double mix_at(Complex d, double w_rad_per_ns, double t_ns) {
  return (d * std::polar(1.0, w_rad_per_ns * t_ns)).real();
}

/// Mixes a complex envelope sample array with its carrier into the real
/// signal applied to the qubit's X coupling. Drive channels use the channel
/// LO; control channels use the LO difference of the edge's qubits.
inline std::vector<double> mix_drive_signal(const std::vector<Complex>& samples,
                                            double lo_rad_per_ns, int t0_dt,
                                            double dt_ns) {
  std::vector<double> out(samples.size());
  for (std::size_t k = 0; k < samples.size(); ++k)
    out[k] = mix_at(samples[k], lo_rad_per_ns,
                    (static_cast<double>(t0_dt) + static_cast<double>(k)) * dt_ns);
  return out;
}

// ---------------------------------------------------------------------------
// Hamiltonian assembly

/// Builds H(t) (units: rad/ns) for one schedule on one device, restricted to
/// the active subsystem. Hermitian by construction; exposed so tests can
/// probe it at arbitrary sample times.
class HamiltonianAssembler {
 public:
  HamiltonianAssembler(const PulseSchedule& schedule, const DeviceModel& dev,
                       const SimOptions& opts)
      : dev_(dev), opts_(opts) {
    space_ = derive_space(schedule, dev, opts);
    for (const Channel& ch : channels(schedule)) {
      if (ch.kind == ChannelKind::Acquire) continue;
      DriveLine line;
      line.channel = ch;
      line.track = ChannelTrack(schedule, ch);
      const int q = ch.driven_qubit();
      if (q < 0 || q >= dev.num_qubits)
        throw SimError("channel " + ch.label() + " outside device '" + dev.name +
                       "'");
      line.slot = space_.qubit_slot(q);
      if (line.slot < 0)
        throw SimError("channel " + ch.label() +
                       " drives a qubit outside the active subsystem");
      if (ch.kind == ChannelKind::Control) {
        if (!dev.has_edge(ch.a, ch.b))
          throw SimError("control channel " + ch.label() +
                         " is not a coupling-map edge");
        line.carrier_rad_ns =
            two_pi() * (dev.drive_lo_ghz[ch.a] - dev.drive_lo_ghz[ch.b]);
      } else if (ch.kind == ChannelKind::Measure) {
        // Measure stimulus does not enter the qubit drive Hamiltonian.
        continue;
      } else {
        // Frame sits at the channel LO, so the envelope carries no residual
        // carrier in the rotating picture.
        line.carrier_rad_ns = 0.0;
        line.lab_lo_rad_ns = two_pi() * dev.drive_lo_ghz[q];
      }
      lines_.push_back(std::move(line));
    }
  }

  const StateSpace& space() const { return space_; }

  /// H at fractional schedule time t (dt units).
  MatrixXcd at(double t_dt) const {
    const int d = space_.dim();
    MatrixXcd h = MatrixXcd::Zero(d, d);
    const double t_ns = t_dt * dev_.dt_ns();
    add_static(h, t_ns);
    const double omega = two_pi() * dev_.max_drive_rate_ghz;
    for (const DriveLine& line : lines_) {
      Complex s = line.track.value_at(t_dt);
      if (!std::isfinite(s.real()) || !std::isfinite(s.imag()))
        throw SimError("non-finite sample on channel " + line.channel.label());
      if (opts_.frame == Frame::Rotating) {
        if (line.channel.kind == ChannelKind::Control)
          s *= std::polar(1.0, line.carrier_rad_ns * t_ns);
        add_rwa_drive(h, line.slot, 0.5 * omega, s);
      } else {
        const double carrier = line.channel.kind == ChannelKind::Control
                                   ? line.carrier_rad_ns
                                   : line.lab_lo_rad_ns;
        add_x_drive(h, line.slot, omega * mix_at(s, carrier, t_ns));
      }
    }
    return h;
  }

 private:
  struct DriveLine {
    Channel channel;
    ChannelTrack track;
    int slot = 0;
    double carrier_rad_ns = 0.0;  // control channels: LO difference
    double lab_lo_rad_ns = 0.0;
  };

  static constexpr double two_pi() { return 2.0 * kPi; }

  static StateSpace derive_space(const PulseSchedule& schedule,
                                 const DeviceModel& dev, const SimOptions& opts) {
    StateSpace sp;
    if (!opts.active_qubits.empty()) {
      sp.qubits = opts.active_qubits;
      std::sort(sp.qubits.begin(), sp.qubits.end());
      sp.qubits.erase(std::unique(sp.qubits.begin(), sp.qubits.end()),
                      sp.qubits.end());
    } else {
      for (const Channel& ch : channels(schedule)) {
        auto touch = [&](int q) {
          if (std::find(sp.qubits.begin(), sp.qubits.end(), q) == sp.qubits.end())
            sp.qubits.push_back(q);
        };
        touch(ch.a);
        if (ch.kind == ChannelKind::Control) touch(ch.b);
      }
      std::sort(sp.qubits.begin(), sp.qubits.end());
    }
    if (sp.qubits.empty()) sp.qubits = {0};
    for (int q : sp.qubits)
      if (q < 0 || q >= dev.num_qubits)
        throw SimError("active qubit " + std::to_string(q) +
                       " outside device '" + dev.name + "'");
    if (opts.coupling == CouplingModel::Bus) {
      sp.cutoff = dev.bus_fock_cutoff;
      for (const DeviceModel::BusCoupling& c : dev.couplings) {
        if (sp.qubit_slot(c.a) < 0 || sp.qubit_slot(c.b) < 0) continue;
        sp.buses.push_back({c.a, c.b, c.bus_freq_ghz, c.g_ghz});
      }
      if (sp.buses.empty()) sp.cutoff = 1;
    }
    return sp;
  }

  void add_static(MatrixXcd& h, double t_ns) const {
    const int d = space_.dim();
    // Diagonal frame residuals.
    for (int s = 0; s < space_.num_qubits(); ++s) {
      const int q = space_.qubits[s];
      const double delta = opts_.frame == Frame::Rotating
                               ? two_pi() * (dev_.qubit_freq_ghz[q] -
                                             dev_.drive_lo_ghz[q])
                               : two_pi() * dev_.qubit_freq_ghz[q];
      if (delta == 0.0) continue;
      for (int idx = 0; idx < d; ++idx)
        if (space_.qubit_bit(idx, s) == 1) h(idx, idx) += delta;
    }
    for (std::size_t m = 0; m < space_.buses.size(); ++m) {
      if (opts_.frame == Frame::Rotating) break;  // frame at bus frequency
      const double wb = two_pi() * space_.buses[m].freq_ghz;
      for (int idx = 0; idx < d; ++idx)
        h(idx, idx) += wb * space_.bus_digit(idx, static_cast<int>(m));
    }
    if (opts_.coupling == CouplingModel::Bus) {
      for (std::size_t m = 0; m < space_.buses.size(); ++m)
        add_bus_coupling(h, static_cast<int>(m), t_ns);
    } else {
      for (const DeviceModel::BusCoupling& c : dev_.couplings) {
        const int sa = space_.qubit_slot(c.a);
        const int sb = space_.qubit_slot(c.b);
        if (sa < 0 || sb < 0) continue;
        add_effective_coupling(h, sa, sb, c, t_ns);
      }
    }
  }

  // Jaynes-Cummings exchange with each endpoint qubit; in the rotating frame
  // the co-rotating term carries the qubit-bus detuning and the
  // counter-rotating term is dropped.
  void add_bus_coupling(MatrixXcd& h, int m, double t_ns) const {
    const StateSpace::Bus& bus = space_.buses[m];
    const int d = space_.dim();
    const int bstr = space_.bus_stride(m);
    for (int q : {bus.a, bus.b}) {
      const int slot = space_.qubit_slot(q);
      const int qstr = space_.qubit_stride(slot);
      const double g = two_pi() * bus.g_ghz;
      if (opts_.frame == Frame::Rotating) {
        const double det =
            two_pi() * (dev_.drive_lo_ghz[q] - bus.freq_ghz) * t_ns;
        const Complex c = g * std::polar(1.0, det);
        for (int idx = 0; idx < d; ++idx) {
          if (space_.qubit_bit(idx, slot) != 0) continue;
          const int n = space_.bus_digit(idx, m);
          if (n == 0) continue;
          const int to = idx + qstr - bstr;  // sigma+ a
          const Complex v = c * std::sqrt(static_cast<double>(n));
          h(to, idx) += v;
          h(idx, to) += std::conj(v);
        }
      } else {
        // g sigma_x (a + a^dagger), no approximation.
        for (int idx = 0; idx < d; ++idx) {
          const int bit = space_.qubit_bit(idx, slot);
          const int n = space_.bus_digit(idx, m);
          const int qflip = bit == 0 ? idx + qstr : idx - qstr;
          if (n > 0)
            h(qflip - bstr, idx) += g * std::sqrt(static_cast<double>(n));
          if (n < space_.cutoff - 1)
            h(qflip + bstr, idx) += g * std::sqrt(static_cast<double>(n + 1));
        }
      }
    }
  }

  // Bus eliminated into a direct exchange J sigma+ sigma- (rotating) or
  // J sigma_x sigma_x (lab), with J from second-order bus virtual exchange.
  void add_effective_coupling(MatrixXcd& h, int sa, int sb,
                              const DeviceModel::BusCoupling& c,
                              double t_ns) const {
    const double da = dev_.qubit_freq_ghz[c.a] - c.bus_freq_ghz;
    const double db = dev_.qubit_freq_ghz[c.b] - c.bus_freq_ghz;
    const double j_ghz = 0.5 * c.g_ghz * c.g_ghz * (1.0 / da + 1.0 / db);
    const double j = two_pi() * j_ghz;
    const int d = space_.dim();
    const int stra = space_.qubit_stride(sa);
    const int strb = space_.qubit_stride(sb);
    if (opts_.frame == Frame::Rotating) {
      const double det =
          two_pi() * (dev_.drive_lo_ghz[c.a] - dev_.drive_lo_ghz[c.b]) * t_ns;
      const Complex v = j * std::polar(1.0, det);
      for (int idx = 0; idx < d; ++idx) {
        if (space_.qubit_bit(idx, sa) != 0 || space_.qubit_bit(idx, sb) != 1)
          continue;
        const int to = idx + stra - strb;  // sigma+_a sigma-_b
        h(to, idx) += v;
        h(idx, to) += std::conj(v);
      }
    } else {
      for (int idx = 0; idx < d; ++idx) {
        const int fa = space_.qubit_bit(idx, sa) == 0 ? idx + stra : idx - stra;
        const int to = space_.qubit_bit(fa, sb) == 0 ? fa + strb : fa - strb;
        h(to, idx) += j;
      }
    }
  }

  // (omega/2)(s* sigma+ + s sigma-) on the slot's qubit.
  void add_rwa_drive(MatrixXcd& h, int slot, double half_omega, Complex s) const {
    const int d = space_.dim();
    const int str = space_.qubit_stride(slot);
    const Complex up = half_omega * std::conj(s);
    for (int idx = 0; idx < d; ++idx) {
      if (space_.qubit_bit(idx, slot) != 0) continue;
      h(idx + str, idx) += up;
      h(idx, idx + str) += std::conj(up);
    }
  }

  void add_x_drive(MatrixXcd& h, int slot, double value) const {
    const int d = space_.dim();
    const int str = space_.qubit_stride(slot);
    for (int idx = 0; idx < d; ++idx) {
      if (space_.qubit_bit(idx, slot) != 0) continue;
      h(idx + str, idx) += value;
      h(idx, idx + str) += value;
    }
  }

  const DeviceModel& dev_;
  SimOptions opts_;
  StateSpace space_;
  std::vector<DriveLine> lines_;
};

// ---------------------------------------------------------------------------
// Evolution

inline VectorXcd ground_state(int num_qubits) {
  VectorXcd v = VectorXcd::Zero(1 << num_qubits);
  v(0) = 1.0;
  return v;
}

namespace detail {

/// Embeds a qubit-space state into the qubit (x) bus space (buses in vacuum).
inline VectorXcd embed_initial(const VectorXcd& initial, const StateSpace& sp) {
  const int qdim = 1 << sp.num_qubits();
  if (initial.size() == sp.dim()) return initial;
  if (initial.size() != qdim)
    throw SimError("initial state dimension " + std::to_string(initial.size()) +
                   " matches neither qubit space (" + std::to_string(qdim) +
                   ") nor full space (" + std::to_string(sp.dim()) + ")");
  VectorXcd full = VectorXcd::Zero(sp.dim());
  const int bb = sp.bus_block();
  for (int q = 0; q < qdim; ++q) full(q * bb) = initial(q);
  return full;
}

template <typename StepFn>
inline void step_schedule(const PulseSchedule& s, const DeviceModel& dev,
                          const SimOptions& opts, StepFn&& step) {
  const int duration = schedule_duration(s);
  const int stride = std::max(1, opts.stride_dt);
  const int substeps = std::max(1, opts.substeps);
  for (int t0 = 0; t0 < duration; t0 += stride) {
    const int chunk = std::min(stride, duration - t0);
    const double piece = static_cast<double>(chunk) / substeps;
    for (int k = 0; k < substeps; ++k) {
      const double mid = t0 + (k + 0.5) * piece;
      step(mid, piece * dev.dt_ns());
    }
  }
}

}  // namespace detail

/// Piecewise-constant propagation of the drive Hamiltonian: one Hermitian
/// matrix exponential per step, applied via eigendecomposition (hence exactly
/// unitary up to round-off). Norm is preserved to ~1e-12 over full schedules.
inline SimResult evolve(const PulseSchedule& s, const DeviceModel& dev,
                        const VectorXcd& initial, const SimOptions& opts = {}) {
  SimOptions o = opts;
  if (o.active_qubits.empty() && channels(s).empty()) {
    // Channel-free schedule: take the subsystem size from the initial state.
    int nq = 0;
    while ((Eigen::Index(1) << nq) < initial.size()) ++nq;
    if ((Eigen::Index(1) << nq) != initial.size())
      throw SimError("initial state dimension must be a power of two");
    for (int q = 0; q < std::max(nq, 1); ++q) o.active_qubits.push_back(q);
  }
  HamiltonianAssembler assembler(s, dev, o);
  const SimOptions& opts_used = o;
  const StateSpace& sp = assembler.space();
  VectorXcd psi = detail::embed_initial(initial, sp);
  if (std::abs(psi.norm() - 1.0) > 1e-9)
    throw SimError("initial state is not normalized");
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es;
  detail::step_schedule(s, dev, opts_used, [&](double t_mid, double tau_ns) {
    es.compute(assembler.at(t_mid));
    const VectorXcd phases =
        (es.eigenvalues().array() * Complex(0.0, -tau_ns)).exp();
    psi = es.eigenvectors() *
          (phases.array() * (es.eigenvectors().adjoint() * psi).array()).matrix();
  });
  return {std::move(psi), sp};
}

/// Full propagator over the schedule window; lets callers reuse one heavy
/// simulation across many initial states.
inline std::pair<MatrixXcd, StateSpace> evolve_unitary(const PulseSchedule& s,
                                                       const DeviceModel& dev,
                                                       const SimOptions& opts = {}) {
  HamiltonianAssembler assembler(s, dev, opts);
  const StateSpace& sp = assembler.space();
  MatrixXcd u = MatrixXcd::Identity(sp.dim(), sp.dim());
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es;
  detail::step_schedule(s, dev, opts, [&](double t_mid, double tau_ns) {
    es.compute(assembler.at(t_mid));
    const VectorXcd phases =
        (es.eigenvalues().array() * Complex(0.0, -tau_ns)).exp();
    u = es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint() * u;
  });
  return {std::move(u), sp};
}

// ---------------------------------------------------------------------------
// Measurement

/// Computational-basis probabilities of the qubits, bus modes traced out by
/// marginalization.
inline std::vector<double> qubit_probabilities(const SimResult& r) {
  const int qdim = 1 << r.space.num_qubits();
  const int bb = r.space.bus_block();
  std::vector<double> p(qdim, 0.0);
  for (int q = 0; q < qdim; ++q)
    for (int b = 0; b < bb; ++b) p[q] += std::norm(r.final_state(q * bb + b));
  double total = 0.0;
  for (double v : p) total += v;
  if (total <= 0.0) throw SimError("state has zero norm");
  for (double& v : p) v /= total;
  return p;
}

inline std::string bitstring_of(int config, int num_qubits) {
  std::string s(num_qubits, '0');
  for (int i = 0; i < num_qubits; ++i)
    if ((config >> (num_qubits - 1 - i)) & 1) s[i] = '1';
  return s;
}

/// Multinomial shot sampling over the qubit marginal; deterministic for a
/// fixed stream.
inline std::map<std::string, int> measure(const SimResult& r, int shots,
                                          RngStream& rng) {
  if (shots < 1) throw SimError("shots must be >= 1");
  const std::vector<double> p = qubit_probabilities(r);
  const int nq = r.space.num_qubits();
  std::map<std::string, int> counts;
  for (int shot = 0; shot < shots; ++shot) {
    const double u = rng.uniform();
    double acc = 0.0;
    int chosen = static_cast<int>(p.size()) - 1;
    for (std::size_t i = 0; i < p.size(); ++i) {
      acc += p[i];
      if (u < acc) {
        chosen = static_cast<int>(i);
        break;
      }
    }
    counts[bitstring_of(chosen, nq)] += 1;
  }
  return counts;
}

inline std::map<std::string, int> measure(const SimResult& r, int shots,
                                          std::uint64_t seed) {
  RngStream rng(seed, "measure");
  return measure(r, shots, rng);
}

/// (n0 - n1) / shots for one qubit's marginal of the counts.
inline double z_expectation(const std::map<std::string, int>& counts, int qubit) {
  if (counts.empty()) throw SimError("empty counts");
  long long num = 0;
  long long shots = 0;
  for (const auto& [bits, n] : counts) {
    if (qubit < 0 || qubit >= static_cast<int>(bits.size()))
      throw SimError("qubit index " + std::to_string(qubit) +
                     " outside bitstring of length " + std::to_string(bits.size()));
    num += bits[qubit] == '0' ? n : -n;
    shots += n;
  }
  return static_cast<double>(num) / static_cast<double>(shots);
}

/// Exact Z expectation from the state (shot-free path).
inline double z_expectation_exact(const SimResult& r, int qubit_slot) {
  const std::vector<double> p = qubit_probabilities(r);
  const int nq = r.space.num_qubits();
  double z = 0.0;
  for (std::size_t cfg = 0; cfg < p.size(); ++cfg) {
    const bool one = (cfg >> (nq - 1 - qubit_slot)) & 1;
    z += (one ? -1.0 : 1.0) * p[cfg];
  }
  return z;
}

// ---------------------------------------------------------------------------
// Ship-time amplitude calibration

/// Rabi scan: sweeps the drive amplitude of a single pulse on one qubit and
/// returns the amplitude of the first excitation maximum (the pi-pulse
/// amplitude). Golden-section search on the simulated excited population,
/// which rises monotonically to its first maximum within amp in (0, 1].
inline double rabi_scan(const DeviceModel& dev, int qubit,
                        const Envelope& unit_envelope,
                        const SimOptions& opts = {}) {
  auto population = [&](double amp) {
    PulseSchedule s;
    s.device = dev.name;
    s.add(Instruction::play(0, Channel::drive(qubit), unit_envelope.with_amp(amp)));
    SimOptions o = opts;
    o.active_qubits = {qubit};
    const SimResult r = evolve(s, dev, ground_state(1), o);
    return qubit_probabilities(r)[1];
  };
  const double inv_phi = 0.6180339887498949;
  double lo = 0.02;
  double hi = 1.0;
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = population(x1);
  double f2 = population(x2);
  for (int it = 0; it < 48; ++it) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = population(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = population(x1);
    }
  }
  const double amp = 0.5 * (lo + hi);
  if (population(amp) < 0.995)
    throw SimError("rabi scan failed to reach the excitation peak (amp " +
                   std::to_string(amp) + ")");
  return amp;
}

}  // namespace vqp
