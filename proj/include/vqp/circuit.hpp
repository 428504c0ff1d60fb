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

#include <string>
#include <vector>

#include "vqp/device_model.hpp"
#include "vqp/pulse_ir.hpp"
#include "vqp/rng.hpp"

namespace vqp {

enum class Segment { Encoding, Trainable };

struct Gate {
  std::string name;  // rx | ry | rz | u3 | cx | crx | cu3
  std::vector<int> qubits;
  std::vector<double> angles;
  Segment segment = Segment::Trainable;

  static int arity_for(const std::string& name) {
    if (name == "rx" || name == "ry" || name == "rz" || name == "crx") return 1;
    if (name == "u3" || name == "cu3") return 3;
    if (name == "cx") return 0;
    throw ValidationError("unknown gate name '" + name + "'");
  }

  static int num_qubits_for(const std::string& name) {
    return (name == "cx" || name == "crx" || name == "cu3") ? 2 : 1;
  }

  void validate(int circuit_qubits) const {
    if (static_cast<int>(angles.size()) != arity_for(name))
      throw ValidationError("gate " + name + " expects " +
                            std::to_string(arity_for(name)) + " angles, got " +
                            std::to_string(angles.size()));
    if (static_cast<int>(qubits.size()) != num_qubits_for(name))
      throw ValidationError("gate " + name + " qubit count mismatch");
    for (std::size_t i = 0; i < qubits.size(); ++i) {
      if (qubits[i] < 0 || qubits[i] >= circuit_qubits)
        throw ValidationError("gate " + name + " qubit index out of range");
      for (std::size_t k = i + 1; k < qubits.size(); ++k)
        if (qubits[i] == qubits[k])
          throw ValidationError("gate " + name + " qubits must be distinct");
    }
  }
};

struct Circuit {
  int num_qubits = 0;
  std::vector<Gate> gates;

  void validate() const {
    if (num_qubits < 1) throw ValidationError("circuit num_qubits must be >= 1");
    bool seen_trainable = false;
    for (const Gate& g : gates) {
      g.validate(num_qubits);
      if (g.segment == Segment::Trainable) seen_trainable = true;
      if (seen_trainable && g.segment == Segment::Encoding)
        throw ValidationError("encoding gates must precede trainable gates");
    }
  }

  Circuit& append(Gate g) {
    gates.push_back(std::move(g));
    return *this;
  }
};

inline Circuit concat(const Circuit& a, const Circuit& b) {
  Circuit out = a;
  out.num_qubits = std::max(a.num_qubits, b.num_qubits);
  for (const Gate& g : b.gates) out.gates.push_back(g);
  return out;
}

// ---------------------------------------------------------------------------
// Builders

/// Angle-encodes features (each in [0,1]) as rotation layers, angle = f*pi.
/// Layers alternate RY / RX so stacked rotations on one qubit do not merge.
/// Up to 4 layers, i.e. 4*num_qubits features.
inline Circuit build_encoding_circuit(const std::vector<double>& features,
                                      int num_qubits = 0) {
  if (num_qubits <= 0) {
    num_qubits = static_cast<int>(features.size()) <= 4
                     ? static_cast<int>(features.size())
                     : (static_cast<int>(features.size()) + 3) / 4;
  }
  if (static_cast<int>(features.size()) > 4 * num_qubits)
    throw ValidationError("feature count " + std::to_string(features.size()) +
                          " exceeds " + std::to_string(4 * num_qubits) +
                          " rotation slots on " + std::to_string(num_qubits) +
                          " qubits");
  Circuit c;
  c.num_qubits = num_qubits;
  for (std::size_t i = 0; i < features.size(); ++i) {
    const double f = features[i];
    if (f < 0.0 || f > 1.0)
      throw ValidationError("encoding feature out of [0,1]: " + std::to_string(f));
    const int layer = static_cast<int>(i) / num_qubits;
    const int qubit = static_cast<int>(i) % num_qubits;
    Gate g;
    g.name = (layer % 2 == 0) ? "ry" : "rx";
    g.qubits = {qubit};
    g.angles = {f * kPi};
    g.segment = Segment::Encoding;
    c.gates.push_back(std::move(g));
  }
  c.validate();
  return c;
}

/// Canonical two-qubit wire list for the interleaved ansatz. Chosen so every
/// pair is a directed coupling edge on all shipped devices.
inline std::vector<std::pair<int, int>> ansatz_pairs(int num_qubits) {
  if (num_qubits < 2)
    throw ValidationError("ansatz requires num_qubits >= 2");
  if (num_qubits == 2) return {{0, 1}, {1, 0}};
  if (num_qubits == 3) return {{0, 1}, {1, 2}, {2, 1}, {1, 0}};
  return {{0, 1}, {1, 2}, {1, 3}, {2, 1}};
}

/// The interleaved U3/CU3 baseline ansatz: 9 gates by default (U3 x5, CU3 x4),
/// or the 12-gate variant (U3 x6, CU3 x6). Angles are uniform in (-pi, pi],
/// deterministic for the seed. All gates are tagged trainable.
inline Circuit build_vqc_baseline(int num_qubits, std::uint64_t seed,
                                  bool twelve_gate = false) {
  if (num_qubits < 2)
    throw ValidationError("baseline ansatz requires num_qubits >= 2");
  RngStream rng(seed, "ansatz.angles");
  const auto pairs = ansatz_pairs(num_qubits);
  const int n_gates = twelve_gate ? 12 : 9;
  Circuit c;
  c.num_qubits = num_qubits;
  int u3_count = 0;
  int cu3_count = 0;
  for (int k = 0; k < n_gates; ++k) {
    Gate g;
    if (k % 2 == 0) {
      g.name = "u3";
      g.qubits = {u3_count % num_qubits};
      ++u3_count;
    } else {
      g.name = "cu3";
      const auto& [a, b] = pairs[cu3_count % pairs.size()];
      g.qubits = {a, b};
      ++cu3_count;
    }
    for (int i = 0; i < 3; ++i) g.angles.push_back(rng.uniform(-kPi, kPi));
    g.segment = Segment::Trainable;
    c.gates.push_back(std::move(g));
  }
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------
// Lowering

namespace detail {

inline double wrap_angle(double a) {
  // to (-pi, pi]
  a = std::fmod(a, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  if (a > kPi) a -= 2.0 * kPi;
  return a;
}

/// Appends one calibrated primitive at `offset`, binding gate angles into
/// amplitudes (linear in angle, pi-referenced) or phases, and stamping
/// segment/provenance metadata onto the emitted instructions.
inline int emit_primitive(PulseSchedule& out, const DeviceModel& dev,
                          const std::string& gate,
                          const std::vector<int>& qubits,
                          const std::vector<double>& angles, Segment segment,
                          int source_gate, int offset) {
  const CalibrationEntry& entry =
      lookup_calibration(dev.calibrations, gate, qubits);
  if (static_cast<int>(angles.size()) != entry.param_arity)
    throw ValidationError("gate " + gate + " expects " +
                          std::to_string(entry.param_arity) + " angles");
  for (Instruction inst : entry.template_schedule.instructions) {
    inst.start_dt += offset;
    inst.source_gate = source_gate;
    if (inst.kind == Instruction::Kind::Play) {
      if (inst.bind_angle >= 0) {
        const double theta =
            wrap_angle(angles[inst.bind_angle] * inst.bind_scale);
        inst.envelope = inst.envelope.with_amp(inst.envelope.amp * (theta / kPi));
      }
      inst.trainable = (segment == Segment::Trainable);
    } else if (inst.kind == Instruction::Kind::ShiftPhase) {
      if (inst.bind_angle >= 0)
        inst.phase = angles[inst.bind_angle] * inst.bind_scale;
    }
    inst.bind_angle = -1;
    inst.bind_scale = 1.0;
    out.instructions.push_back(std::move(inst));
  }
  return offset + entry.duration_dt();
}

// u3 = SP(lam) X90 SP(theta+pi) X90 SP(phi+pi) in time order; the leftover
// channel frame only rotates about Z and never changes Z-basis statistics.
inline int emit_u3(PulseSchedule& out, const DeviceModel& dev, int q,
                   double theta, double phi, double lam, Segment segment,
                   int source_gate, int offset) {
  offset = emit_primitive(out, dev, "rz", {q}, {lam}, segment, source_gate, offset);
  offset = emit_primitive(out, dev, "rx", {q}, {kPi / 2.0}, segment, source_gate,
                          offset);
  offset = emit_primitive(out, dev, "rz", {q}, {theta + kPi}, segment,
                          source_gate, offset);
  offset = emit_primitive(out, dev, "rx", {q}, {kPi / 2.0}, segment, source_gate,
                          offset);
  offset = emit_primitive(out, dev, "rz", {q}, {phi + kPi}, segment, source_gate,
                          offset);
  return offset;
}

// Standard two-CX controlled-U3 decomposition.
inline int emit_cu3(PulseSchedule& out, const DeviceModel& dev, int c, int t,
                    double theta, double phi, double lam, Segment segment,
                    int source_gate, int offset) {
  offset = emit_primitive(out, dev, "rz", {c}, {(lam + phi) / 2.0}, segment,
                          source_gate, offset);
  offset = emit_primitive(out, dev, "rz", {t}, {(lam - phi) / 2.0}, segment,
                          source_gate, offset);
  offset = emit_primitive(out, dev, "cx", {c, t}, {}, segment, source_gate, offset);
  offset = emit_u3(out, dev, t, -theta / 2.0, 0.0, -(phi + lam) / 2.0, segment,
                   source_gate, offset);
  offset = emit_primitive(out, dev, "cx", {c, t}, {}, segment, source_gate, offset);
  offset = emit_u3(out, dev, t, theta / 2.0, phi, 0.0, segment, source_gate,
                   offset);
  return offset;
}

}  // namespace detail

/// Lowers a gate circuit to a pulse schedule through the device calibration
/// table. Gates are laid out strictly sequentially, so lowering is
/// homomorphic over circuit concatenation. Gates without a table entry (u3,
/// cu3) go through their rz/rx/cx decompositions first. Play instructions
/// inherit the source gate's segment tag and index.
inline PulseSchedule lower(const Circuit& c, const DeviceModel& dev) {
  c.validate();
  if (c.num_qubits > dev.num_qubits)
    throw ValidationError("circuit uses " + std::to_string(c.num_qubits) +
                          " qubits but device '" + dev.name + "' has " +
                          std::to_string(dev.num_qubits));
  PulseSchedule out;
  out.device = dev.name;
  int offset = 0;
  for (std::size_t gi = 0; gi < c.gates.size(); ++gi) {
    const Gate& g = c.gates[gi];
    const int src = static_cast<int>(gi);
    if (g.name == "u3") {
      offset = detail::emit_u3(out, dev, g.qubits[0], g.angles[0], g.angles[1],
                               g.angles[2], g.segment, src, offset);
    } else if (g.name == "cu3") {
      offset = detail::emit_cu3(out, dev, g.qubits[0], g.qubits[1], g.angles[0],
                                g.angles[1], g.angles[2], g.segment, src, offset);
    } else {
      offset = detail::emit_primitive(out, dev, g.name, g.qubits, g.angles,
                                      g.segment, src, offset);
    }
  }
  out.validate();
  return out;
}

// ---------------------------------------------------------------------------
// JSON

inline Json circuit_to_json(const Circuit& c) {
  Json j;
  j["num_qubits"] = c.num_qubits;
  Json gates = Json::array();
  for (const Gate& g : c.gates) {
    Json gj;
    gj["name"] = g.name;
    gj["qubits"] = g.qubits;
    gj["angles"] = g.angles;
    gj["segment"] = g.segment == Segment::Encoding ? "encoding" : "trainable";
    gates.push_back(gj);
  }
  j["gates"] = gates;
  return j;
}

inline Circuit circuit_from_json(const Json& j) {
  detail::require_keys(j, "circuit", {"num_qubits", "gates"});
  Circuit c;
  c.num_qubits = detail::need(j, "circuit", "num_qubits").get<int>();
  for (const Json& gj : detail::need(j, "circuit", "gates")) {
    detail::require_keys(gj, "circuit.gates[]",
                         {"name", "qubits", "angles", "segment"});
    Gate g;
    g.name = detail::need(gj, "circuit.gates[]", "name").get<std::string>();
    for (const Json& q : detail::need(gj, "circuit.gates[]", "qubits"))
      g.qubits.push_back(q.get<int>());
    if (gj.contains("angles"))
      for (const Json& a : gj["angles"]) g.angles.push_back(a.get<double>());
    const std::string seg =
        gj.contains("segment") ? gj["segment"].get<std::string>() : "trainable";
    if (seg == "encoding")
      g.segment = Segment::Encoding;
    else if (seg == "trainable")
      g.segment = Segment::Trainable;
    else
      throw ParseError("circuit.gates[].segment: unknown tag '" + seg + "'");
    c.gates.push_back(std::move(g));
  }
  c.validate();
  return c;
}

}  // namespace vqp
