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
#include <string>
#include <vector>

#include "vqp/pulse_ir.hpp"

namespace vqp {

/// Which instructions training may touch. Encoding-tagged and measurement
/// pulses are always frozen; the drive_only flag additionally freezes
/// control-channel plays.
struct FrozenMask {
  std::vector<bool> frozen;  // per instruction index

  static FrozenMask for_schedule(const PulseSchedule& s, bool drive_only = false) {
    FrozenMask m;
    m.frozen.resize(s.instructions.size(), true);
    for (std::size_t i = 0; i < s.instructions.size(); ++i) {
      const Instruction& inst = s.instructions[i];
      if (inst.kind != Instruction::Kind::Play) continue;
      if (!inst.trainable) continue;
      if (inst.channel.kind == ChannelKind::Measure ||
          inst.channel.kind == ChannelKind::Acquire)
        continue;
      if (drive_only && inst.channel.kind == ChannelKind::Control) continue;
      m.frozen[i] = false;
    }
    return m;
  }
};

/// Flattened (magnitude, angle) view of the trainable amplitudes: layout
/// [m_1..m_k, phi_1..phi_k] with m in [0,1] and phi in (-pi, pi]. Provenance
/// anchors tie each slot back to its play instruction.
struct ParamVector {
  struct Anchor {
    int instruction_index = -1;
    Channel channel;

    friend bool operator==(const Anchor&, const Anchor&) = default;
  };

  std::vector<double> values;
  std::vector<Anchor> provenance;
  std::vector<double> m_lo;  // per-magnitude box, defaults to [0,1]
  std::vector<double> m_hi;

  int k() const { return static_cast<int>(provenance.size()); }
  double magnitude(int i) const { return values[i]; }
  double angle(int i) const { return values[k() + i]; }

  void validate() const {
    if (values.size() != 2 * provenance.size())
      throw ValidationError("param vector length must be 2k");
    for (int i = 0; i < k(); ++i) {
      if (magnitude(i) < m_lo[i] - 1e-12 || magnitude(i) > m_hi[i] + 1e-12)
        throw BoundsError("magnitude " + std::to_string(i) + " = " +
                          std::to_string(magnitude(i)) + " outside [" +
                          std::to_string(m_lo[i]) + ", " +
                          std::to_string(m_hi[i]) + "]");
      if (angle(i) <= -kPi - 1e-12 || angle(i) > kPi + 1e-12)
        throw BoundsError("angle " + std::to_string(i) + " outside (-pi, pi]");
    }
  }
};

/// Pulls the trainable amplitudes out of a schedule as (magnitude, angle)
/// pairs, in instruction order.
inline ParamVector extract(const PulseSchedule& s, const FrozenMask& mask) {
  if (mask.frozen.size() != s.instructions.size())
    throw ProvenanceError("mask length does not match schedule");
  ParamVector p;
  std::vector<double> angles;
  for (std::size_t i = 0; i < s.instructions.size(); ++i) {
    if (mask.frozen[i]) continue;
    const Instruction& inst = s.instructions[i];
    if (inst.kind != Instruction::Kind::Play)
      throw ProvenanceError("mask marks a non-play instruction trainable");
    const Complex z = inst.envelope.amp;
    p.values.push_back(std::abs(z));
    angles.push_back(std::atan2(z.imag(), z.real()));
    p.provenance.push_back({static_cast<int>(i), inst.channel});
  }
  if (p.provenance.empty())
    throw ValidationError("schedule has no trainable play instructions");
  p.values.insert(p.values.end(), angles.begin(), angles.end());
  p.m_lo.assign(p.provenance.size(), 0.0);
  p.m_hi.assign(p.provenance.size(), 1.0);
  return p;
}

inline ParamVector extract(const PulseSchedule& s, bool drive_only = false) {
  return extract(s, FrozenMask::for_schedule(s, drive_only));
}

/// Writes the vector's amplitudes back over the anchored plays; every other
/// field of the schedule is left bit-identical. Slots whose (m, phi) equal
/// the play's current polar form are skipped, so a pure extract/reconstruct
/// round trip reproduces the schedule exactly.
inline PulseSchedule reconstruct(const PulseSchedule& s0, const ParamVector& p) {
  if (p.values.size() != 2 * p.provenance.size())
    throw ProvenanceError("param vector length must be 2k");
  PulseSchedule out = s0;
  for (int i = 0; i < p.k(); ++i) {
    const ParamVector::Anchor& a = p.provenance[i];
    if (a.instruction_index < 0 ||
        a.instruction_index >= static_cast<int>(out.instructions.size()))
      throw ProvenanceError("anchor index " + std::to_string(a.instruction_index) +
                            " outside schedule");
    Instruction& inst = out.instructions[a.instruction_index];
    if (inst.kind != Instruction::Kind::Play || !inst.trainable ||
        inst.channel != a.channel)
      throw ProvenanceError("anchor " + std::to_string(i) +
                            " does not match a trainable play on " +
                            a.channel.label());
    const double m = p.magnitude(i);
    const double phi = p.angle(i);
    if (m < 0.0 || m > 1.0 + kAmpTol)
      throw ValidationError("reconstructed magnitude " + std::to_string(m) +
                            " violates the norm bound");
    const Complex z = inst.envelope.amp;
    if (std::abs(z) == m && std::atan2(z.imag(), z.real()) == phi) continue;
    inst.envelope = inst.envelope.with_amp(Complex{m * std::cos(phi),
                                                   m * std::sin(phi)});
  }
  out.validate();
  return out;
}

/// Affine map to the optimizer's unit box: magnitudes are already in [0,1]
/// (identity); angles map (-pi, pi] -> (0, 1].
inline std::vector<double> normalize(const ParamVector& p) {
  p.validate();
  std::vector<double> u(p.values.size());
  for (int i = 0; i < p.k(); ++i) u[i] = p.magnitude(i);
  for (int i = 0; i < p.k(); ++i)
    u[p.k() + i] = (p.angle(i) + kPi) / (2.0 * kPi);
  return u;
}

/// Exact inverse of normalize; the prototype supplies provenance and bounds.
inline ParamVector denormalize(const std::vector<double>& u,
                               const ParamVector& prototype) {
  if (u.size() != prototype.values.size())
    throw BoundsError("normalized vector length mismatch");
  ParamVector p = prototype;
  const int k = p.k();
  for (int i = 0; i < k; ++i) {
    if (u[i] < 0.0 - 1e-12 || u[i] > 1.0 + 1e-12)
      throw BoundsError("normalized magnitude outside [0,1]");
    p.values[i] = u[i];
    double phi = u[k + i] * 2.0 * kPi - kPi;
    if (phi <= -kPi) phi = kPi;  // canonicalize the wrap point
    p.values[k + i] = phi;
  }
  p.validate();
  return p;
}

/// Optional per-parameter trust region: magnitudes boxed to
/// [m0 - delta, m0 + delta] intersected with [0,1]. delta >= 1 recovers the
/// full box.
inline ParamVector apply_trust_region(const ParamVector& p0, double delta) {
  ParamVector p = p0;
  for (int i = 0; i < p.k(); ++i) {
    p.m_lo[i] = std::max(0.0, p.magnitude(i) - delta);
    p.m_hi[i] = std::min(1.0, p.magnitude(i) + delta);
  }
  return p;
}

/// Optimizer box in normalized coordinates.
inline std::vector<std::pair<double, double>> normalized_bounds(
    const ParamVector& p) {
  std::vector<std::pair<double, double>> b;
  for (int i = 0; i < p.k(); ++i) b.push_back({p.m_lo[i], p.m_hi[i]});
  for (int i = 0; i < p.k(); ++i) b.push_back({0.0, 1.0});
  return b;
}

// ---------------------------------------------------------------------------
// JSON (provenance anchors make training resumable)

inline Json param_vector_to_json(const ParamVector& p) {
  Json j;
  j["values"] = p.values;
  Json anchors = Json::array();
  for (const auto& a : p.provenance) {
    Json aj;
    aj["instruction_index"] = a.instruction_index;
    aj["channel"] = a.channel.label();
    anchors.push_back(aj);
  }
  j["provenance"] = anchors;
  j["m_lo"] = p.m_lo;
  j["m_hi"] = p.m_hi;
  return j;
}

inline ParamVector param_vector_from_json(const Json& j) {
  detail::require_keys(j, "param_vector", {"values", "provenance", "m_lo", "m_hi"});
  ParamVector p;
  for (const Json& v : detail::need(j, "param_vector", "values"))
    p.values.push_back(v.get<double>());
  for (const Json& aj : detail::need(j, "param_vector", "provenance")) {
    detail::require_keys(aj, "param_vector.provenance[]",
                         {"instruction_index", "channel"});
    ParamVector::Anchor a;
    a.instruction_index =
        detail::need(aj, "param_vector.provenance[]", "instruction_index").get<int>();
    a.channel = Channel::parse(
        detail::need(aj, "param_vector.provenance[]", "channel").get<std::string>());
    p.provenance.push_back(a);
  }
  for (const Json& v : detail::need(j, "param_vector", "m_lo"))
    p.m_lo.push_back(v.get<double>());
  for (const Json& v : detail::need(j, "param_vector", "m_hi"))
    p.m_hi.push_back(v.get<double>());
  p.validate();
  return p;
}

}  // namespace vqp
