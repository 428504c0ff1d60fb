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

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "vqp/errors.hpp"

namespace vqp {

using Complex = std::complex<double>;
using Json = nlohmann::ordered_json;

constexpr double kPi = 3.14159265358979323846;
constexpr double kAmpTol = 1e-12;

// ---------------------------------------------------------------------------
// Channels

enum class ChannelKind { Drive, Control, Measure, Acquire };

/// A typed stimulus or readout line. Drive/Measure/Acquire lines belong to a
/// qubit; Control lines belong to a directed coupling edge and physically
/// drive the edge's control qubit.
struct Channel {
  ChannelKind kind = ChannelKind::Drive;
  int a = 0;   // qubit index (Drive/Measure/Acquire), control qubit (Control)
  int b = -1;  // target qubit (Control only)

  static Channel drive(int q) { return {ChannelKind::Drive, q, -1}; }
  static Channel control(int c, int t) { return {ChannelKind::Control, c, t}; }
  static Channel measure(int q) { return {ChannelKind::Measure, q, -1}; }
  static Channel acquire(int q) { return {ChannelKind::Acquire, q, -1}; }

  /// Qubit the line stimulates (control lines drive their control qubit).
  int driven_qubit() const { return a; }

  std::string label() const {
    switch (kind) {
      case ChannelKind::Drive:
        return "d" + std::to_string(a);
      case ChannelKind::Control:
        return "u" + std::to_string(a) + "_" + std::to_string(b);
      case ChannelKind::Measure:
        return "m" + std::to_string(a);
      case ChannelKind::Acquire:
        return "a" + std::to_string(a);
    }
    return "?";
  }

  static Channel parse(std::string_view s) {
    auto bad = [&] {
      throw UnknownChannelError("unknown channel label '" + std::string(s) +
                                "' (expected d<q>, u<c>_<t>, m<q>, or a<q>)");
    };
    if (s.size() < 2) bad();
    char k = s[0];
    std::string rest(s.substr(1));
    try {
      if (k == 'u') {
        auto sep = rest.find('_');
        if (sep == std::string::npos) bad();
        return control(std::stoi(rest.substr(0, sep)),
                       std::stoi(rest.substr(sep + 1)));
      }
      int q = std::stoi(rest);
      if (k == 'd') return drive(q);
      if (k == 'm') return measure(q);
      if (k == 'a') return acquire(q);
    } catch (const std::exception&) {
      bad();
    }
    bad();
    return {};
  }

  friend auto operator<=>(const Channel&, const Channel&) = default;
};

// ---------------------------------------------------------------------------
// Envelopes

enum class EnvelopeKind { Gaussian, GaussianSquare, Drag, Constant, Samples };

/// A complex-valued pulse envelope sampled on the dt grid. Gaussian-family
/// shapes are peak-normalized and lifted to zero at the segment start, so
/// `amp` is the literal peak height. The norm bound |amp| <= 1 is enforced
/// at construction.
struct Envelope {
  EnvelopeKind kind = EnvelopeKind::Constant;
  Complex amp{0.0, 0.0};
  int duration_dt = 0;
  double sigma_dt = 0.0;
  double width_dt = 0.0;  // GaussianSquare flat-top length
  double beta = 0.0;      // Drag derivative weight
  std::vector<Complex> samples;

  static Envelope gaussian(Complex amp, int duration_dt, double sigma_dt) {
    Envelope e;
    e.kind = EnvelopeKind::Gaussian;
    e.amp = amp;
    e.duration_dt = duration_dt;
    e.sigma_dt = sigma_dt;
    e.validate();
    return e;
  }

  static Envelope gaussian_square(Complex amp, int duration_dt, double sigma_dt,
                                  double width_dt) {
    Envelope e;
    e.kind = EnvelopeKind::GaussianSquare;
    e.amp = amp;
    e.duration_dt = duration_dt;
    e.sigma_dt = sigma_dt;
    e.width_dt = width_dt;
    e.validate();
    return e;
  }

  static Envelope drag(Complex amp, int duration_dt, double sigma_dt,
                       double beta) {
    Envelope e;
    e.kind = EnvelopeKind::Drag;
    e.amp = amp;
    e.duration_dt = duration_dt;
    e.sigma_dt = sigma_dt;
    e.beta = beta;
    e.validate();
    return e;
  }

  static Envelope constant(Complex amp, int duration_dt) {
    Envelope e;
    e.kind = EnvelopeKind::Constant;
    e.amp = amp;
    e.duration_dt = duration_dt;
    e.validate();
    return e;
  }

  static Envelope from_samples(std::vector<Complex> samples) {
    Envelope e;
    e.kind = EnvelopeKind::Samples;
    e.samples = std::move(samples);
    e.duration_dt = static_cast<int>(e.samples.size());
    e.amp = {1.0, 0.0};
    e.validate();
    return e;
  }

  void validate() const {
    if (duration_dt < 1)
      throw ValidationError("envelope duration_dt must be >= 1, got " +
                            std::to_string(duration_dt));
    if (std::abs(amp) > 1.0 + kAmpTol)
      throw ValidationError("envelope amp norm " + std::to_string(std::abs(amp)) +
                            " exceeds 1");
    switch (kind) {
      case EnvelopeKind::Gaussian:
      case EnvelopeKind::Drag:
        if (sigma_dt <= 0.0)
          throw ValidationError("envelope sigma_dt must be > 0");
        break;
      case EnvelopeKind::GaussianSquare:
        if (sigma_dt <= 0.0)
          throw ValidationError("envelope sigma_dt must be > 0");
        if (width_dt < 0.0 || width_dt > duration_dt)
          throw ValidationError("envelope width_dt must lie in [0, duration_dt]");
        break;
      case EnvelopeKind::Samples:
        if (samples.size() != static_cast<std::size_t>(duration_dt))
          throw ValidationError("samples length must equal duration_dt");
        for (const Complex& s : samples)
          if (std::abs(s) > 1.0 + kAmpTol)
            throw ValidationError("sample norm exceeds 1");
        break;
      case EnvelopeKind::Constant:
        break;
    }
  }

  Envelope with_amp(Complex new_amp) const {
    Envelope e = *this;
    e.amp = new_amp;
    e.validate();
    return e;
  }

  /// Envelope value at fractional time t (dt units, t in [0, duration)).
  /// Zero outside the segment.
  Complex value_at(double t_dt) const {
    if (t_dt < 0.0 || t_dt >= duration_dt) return {0.0, 0.0};
    switch (kind) {
      case EnvelopeKind::Constant:
        return amp;
      case EnvelopeKind::Samples:
        return samples[static_cast<std::size_t>(t_dt)];
      case EnvelopeKind::Gaussian: {
        return amp * lifted_gauss(t_dt, duration_dt / 2.0, sigma_dt);
      }
      case EnvelopeKind::Drag: {
        const double c = duration_dt / 2.0;
        const double g = std::exp(-0.5 * sq((t_dt - c) / sigma_dt));
        const double g0 = std::exp(-0.5 * sq(c / sigma_dt));
        const double re = (g - g0) / (1.0 - g0);
        const double im = beta * (-(t_dt - c) / (sigma_dt * sigma_dt)) * g /
                          (1.0 - g0);
        return amp * Complex{re, im};
      }
      case EnvelopeKind::GaussianSquare: {
        const double rise = (duration_dt - width_dt) / 2.0;
        if (t_dt < rise) return amp * lifted_edge(t_dt, rise, sigma_dt);
        if (t_dt <= rise + width_dt) return amp;
        return amp * lifted_edge(duration_dt - t_dt, rise, sigma_dt);
      }
    }
    return {0.0, 0.0};
  }

  friend bool operator==(const Envelope& x, const Envelope& y) {
    return x.kind == y.kind && x.amp == y.amp && x.duration_dt == y.duration_dt &&
           x.sigma_dt == y.sigma_dt && x.width_dt == y.width_dt &&
           x.beta == y.beta && x.samples == y.samples;
  }

 private:
  static double sq(double x) { return x * x; }

  // Gaussian centered at c, lifted so the value at t=0 is exactly zero and
  // the peak is exactly one.
  static double lifted_gauss(double t, double c, double sigma) {
    const double g = std::exp(-0.5 * sq((t - c) / sigma));
    const double g0 = std::exp(-0.5 * sq(c / sigma));
    return (g - g0) / (1.0 - g0);
  }

  // Rising edge of a GaussianSquare: Gaussian flank centered at the plateau
  // start, zero-lifted at the segment boundary.
  static double lifted_edge(double t, double rise, double sigma) {
    const double g = std::exp(-0.5 * sq((t - rise) / sigma));
    const double g0 = std::exp(-0.5 * sq(rise / sigma));
    return (g - g0) / (1.0 - g0);
  }
};

// ---------------------------------------------------------------------------
// Instructions and schedules

struct Instruction {
  enum class Kind { Play, ShiftPhase, Acquire };

  Kind kind = Kind::Play;
  int start_dt = 0;
  Channel channel;
  Envelope envelope;             // Play
  double phase = 0.0;            // ShiftPhase (radians)
  int acquire_duration_dt = 0;   // Acquire
  bool trainable = false;        // Play: participates in amplitude training
  int source_gate = -1;          // Play/ShiftPhase: index of the source gate
  int bind_angle = -1;           // calibration templates: gate angle index
  double bind_scale = 1.0;

  static Instruction play(int start_dt, Channel ch, Envelope env,
                          bool trainable = false, int source_gate = -1) {
    Instruction i;
    i.kind = Kind::Play;
    i.start_dt = start_dt;
    i.channel = ch;
    i.envelope = std::move(env);
    i.trainable = trainable;
    i.source_gate = source_gate;
    return i;
  }

  static Instruction shift_phase(int start_dt, Channel ch, double phase,
                                 int source_gate = -1) {
    Instruction i;
    i.kind = Kind::ShiftPhase;
    i.start_dt = start_dt;
    i.channel = ch;
    i.phase = phase;
    i.source_gate = source_gate;
    return i;
  }

  static Instruction acquire(int start_dt, Channel ch, int duration_dt) {
    Instruction i;
    i.kind = Kind::Acquire;
    i.start_dt = start_dt;
    i.channel = ch;
    i.acquire_duration_dt = duration_dt;
    return i;
  }

  int duration_dt() const {
    switch (kind) {
      case Kind::Play:
        return envelope.duration_dt;
      case Kind::ShiftPhase:
        return 0;
      case Kind::Acquire:
        return acquire_duration_dt;
    }
    return 0;
  }

  int end_dt() const { return start_dt + duration_dt(); }

  friend bool operator==(const Instruction& x, const Instruction& y) {
    return x.kind == y.kind && x.start_dt == y.start_dt &&
           x.channel == y.channel && x.envelope == y.envelope &&
           x.phase == y.phase && x.acquire_duration_dt == y.acquire_duration_dt &&
           x.trainable == y.trainable && x.source_gate == y.source_gate &&
           x.bind_angle == y.bind_angle && x.bind_scale == y.bind_scale;
  }
};

/// A timed sequence of instructions on device channels, with integer dt
/// timing throughout. Instructions are kept sorted by start time; ties keep
/// insertion order (phase shifts emitted before a same-time play apply to it).
struct PulseSchedule {
  std::string name;
  std::string device;
  std::vector<Instruction> instructions;

  void add(Instruction inst) {
    if (inst.start_dt < 0)
      throw ValidationError("instruction start_dt must be >= 0");
    auto pos = std::upper_bound(
        instructions.begin(), instructions.end(), inst,
        [](const Instruction& x, const Instruction& y) {
          return x.start_dt < y.start_dt;
        });
    instructions.insert(pos, std::move(inst));
  }

  bool empty() const { return instructions.empty(); }

  /// Checks the schedule invariants: time-sorted, non-negative starts, and
  /// no two plays overlapping on the same channel.
  void validate() const {
    int prev = 0;
    for (const Instruction& inst : instructions) {
      if (inst.start_dt < 0)
        throw ValidationError("instruction start_dt must be >= 0");
      if (inst.start_dt < prev)
        throw ValidationError("instructions not sorted by start_dt");
      prev = inst.start_dt;
      if (inst.kind == Instruction::Kind::Play) inst.envelope.validate();
    }
    // Per-channel overlap scan over plays.
    std::vector<std::pair<Channel, std::pair<int, int>>> spans;
    for (const Instruction& inst : instructions) {
      if (inst.kind != Instruction::Kind::Play) continue;
      spans.push_back({inst.channel, {inst.start_dt, inst.end_dt()}});
    }
    std::stable_sort(spans.begin(), spans.end(),
                     [](const auto& x, const auto& y) {
                       if (x.first != y.first) return x.first < y.first;
                       return x.second.first < y.second.first;
                     });
    for (std::size_t i = 1; i < spans.size(); ++i) {
      if (spans[i].first == spans[i - 1].first &&
          spans[i].second.first < spans[i - 1].second.second) {
        throw ValidationError("overlapping plays on channel " +
                              spans[i].first.label());
      }
    }
  }
};

/// Max end time over all instructions; 0 for an empty schedule.
inline int schedule_duration(const PulseSchedule& s) {
  int d = 0;
  for (const Instruction& inst : s.instructions) d = std::max(d, inst.end_dt());
  return d;
}

/// Sequential concatenation: b's instructions shifted past the end of a.
inline PulseSchedule concat(const PulseSchedule& a, const PulseSchedule& b) {
  if (!a.device.empty() && !b.device.empty() && a.device != b.device)
    throw ValidationError("cannot concat schedules bound to different devices: '" +
                          a.device + "' vs '" + b.device + "'");
  PulseSchedule out;
  out.name = a.name.empty() ? b.name : a.name;
  out.device = a.device.empty() ? b.device : a.device;
  out.instructions = a.instructions;
  const int offset = schedule_duration(a);
  for (Instruction inst : b.instructions) {
    inst.start_dt += offset;
    out.instructions.push_back(std::move(inst));
  }
  return out;
}

/// Distinct channels referenced by the schedule, in first-use order.
inline std::vector<Channel> channels(const PulseSchedule& s) {
  std::vector<Channel> out;
  for (const Instruction& inst : s.instructions)
    if (std::find(out.begin(), out.end(), inst.channel) == out.end())
      out.push_back(inst.channel);
  return out;
}

/// One channel's plays with the accumulated phase baked in, evaluable at
/// fractional times. Shared by waveform rendering and the simulator.
class ChannelTrack {
 public:
  ChannelTrack() = default;

  ChannelTrack(const PulseSchedule& s, const Channel& ch) {
    double phi = 0.0;
    for (const Instruction& inst : s.instructions) {
      if (inst.channel != ch) continue;
      found_ = true;
      if (inst.kind == Instruction::Kind::ShiftPhase) {
        phi += inst.phase;
      } else if (inst.kind == Instruction::Kind::Play) {
        plays_.push_back({inst.start_dt, inst.end_dt(), inst.envelope,
                          std::polar(1.0, phi)});
      }
    }
  }

  bool referenced() const { return found_; }

  /// Complex envelope value at time t (dt units), phase shifts applied.
  Complex value_at(double t_dt) const {
    // Monotone queries dominate; keep a cursor instead of searching.
    while (cursor_ > 0 && t_dt < plays_[cursor_ - 1].end) --cursor_;
    while (cursor_ < plays_.size() && t_dt >= plays_[cursor_].end) ++cursor_;
    if (cursor_ >= plays_.size()) return {0.0, 0.0};
    const Play& p = plays_[cursor_];
    if (t_dt < p.start) return {0.0, 0.0};
    return p.phase_factor * p.envelope.value_at(t_dt - p.start);
  }

 private:
  struct Play {
    int start;
    int end;
    Envelope envelope;
    Complex phase_factor;
  };
  std::vector<Play> plays_;
  bool found_ = false;
  mutable std::size_t cursor_ = 0;
};

/// Full-length complex waveform for one channel: one sample per dt over the
/// whole schedule duration, zeros where the channel idles, accumulated phase
/// shifts applied multiplicatively.
inline std::vector<Complex> render_waveform(const PulseSchedule& s,
                                            const Channel& ch) {
  ChannelTrack track(s, ch);
  if (!track.referenced()) {
    std::string have;
    for (const Channel& c : channels(s)) have += " " + c.label();
    throw UnknownChannelError("channel " + ch.label() +
                              " not present in schedule; channels:" + have);
  }
  std::vector<Complex> out(static_cast<std::size_t>(schedule_duration(s)),
                           Complex{0.0, 0.0});
  for (std::size_t k = 0; k < out.size(); ++k)
    out[k] = track.value_at(static_cast<double>(k));
  return out;
}

inline bool schedules_equal(const PulseSchedule& a, const PulseSchedule& b) {
  return a.name == b.name && a.device == b.device &&
         a.instructions == b.instructions;
}

// ---------------------------------------------------------------------------
// JSON serialization (shared schema for schedules and calibration templates)

namespace detail {

inline void require_keys(const Json& j, const char* ctx,
                         std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ParseError(std::string(ctx) + ": expected object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        ok = true;
        break;
      }
    if (!ok)
      throw ParseError(std::string(ctx) + ": unknown key '" + it.key() + "'");
  }
}

inline const Json& need(const Json& j, const char* ctx, const char* key) {
  auto it = j.find(key);
  if (it == j.end())
    throw ParseError(std::string(ctx) + ": missing key '" + key + "'");
  return *it;
}

inline Json complex_to_json(const Complex& z) {
  return Json::array({z.real(), z.imag()});
}

inline Complex complex_from_json(const Json& j, const char* ctx) {
  if (!j.is_array() || j.size() != 2)
    throw ParseError(std::string(ctx) + ": expected [re, im]");
  return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace detail

inline Json envelope_to_json(const Envelope& e) {
  Json j;
  switch (e.kind) {
    case EnvelopeKind::Gaussian:
      j["kind"] = "gaussian";
      break;
    case EnvelopeKind::GaussianSquare:
      j["kind"] = "gaussian_square";
      break;
    case EnvelopeKind::Drag:
      j["kind"] = "drag";
      break;
    case EnvelopeKind::Constant:
      j["kind"] = "constant";
      break;
    case EnvelopeKind::Samples:
      j["kind"] = "samples";
      break;
  }
  j["amp"] = detail::complex_to_json(e.amp);
  j["duration_dt"] = e.duration_dt;
  if (e.kind == EnvelopeKind::Gaussian || e.kind == EnvelopeKind::Drag ||
      e.kind == EnvelopeKind::GaussianSquare)
    j["sigma_dt"] = e.sigma_dt;
  if (e.kind == EnvelopeKind::GaussianSquare) j["width_dt"] = e.width_dt;
  if (e.kind == EnvelopeKind::Drag) j["beta"] = e.beta;
  if (e.kind == EnvelopeKind::Samples) {
    Json arr = Json::array();
    for (const Complex& s : e.samples) arr.push_back(detail::complex_to_json(s));
    j["samples"] = arr;
  }
  return j;
}

inline Envelope envelope_from_json(const Json& j) {
  detail::require_keys(j, "envelope",
                       {"kind", "amp", "duration_dt", "sigma_dt", "width_dt",
                        "beta", "samples"});
  const std::string kind = detail::need(j, "envelope", "kind").get<std::string>();
  const Complex amp =
      detail::complex_from_json(detail::need(j, "envelope", "amp"), "envelope.amp");
  const int dur = detail::need(j, "envelope", "duration_dt").get<int>();
  if (kind == "gaussian")
    return Envelope::gaussian(amp, dur,
                              detail::need(j, "envelope", "sigma_dt").get<double>());
  if (kind == "gaussian_square")
    return Envelope::gaussian_square(
        amp, dur, detail::need(j, "envelope", "sigma_dt").get<double>(),
        detail::need(j, "envelope", "width_dt").get<double>());
  if (kind == "drag")
    return Envelope::drag(amp, dur,
                          detail::need(j, "envelope", "sigma_dt").get<double>(),
                          detail::need(j, "envelope", "beta").get<double>());
  if (kind == "constant") return Envelope::constant(amp, dur);
  if (kind == "samples") {
    std::vector<Complex> samples;
    for (const Json& s : detail::need(j, "envelope", "samples"))
      samples.push_back(detail::complex_from_json(s, "envelope.samples"));
    Envelope e = Envelope::from_samples(std::move(samples));
    e.amp = amp;
    e.validate();
    return e;
  }
  throw ParseError("envelope: unknown kind '" + kind + "'");
}

inline Json instruction_to_json(const Instruction& inst) {
  Json j;
  switch (inst.kind) {
    case Instruction::Kind::Play:
      j["type"] = "play";
      j["channel"] = inst.channel.label();
      j["start_dt"] = inst.start_dt;
      j["envelope"] = envelope_to_json(inst.envelope);
      j["trainable"] = inst.trainable;
      if (inst.source_gate >= 0) j["source_gate"] = inst.source_gate;
      if (inst.bind_angle >= 0) {
        j["bind_angle"] = inst.bind_angle;
        j["bind_scale"] = inst.bind_scale;
      }
      break;
    case Instruction::Kind::ShiftPhase:
      j["type"] = "shift_phase";
      j["channel"] = inst.channel.label();
      j["start_dt"] = inst.start_dt;
      j["phase"] = inst.phase;
      if (inst.source_gate >= 0) j["source_gate"] = inst.source_gate;
      if (inst.bind_angle >= 0) {
        j["bind_angle"] = inst.bind_angle;
        j["bind_scale"] = inst.bind_scale;
      }
      break;
    case Instruction::Kind::Acquire:
      j["type"] = "acquire";
      j["channel"] = inst.channel.label();
      j["start_dt"] = inst.start_dt;
      j["duration_dt"] = inst.acquire_duration_dt;
      break;
  }
  return j;
}

inline Instruction instruction_from_json(const Json& j) {
  detail::require_keys(j, "instruction",
                       {"type", "channel", "start_dt", "envelope", "phase",
                        "duration_dt", "trainable", "source_gate", "bind_angle",
                        "bind_scale"});
  const std::string type = detail::need(j, "instruction", "type").get<std::string>();
  const Channel ch =
      Channel::parse(detail::need(j, "instruction", "channel").get<std::string>());
  const int start = detail::need(j, "instruction", "start_dt").get<int>();
  Instruction inst;
  if (type == "play") {
    inst = Instruction::play(
        start, ch, envelope_from_json(detail::need(j, "instruction", "envelope")));
    if (j.contains("trainable")) inst.trainable = j["trainable"].get<bool>();
  } else if (type == "shift_phase") {
    inst = Instruction::shift_phase(
        start, ch, detail::need(j, "instruction", "phase").get<double>());
  } else if (type == "acquire") {
    inst = Instruction::acquire(
        start, ch, detail::need(j, "instruction", "duration_dt").get<int>());
  } else {
    throw ParseError("instruction: unknown type '" + type + "'");
  }
  if (j.contains("source_gate")) inst.source_gate = j["source_gate"].get<int>();
  if (j.contains("bind_angle")) {
    inst.bind_angle = j["bind_angle"].get<int>();
    inst.bind_scale = detail::need(j, "instruction", "bind_scale").get<double>();
  }
  return inst;
}

inline Json schedule_to_json(const PulseSchedule& s) {
  Json j;
  j["name"] = s.name;
  j["device"] = s.device;
  Json arr = Json::array();
  for (const Instruction& inst : s.instructions)
    arr.push_back(instruction_to_json(inst));
  j["instructions"] = arr;
  return j;
}

inline PulseSchedule schedule_from_json(const Json& j) {
  detail::require_keys(j, "schedule", {"name", "device", "instructions"});
  PulseSchedule s;
  s.name = detail::need(j, "schedule", "name").get<std::string>();
  s.device = detail::need(j, "schedule", "device").get<std::string>();
  for (const Json& inst : detail::need(j, "schedule", "instructions"))
    s.instructions.push_back(instruction_from_json(inst));
  s.validate();
  return s;
}

}  // namespace vqp
