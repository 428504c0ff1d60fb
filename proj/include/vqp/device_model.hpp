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

#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "vqp/pulse_ir.hpp"

namespace vqp {

/// One gate's pulse realization: a schedule fragment with nominal amplitudes
/// plus bind metadata describing how gate angles scale individual plays or
/// phase shifts.
struct CalibrationEntry {
  std::string gate_name;
  std::vector<int> qubit_args;
  int param_arity = 0;
  PulseSchedule template_schedule;

  int duration_dt() const { return schedule_duration(template_schedule); }

  std::string key() const { return make_key(gate_name, qubit_args); }

  static std::string make_key(const std::string& gate,
                              const std::vector<int>& qubits) {
    std::string k = gate + ":";
    for (std::size_t i = 0; i < qubits.size(); ++i) {
      if (i) k += ",";
      k += std::to_string(qubits[i]);
    }
    return k;
  }
};

struct CalibrationTable {
  std::map<std::string, CalibrationEntry> entries;

  void insert(CalibrationEntry e) { entries[e.key()] = std::move(e); }

  bool contains(const std::string& gate, const std::vector<int>& qubits) const {
    return entries.count(CalibrationEntry::make_key(gate, qubits)) > 0;
  }
};

/// Pure lookup; throws UnsupportedGateError listing the supported set when the
/// (gate, qubits) pair has no entry.
inline const CalibrationEntry& lookup_calibration(
    const CalibrationTable& table, const std::string& gate_name,
    const std::vector<int>& qubit_args) {
  auto it = table.entries.find(CalibrationEntry::make_key(gate_name, qubit_args));
  if (it == table.entries.end()) {
    std::string supported;
    for (const auto& [k, _] : table.entries) supported += " " + k;
    throw UnsupportedGateError(
        "no calibration for " + CalibrationEntry::make_key(gate_name, qubit_args) +
        "; supported:" + supported);
  }
  return it->second;
}

/// Device-dependent physics and calibration data. Immutable after load; safe
/// for concurrent reads.
///
/// Frequencies and couplings are linear frequencies in GHz; the simulator
/// multiplies by 2*pi. dt is the waveform sample period in seconds.
struct DeviceModel {
  struct BusCoupling {
    int a = 0;
    int b = 0;
    double g_ghz = 0.0;
    double bus_freq_ghz = 0.0;
  };

  std::string name;
  std::string description;
  int num_qubits = 0;
  std::vector<double> qubit_freq_ghz;
  std::vector<double> drive_lo_ghz;  // defaults to qubit_freq (resonant drive)
  std::vector<BusCoupling> couplings;
  std::vector<std::pair<int, int>> coupling_map;  // directed (control, target)
  int bus_fock_cutoff = 3;
  double dt_sec = 0.0;
  double max_drive_rate_ghz = 0.0;  // Rabi rate per unit drive amplitude
  CalibrationTable calibrations;

  double dt_ns() const { return dt_sec * 1e9; }

  bool has_edge(int c, int t) const {
    for (const auto& [a, b] : coupling_map)
      if (a == c && b == t) return true;
    return false;
  }

  const BusCoupling* bus_for(int a, int b) const {
    for (const BusCoupling& c : couplings)
      if ((c.a == a && c.b == b) || (c.a == b && c.b == a)) return &c;
    return nullptr;
  }

  void validate() const {
    auto fail = [&](const std::string& field, const std::string& why) {
      throw ValidationError("device '" + name + "': field " + field + " " + why);
    };
    if (num_qubits < 1) fail("num_qubits", "must be >= 1");
    if (dt_sec <= 0.0) fail("dt", "must be > 0");
    if (bus_fock_cutoff < 2) fail("bus_fock_cutoff", "must be >= 2");
    if (max_drive_rate_ghz <= 0.0) fail("max_drive_rate_ghz", "must be > 0");
    if (qubit_freq_ghz.size() != static_cast<std::size_t>(num_qubits))
      fail("qubits", "count mismatch");
    if (drive_lo_ghz.size() != static_cast<std::size_t>(num_qubits))
      fail("drive_lo_ghz", "count mismatch");
    for (double f : qubit_freq_ghz)
      if (f <= 0.0) fail("qubits[].freq_ghz", "must be > 0");
    for (double f : drive_lo_ghz)
      if (f <= 0.0) fail("qubits[].drive_lo_ghz", "must be > 0");
    for (const BusCoupling& c : couplings) {
      if (c.a < 0 || c.a >= num_qubits || c.b < 0 || c.b >= num_qubits ||
          c.a == c.b)
        fail("couplings[].qubits", "indices out of range");
      if (c.bus_freq_ghz <= 0.0) fail("couplings[].bus_freq_ghz", "must be > 0");
      if (!has_edge(c.a, c.b) && !has_edge(c.b, c.a))
        fail("couplings", "edge (" + std::to_string(c.a) + "," +
                              std::to_string(c.b) + ") missing from coupling_map");
    }
    for (const auto& [c, t] : coupling_map) {
      if (c < 0 || c >= num_qubits || t < 0 || t >= num_qubits || c == t)
        fail("coupling_map", "indices out of range");
      if (bus_for(c, t) == nullptr)
        fail("coupling_map", "edge (" + std::to_string(c) + "," +
                                 std::to_string(t) + ") has no couplings entry");
    }
    for (const auto& [key, entry] : calibrations.entries) {
      entry.template_schedule.validate();
      if (entry.gate_name == "rz" && entry.duration_dt() != 0)
        fail("calibrations[" + key + "]", "rz must have zero duration (virtual-Z)");
      for (const Instruction& inst : entry.template_schedule.instructions) {
        if (inst.kind == Instruction::Kind::Play &&
            std::abs(inst.envelope.amp) > 1.0 + kAmpTol)
          fail("calibrations[" + key + "]", "template amplitude norm exceeds 1");
        if (inst.bind_angle >= entry.param_arity)
          fail("calibrations[" + key + "]", "bind_angle out of range");
      }
    }
    // The lowering path requires singles on every qubit and two-qubit entries
    // on every directed coupling edge.
    for (int q = 0; q < num_qubits; ++q)
      for (const char* g : {"rx", "ry", "rz"})
        if (!calibrations.contains(g, {q}))
          fail("calibrations", std::string("missing ") + g + " entry for qubit " +
                                   std::to_string(q));
    for (const auto& [c, t] : coupling_map)
      for (const char* g : {"cx", "crx"})
        if (!calibrations.contains(g, {c, t}))
          fail("calibrations", std::string("missing ") + g + " entry for edge (" +
                                   std::to_string(c) + "," + std::to_string(t) +
                                   ")");
  }
};

// ---------------------------------------------------------------------------
// JSON format (documented in docs/device_format.md)

inline Json device_to_json(const DeviceModel& dev) {
  Json j;
  j["name"] = dev.name;
  j["description"] = dev.description;
  Json qubits = Json::array();
  for (int q = 0; q < dev.num_qubits; ++q) {
    Json qj;
    qj["freq_ghz"] = dev.qubit_freq_ghz[q];
    qj["drive_lo_ghz"] = dev.drive_lo_ghz[q];
    qubits.push_back(qj);
  }
  j["qubits"] = qubits;
  Json couplings = Json::array();
  for (const auto& c : dev.couplings) {
    Json cj;
    cj["qubits"] = Json::array({c.a, c.b});
    cj["g_ghz"] = c.g_ghz;
    cj["bus_freq_ghz"] = c.bus_freq_ghz;
    couplings.push_back(cj);
  }
  j["couplings"] = couplings;
  Json cmap = Json::array();
  for (const auto& [c, t] : dev.coupling_map) cmap.push_back(Json::array({c, t}));
  j["coupling_map"] = cmap;
  j["bus_fock_cutoff"] = dev.bus_fock_cutoff;
  j["dt"] = dev.dt_sec;
  j["max_drive_rate_ghz"] = dev.max_drive_rate_ghz;
  Json cals = Json::array();
  for (const auto& [key, e] : dev.calibrations.entries) {
    Json ej;
    ej["gate"] = e.gate_name;
    ej["qubits"] = e.qubit_args;
    ej["param_arity"] = e.param_arity;
    Json tmpl = Json::array();
    for (const Instruction& inst : e.template_schedule.instructions)
      tmpl.push_back(instruction_to_json(inst));
    ej["template"] = tmpl;
    cals.push_back(ej);
  }
  j["calibrations"] = cals;
  return j;
}

inline DeviceModel device_from_json(const Json& j) {
  detail::require_keys(j, "device",
                       {"name", "description", "qubits", "couplings",
                        "coupling_map", "bus_fock_cutoff", "dt",
                        "max_drive_rate_ghz", "calibrations"});
  DeviceModel dev;
  dev.name = detail::need(j, "device", "name").get<std::string>();
  if (j.contains("description"))
    dev.description = j["description"].get<std::string>();
  const Json& qubits = detail::need(j, "device", "qubits");
  if (!qubits.is_array() || qubits.empty())
    throw ParseError("device: 'qubits' must be a non-empty array");
  dev.num_qubits = static_cast<int>(qubits.size());
  for (const Json& qj : qubits) {
    detail::require_keys(qj, "device.qubits[]", {"freq_ghz", "drive_lo_ghz"});
    const double f = detail::need(qj, "device.qubits[]", "freq_ghz").get<double>();
    dev.qubit_freq_ghz.push_back(f);
    dev.drive_lo_ghz.push_back(
        qj.contains("drive_lo_ghz") ? qj["drive_lo_ghz"].get<double>() : f);
  }
  for (const Json& cj : detail::need(j, "device", "couplings")) {
    detail::require_keys(cj, "device.couplings[]",
                         {"qubits", "g_ghz", "bus_freq_ghz"});
    const Json& qq = detail::need(cj, "device.couplings[]", "qubits");
    if (!qq.is_array() || qq.size() != 2)
      throw ParseError("device.couplings[].qubits: expected [a, b]");
    DeviceModel::BusCoupling c;
    c.a = qq[0].get<int>();
    c.b = qq[1].get<int>();
    c.g_ghz = detail::need(cj, "device.couplings[]", "g_ghz").get<double>();
    c.bus_freq_ghz =
        detail::need(cj, "device.couplings[]", "bus_freq_ghz").get<double>();
    dev.couplings.push_back(c);
  }
  for (const Json& ej : detail::need(j, "device", "coupling_map")) {
    if (!ej.is_array() || ej.size() != 2)
      throw ParseError("device.coupling_map[]: expected [control, target]");
    dev.coupling_map.push_back({ej[0].get<int>(), ej[1].get<int>()});
  }
  dev.bus_fock_cutoff = detail::need(j, "device", "bus_fock_cutoff").get<int>();
  dev.dt_sec = detail::need(j, "device", "dt").get<double>();
  dev.max_drive_rate_ghz =
      detail::need(j, "device", "max_drive_rate_ghz").get<double>();
  for (const Json& ej : detail::need(j, "device", "calibrations")) {
    detail::require_keys(ej, "device.calibrations[]",
                         {"gate", "qubits", "param_arity", "template"});
    CalibrationEntry e;
    e.gate_name = detail::need(ej, "device.calibrations[]", "gate").get<std::string>();
    for (const Json& q : detail::need(ej, "device.calibrations[]", "qubits"))
      e.qubit_args.push_back(q.get<int>());
    e.param_arity =
        detail::need(ej, "device.calibrations[]", "param_arity").get<int>();
    e.template_schedule.name = e.key();
    e.template_schedule.device = dev.name;
    for (const Json& inst : detail::need(ej, "device.calibrations[]", "template"))
      e.template_schedule.instructions.push_back(instruction_from_json(inst));
    e.template_schedule.validate();
    dev.calibrations.insert(std::move(e));
  }
  dev.validate();
  return dev;
}

inline DeviceModel load_device_model(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw ParseError("cannot open device file '" + path + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("device file '" + path + "': " + e.what());
  }
  try {
    return device_from_json(j);
  } catch (const Error&) {
    throw;
  }
}

inline void save_device_model(const DeviceModel& dev, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write device file '" + path + "'");
  out << device_to_json(dev).dump(1) << "\n";
}

}  // namespace vqp
