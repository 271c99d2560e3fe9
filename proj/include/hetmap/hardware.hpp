/**
 * Copyright 2026 The hetmap Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "hetmap/error.hpp"
#include "json.hpp"

namespace hetmap {

struct Device {
  std::string id;
  double memory = 0.0;           // bytes
  std::vector<int> batch_sizes;  // strictly ascending, >= 1

  bool supports(int size) const {
    return std::binary_search(batch_sizes.begin(), batch_sizes.end(), size);
  }

  bool operator==(const Device&) const = default;
};

/// Devices plus a directed bandwidth map in bytes/ms. A missing entry between
/// two distinct devices means there is no link; same-device transfers are free.
class HardwareSystem {
 public:
  HardwareSystem() = default;

  explicit HardwareSystem(std::vector<Device> devices) : devices_(std::move(devices)) {
    for (size_t u = 0; u < devices_.size(); ++u) {
      const auto& d = devices_[u];
      if (!(d.memory > 0.0)) throw Error(ErrorCode::kInvalidValue, "device " + d.id + " needs memory > 0");
      if (d.batch_sizes.empty()) throw Error(ErrorCode::kInvalidValue, "device " + d.id + " has no batch sizes");
      for (size_t k = 0; k < d.batch_sizes.size(); ++k) {
        if (d.batch_sizes[k] < 1 || (k > 0 && d.batch_sizes[k] <= d.batch_sizes[k - 1])) {
          throw Error(ErrorCode::kInvalidValue,
                      "device " + d.id + " batch sizes must be strictly ascending and >= 1");
        }
      }
      if (!index_.emplace(d.id, static_cast<int>(u)).second) {
        throw Error(ErrorCode::kInvalidValue, "duplicate device id: " + d.id);
      }
    }
    bandwidth_.assign(devices_.size() * devices_.size(), 0.0);
  }

  int size() const { return static_cast<int>(devices_.size()); }
  const std::vector<Device>& devices() const { return devices_; }
  const Device& device(int u) const { return devices_[static_cast<size_t>(u)]; }
  const std::string& id(int u) const { return device(u).id; }

  std::optional<int> index_of(std::string_view id) const {
    auto it = index_.find(std::string(id));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  int require_index(std::string_view id) const {
    auto u = index_of(id);
    if (!u) throw Error(ErrorCode::kUnknownReference, "unknown device: " + std::string(id));
    return *u;
  }

  void set_bandwidth(int u, int v, double bytes_per_ms) {
    if (!(bytes_per_ms > 0.0) || !std::isfinite(bytes_per_ms)) {
      throw Error(ErrorCode::kInvalidValue, "bandwidth must be positive and finite");
    }
    bandwidth_[slot(u, v)] = bytes_per_ms;
  }

  /// 0 when there is no link.
  double bandwidth(int u, int v) const { return bandwidth_[slot(u, v)]; }

  bool linked(int u, int v) const { return u == v || bandwidth(u, v) > 0.0; }

  /// Transfer time for `bytes` from u to v; +inf without a link.
  double transfer_time(double bytes, int u, int v) const {
    if (u == v) return 0.0;
    double bw = bandwidth(u, v);
    if (bw <= 0.0) return std::numeric_limits<double>::infinity();
    return bytes / bw;
  }

  bool operator==(const HardwareSystem& o) const {
    return devices_ == o.devices_ && bandwidth_ == o.bandwidth_;
  }

 private:
  size_t slot(int u, int v) const {
    return static_cast<size_t>(u) * devices_.size() + static_cast<size_t>(v);
  }

  std::vector<Device> devices_;
  std::vector<double> bandwidth_;
  std::unordered_map<std::string, int> index_;
};

/// t(task, device, batch size) in ms.
class LatencyTable {
 public:
  void set(const std::string& task, const std::string& device, int batch, double ms) {
    if (!(ms >= 0.0) || !std::isfinite(ms)) {
      throw Error(ErrorCode::kInvalidValue, "latency must be finite and >= 0 for " + task);
    }
    entries_[task][device][batch] = ms;
  }

  std::optional<double> get(const std::string& task, const std::string& device, int batch) const {
    auto t = entries_.find(task);
    if (t == entries_.end()) return std::nullopt;
    auto d = t->second.find(device);
    if (d == t->second.end()) return std::nullopt;
    auto b = d->second.find(batch);
    if (b == d->second.end()) return std::nullopt;
    return b->second;
  }

  size_t entry_count() const {
    size_t n = 0;
    for (const auto& [task, per_dev] : entries_) {
      for (const auto& [dev, per_b] : per_dev) n += per_b.size();
    }
    return n;
  }

  const std::map<std::string, std::map<std::string, std::map<int, double>>>& entries() const {
    return entries_;
  }

  bool operator==(const LatencyTable&) const = default;

 private:
  std::map<std::string, std::map<std::string, std::map<int, double>>> entries_;
};

// ---------------------------------------------------------------------------
// Hardware JSON: {"devices":[{"id","memory","batch_sizes":[...]}...],
//                 "bandwidth":{src:{dst: value}}}

inline HardwareSystem hardware_from_json(const nlohmann::json& doc) {
  try {
    std::vector<Device> devices;
    for (const auto& d : doc.at("devices")) {
      devices.push_back(Device{d.at("id").get<std::string>(), d.at("memory").get<double>(),
                               d.at("batch_sizes").get<std::vector<int>>()});
    }
    HardwareSystem hw(std::move(devices));
    if (doc.contains("bandwidth")) {
      for (const auto& [src, row] : doc.at("bandwidth").items()) {
        int u = hw.require_index(src);
        for (const auto& [dst, value] : row.items()) {
          int v = hw.require_index(dst);
          if (u == v) continue;
          hw.set_bandwidth(u, v, value.get<double>());
        }
      }
    }
    return hw;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("hardware document: ") + e.what());
  }
}

inline HardwareSystem load_hardware(std::string_view text) {
  try {
    return hardware_from_json(nlohmann::json::parse(text));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kParse, std::string("hardware document: ") + e.what());
  }
}

inline nlohmann::json hardware_to_json(const HardwareSystem& hw) {
  nlohmann::json doc;
  doc["devices"] = nlohmann::json::array();
  for (const auto& d : hw.devices()) {
    doc["devices"].push_back({{"id", d.id}, {"memory", d.memory}, {"batch_sizes", d.batch_sizes}});
  }
  doc["bandwidth"] = nlohmann::json::object();
  for (int u = 0; u < hw.size(); ++u) {
    for (int v = 0; v < hw.size(); ++v) {
      if (u != v && hw.bandwidth(u, v) > 0.0) doc["bandwidth"][hw.id(u)][hw.id(v)] = hw.bandwidth(u, v);
    }
  }
  return doc;
}

// Latency JSON: {task_id:{device_id:{"<batch>": ms}}}

inline LatencyTable latency_from_json(const nlohmann::json& doc) {
  LatencyTable table;
  try {
    for (const auto& [task, per_dev] : doc.items()) {
      for (const auto& [dev, per_batch] : per_dev.items()) {
        for (const auto& [batch, ms] : per_batch.items()) {
          int b = 0;
          auto [ptr, ec] = std::from_chars(batch.data(), batch.data() + batch.size(), b);
          if (ec != std::errc{} || ptr != batch.data() + batch.size()) {
            throw Error(ErrorCode::kParse, "latency batch key is not an integer: " + batch);
          }
          table.set(task, dev, b, ms.get<double>());
        }
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("latency document: ") + e.what());
  }
  return table;
}

inline LatencyTable load_latency(std::string_view text) {
  try {
    return latency_from_json(nlohmann::json::parse(text));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kParse, std::string("latency document: ") + e.what());
  }
}

inline nlohmann::json latency_to_json(const LatencyTable& table) {
  nlohmann::json doc = nlohmann::json::object();
  for (const auto& [task, per_dev] : table.entries()) {
    for (const auto& [dev, per_batch] : per_dev) {
      for (const auto& [b, ms] : per_batch) doc[task][dev][std::to_string(b)] = ms;
    }
  }
  return doc;
}

}  // namespace hetmap
