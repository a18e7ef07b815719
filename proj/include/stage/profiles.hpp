/*
 * Copyright 2026 The stage authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace stage {

struct NodeProfile {
  std::string node_id;
  std::optional<double> ewma_rate;  // bytes/s
  bool available = true;
  std::uint64_t total_bytes = 0;
  double total_transfer_seconds = 0;
};

// Measured per-node performance, shared by replica selection and probes.
class NodeProfiles {
 public:
  // Folds one rate sample into the node's EWMA (first sample seeds it).
  void observe(const std::string& node_id, std::uint64_t bytes, double seconds, double alpha);
  void mark_unavailable(const std::string& node_id);
  void set_rate(const std::string& node_id, double rate);

  NodeProfile get(const std::string& node_id) const;
  bool available(const std::string& node_id) const;
  double effective_rate(const std::string& node_id, double unknown_rate_prior) const;
  std::vector<NodeProfile> all() const;

 private:
  mutable std::mutex mu_;
  std::map<std::string, NodeProfile> nodes_;
};

double ewma_update(std::optional<double> previous, double sample, double alpha);

}  // namespace stage
