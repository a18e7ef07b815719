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

#include "stage/profiles.hpp"

namespace stage {

double ewma_update(std::optional<double> previous, double sample, double alpha) {
  if (!previous) return sample;
  return alpha * sample + (1.0 - alpha) * *previous;
}

void NodeProfiles::observe(const std::string& node_id, std::uint64_t bytes, double seconds,
                           double alpha) {
  std::lock_guard lock(mu_);
  auto& p = nodes_[node_id];
  p.node_id = node_id;
  p.total_bytes += bytes;
  p.total_transfer_seconds += seconds;
  if (seconds > 0 && bytes > 0) {
    p.ewma_rate = ewma_update(p.ewma_rate, static_cast<double>(bytes) / seconds, alpha);
  }
}

void NodeProfiles::mark_unavailable(const std::string& node_id) {
  std::lock_guard lock(mu_);
  auto& p = nodes_[node_id];
  p.node_id = node_id;
  p.available = false;
}

void NodeProfiles::set_rate(const std::string& node_id, double rate) {
  std::lock_guard lock(mu_);
  auto& p = nodes_[node_id];
  p.node_id = node_id;
  p.ewma_rate = rate;
}

NodeProfile NodeProfiles::get(const std::string& node_id) const {
  std::lock_guard lock(mu_);
  auto it = nodes_.find(node_id);
  if (it == nodes_.end()) return NodeProfile{node_id, std::nullopt, true, 0, 0};
  return it->second;
}

bool NodeProfiles::available(const std::string& node_id) const { return get(node_id).available; }

double NodeProfiles::effective_rate(const std::string& node_id,
                                    double unknown_rate_prior) const {
  const auto p = get(node_id);
  return p.ewma_rate.value_or(unknown_rate_prior);
}

std::vector<NodeProfile> NodeProfiles::all() const {
  std::lock_guard lock(mu_);
  std::vector<NodeProfile> out;
  for (const auto& [id, p] : nodes_) out.push_back(p);
  return out;
}

}  // namespace stage
