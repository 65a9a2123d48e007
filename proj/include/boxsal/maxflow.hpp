// Copyright 2026 The boxsal Authors
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

#include <cstdint>
#include <vector>

namespace boxsal {

enum class CutSide : std::uint8_t { Source, Sink };

/// s-t network over `n` non-terminal nodes (0..n-1) plus a source and a sink.
/// Arcs keep their insertion order, which fixes the augmentation order and
/// makes max_flow deterministic.
class FlowNetwork {
 public:
  struct Arc {
    int to;
    int rev;  // index of the paired reverse arc in arcs()
    double cap;
  };

  explicit FlowNetwork(int non_terminal_nodes);

  int non_terminal_count() const { return n_; }
  int source() const { return n_; }
  int sink() const { return n_ + 1; }

  /// source -> node with `source_cap`, node -> sink with `sink_cap`.
  void add_terminal_arcs(int node, double source_cap, double sink_cap);
  /// a -> b with `cap_ab` and b -> a with `cap_ba`, sharing one arc pair.
  void add_edge(int a, int b, double cap_ab, double cap_ba);

  const std::vector<Arc>& arcs() const { return arcs_; }
  const std::vector<std::vector<int>>& adjacency() const { return adj_; }

  /// Sum of all capacities, counting both directions of every pair.
  double total_capacity() const;
  double source_capacity(int node) const;
  double sink_capacity(int node) const;

 private:
  int add_arc_pair(int a, int b, double cap_ab, double cap_ba);

  int n_;
  std::vector<Arc> arcs_;
  std::vector<std::vector<int>> adj_;
  std::vector<int> source_arc_;
  std::vector<int> sink_arc_;
};

struct MaxFlowResult {
  double flow_value = 0.0;
  /// One entry per non-terminal node. A node is on the Sink side iff it can
  /// still reach the sink in the residual graph; everything else, including
  /// nodes with no residual path to either terminal, is on the Source side.
  std::vector<CutSide> labels;
};

/// Dinic's algorithm on a copy of the network's capacities.
MaxFlowResult max_flow(const FlowNetwork& network);

}  // namespace boxsal
