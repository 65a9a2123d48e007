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

#include "boxsal/maxflow.hpp"

#include <algorithm>
#include <limits>
#include <queue>
#include <stdexcept>

namespace boxsal {

FlowNetwork::FlowNetwork(int non_terminal_nodes)
    : n_(non_terminal_nodes),
      adj_(static_cast<std::size_t>(non_terminal_nodes) + 2),
      source_arc_(static_cast<std::size_t>(non_terminal_nodes), -1),
      sink_arc_(static_cast<std::size_t>(non_terminal_nodes), -1) {
  if (non_terminal_nodes < 0) {
    throw std::invalid_argument("FlowNetwork: negative node count");
  }
}

int FlowNetwork::add_arc_pair(int a, int b, double cap_ab, double cap_ba) {
  if (cap_ab < 0.0 || cap_ba < 0.0) {
    throw std::invalid_argument("FlowNetwork: negative capacity");
  }
  const int i = static_cast<int>(arcs_.size());
  arcs_.push_back({b, i + 1, cap_ab});
  arcs_.push_back({a, i, cap_ba});
  adj_[a].push_back(i);
  adj_[b].push_back(i + 1);
  return i;
}

void FlowNetwork::add_terminal_arcs(int node, double source_cap,
                                    double sink_cap) {
  if (node < 0 || node >= n_) {
    throw std::out_of_range("FlowNetwork: node out of range");
  }
  if (source_arc_[node] < 0) {
    source_arc_[node] = add_arc_pair(source(), node, source_cap, 0.0);
    sink_arc_[node] = add_arc_pair(node, sink(), sink_cap, 0.0);
  } else {
    if (source_cap < 0.0 || sink_cap < 0.0) {
      throw std::invalid_argument("FlowNetwork: negative capacity");
    }
    arcs_[source_arc_[node]].cap += source_cap;
    arcs_[sink_arc_[node]].cap += sink_cap;
  }
}

void FlowNetwork::add_edge(int a, int b, double cap_ab, double cap_ba) {
  if (a < 0 || a >= n_ || b < 0 || b >= n_ || a == b) {
    throw std::out_of_range("FlowNetwork: bad edge endpoints");
  }
  add_arc_pair(a, b, cap_ab, cap_ba);
}

double FlowNetwork::total_capacity() const {
  double s = 0.0;
  for (const auto& a : arcs_) s += a.cap;
  return s;
}

double FlowNetwork::source_capacity(int node) const {
  return source_arc_[node] < 0 ? 0.0 : arcs_[source_arc_[node]].cap;
}

double FlowNetwork::sink_capacity(int node) const {
  return sink_arc_[node] < 0 ? 0.0 : arcs_[sink_arc_[node]].cap;
}

namespace {

class Dinic {
 public:
  explicit Dinic(const FlowNetwork& net)
      : arcs_(net.arcs()),
        adj_(net.adjacency()),
        s_(net.source()),
        t_(net.sink()),
        level_(adj_.size()),
        next_(adj_.size()) {}

  double run() {
    double flow = 0.0;
    while (build_levels()) {
      std::fill(next_.begin(), next_.end(), 0);
      while (true) {
        const double pushed = augment();
        if (pushed <= 0.0) break;
        flow += pushed;
      }
    }
    return flow;
  }

  std::vector<CutSide> labels(int n) const {
    // Reverse BFS from the sink over arcs u -> v with residual capacity.
    std::vector<char> reaches(adj_.size(), 0);
    std::queue<int> q;
    reaches[t_] = 1;
    q.push(t_);
    while (!q.empty()) {
      const int v = q.front();
      q.pop();
      for (int id : adj_[v]) {
        const int u = arcs_[id].to;
        if (!reaches[u] && arcs_[arcs_[id].rev].cap > 0.0) {
          reaches[u] = 1;
          q.push(u);
        }
      }
    }
    std::vector<CutSide> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      out[i] = reaches[i] ? CutSide::Sink : CutSide::Source;
    }
    return out;
  }

 private:
  bool build_levels() {
    std::fill(level_.begin(), level_.end(), -1);
    std::queue<int> q;
    level_[s_] = 0;
    q.push(s_);
    while (!q.empty()) {
      const int u = q.front();
      q.pop();
      for (int id : adj_[u]) {
        const auto& a = arcs_[id];
        if (a.cap > 0.0 && level_[a.to] < 0) {
          level_[a.to] = level_[u] + 1;
          q.push(a.to);
        }
      }
    }
    return level_[t_] >= 0;
  }

  // Finds one augmenting path in the level graph and pushes its bottleneck.
  // Dead ends are pruned by dropping their level.
  double augment() {
    path_.clear();
    int u = s_;
    while (true) {
      if (u == t_) {
        double pushed = std::numeric_limits<double>::infinity();
        for (int id : path_) pushed = std::min(pushed, arcs_[id].cap);
        for (int id : path_) {
          arcs_[id].cap -= pushed;
          arcs_[arcs_[id].rev].cap += pushed;
        }
        return pushed;
      }
      bool advanced = false;
      for (int& i = next_[u]; i < static_cast<int>(adj_[u].size()); ++i) {
        const auto& a = arcs_[adj_[u][i]];
        if (a.cap > 0.0 && level_[a.to] == level_[u] + 1) {
          path_.push_back(adj_[u][i]);
          u = a.to;
          advanced = true;
          break;
        }
      }
      if (advanced) continue;
      if (u == s_) return 0.0;
      level_[u] = -1;
      const int id = path_.back();
      path_.pop_back();
      u = arcs_[arcs_[id].rev].to;
      ++next_[u];
    }
  }

  std::vector<FlowNetwork::Arc> arcs_;
  const std::vector<std::vector<int>>& adj_;
  int s_;
  int t_;
  std::vector<int> level_;
  std::vector<int> next_;
  std::vector<int> path_;
};

}  // namespace

MaxFlowResult max_flow(const FlowNetwork& network) {
  Dinic dinic(network);
  MaxFlowResult result;
  result.flow_value = dinic.run();
  result.labels = dinic.labels(network.non_terminal_count());
  return result;
}

}  // namespace boxsal
