// Virtual radio medium: node placement, 16-bit address allocation, cluster-tree
// and mesh routing, and frame delivery with loss, latency, and per-link
// bit-rate accounting. One seeded RNG owns all randomness; identical seed and
// call sequence give identical outcomes.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "homewsn/errors.hpp"
#include "homewsn/frame.hpp"
#include "homewsn/rng.hpp"

namespace homewsn {

struct Position {
  double x = 0;
  double y = 0;
};

inline double distance_m(Position a, Position b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

struct LinkModel {
  double max_range_m = 100.0;
  double reliable_range_m = 60.0;
  double latency_lo_ms = 15.0;   // single-hop end-to-end band
  double latency_hi_ms = 100.0;
  double extra_hop_lo_ms = 5.0;  // added per hop beyond the first
  double extra_hop_hi_ms = 30.0;
  double bit_rate_bps = 250000.0;
  double interference_loss = 0.01;
  std::size_t max_payload = kDefaultMaxPayload;
  std::string frequency_band = "2.4GHz";  // config metadata only

  void validate() const {
    if (!(reliable_range_m > 0) || reliable_range_m > max_range_m)
      throw ValidationError("link_model: require 0 < reliable_range <= max_range");
    if (interference_loss < 0 || interference_loss > 1)
      throw ValidationError("link_model: interference_loss must be in [0,1]");
    if (!(bit_rate_bps > 0)) throw ValidationError("link_model: bit_rate must be > 0");
    if (latency_lo_ms > latency_hi_ms || extra_hop_lo_ms > extra_hop_hi_ms)
      throw ValidationError("link_model: latency interval lo must be <= hi");
    if (max_payload == 0) throw ValidationError("link_model: max_payload must be >= 1");
  }
};

enum class RoutingMode : std::uint8_t { tree, mesh_shortest_path };

// Node placement plus parent links toward the coordinator (address 0).
class Topology {
 public:
  explicit Topology(double max_range_m = 100.0, RoutingMode mode = RoutingMode::tree,
                    Position coordinator = {0, 0})
      : max_range_(max_range_m), mode_(mode) {
    nodes_[kCoordinatorAddress] = coordinator;
  }

  RoutingMode routing_mode() const { return mode_; }
  void set_routing_mode(RoutingMode m) { mode_ = m; }
  double max_range() const { return max_range_; }

  // Hands out the next unused 16-bit address; 0 is reserved for the
  // coordinator. Addresses are not recycled.
  NodeAddress allocate_address() {
    if (next_address_ > 0xFFFF) throw AddressSpaceExhausted("16-bit address space exhausted");
    return static_cast<NodeAddress>(next_address_++);
  }

  // Adds a node whose parent is the nearest in-range live node (ties resolved
  // toward the lower address). Throws OutOfRange when nothing is reachable.
  NodeAddress join(Position pos) {
    if (!std::isfinite(pos.x) || !std::isfinite(pos.y))
      throw ValidationError("join: position must be finite");
    std::optional<NodeAddress> best;
    double best_dist = std::numeric_limits<double>::infinity();
    for (const auto& [addr, p] : nodes_) {
      if (down_.contains(addr)) continue;
      double d = distance_m(pos, p);
      if (d <= max_range_ && d < best_dist) {
        best = addr;
        best_dist = d;
      }
    }
    if (!best) throw OutOfRange("join: no joined node within max_range");
    NodeAddress addr = allocate_address();
    nodes_[addr] = pos;
    parent_[addr] = *best;
    return addr;
  }

  bool joined(NodeAddress a) const { return nodes_.contains(a); }
  bool alive(NodeAddress a) const { return joined(a) && !down_.contains(a); }
  void set_down(NodeAddress a, bool down) {
    if (down)
      down_.insert(a);
    else
      down_.erase(a);
  }

  // Moves a joined node. Tree links are not re-parented; a link stretched past
  // max_range drops frames at the radio rather than rerouting.
  void set_position(NodeAddress a, Position pos) {
    if (!joined(a)) throw UnknownNode("set_position: node not joined");
    nodes_[a] = pos;
  }

  const std::map<NodeAddress, Position>& nodes() const { return nodes_; }
  Position position(NodeAddress a) const { return nodes_.at(a); }
  std::optional<NodeAddress> parent(NodeAddress a) const {
    auto it = parent_.find(a);
    if (it == parent_.end()) return std::nullopt;
    return it->second;
  }

  // Loop-free hop path from src to dst. Tree mode follows parent links through
  // the lowest common ancestor; mesh mode is minimum-hop BFS over all links
  // within max_range. Throws NoRoute when disconnected or a tree link is down.
  std::vector<NodeAddress> route(NodeAddress src, NodeAddress dst) const {
    if (!joined(src)) throw UnknownNode("route: src not joined");
    if (!joined(dst)) throw UnknownNode("route: dst not joined");
    if (src == dst) return {src};
    std::vector<NodeAddress> path =
        mode_ == RoutingMode::tree ? tree_route(src, dst) : mesh_route(src, dst);
    return path;
  }

 private:
  std::vector<NodeAddress> ancestors(NodeAddress a) const {
    std::vector<NodeAddress> chain{a};
    std::set<NodeAddress> seen{a};
    NodeAddress cur = a;
    while (cur != kCoordinatorAddress) {
      auto it = parent_.find(cur);
      if (it == parent_.end()) throw NoRoute("tree route: node has no parent link");
      cur = it->second;
      if (!seen.insert(cur).second) throw NoRoute("tree route: parent links form a cycle");
      chain.push_back(cur);
    }
    return chain;
  }

  // Down nodes break the tree path; range violations are left to the radio,
  // which reports them as out_of_range drops per hop.
  void check_hop(NodeAddress a, NodeAddress b) const {
    if (!alive(a) || !alive(b)) throw NoRoute("tree route: node on path is down");
  }

  std::vector<NodeAddress> tree_route(NodeAddress src, NodeAddress dst) const {
    std::vector<NodeAddress> up_src = ancestors(src);
    std::vector<NodeAddress> up_dst = ancestors(dst);
    std::set<NodeAddress> src_set(up_src.begin(), up_src.end());
    // first ancestor of dst that also lies above src
    std::size_t dst_join = 0;
    while (dst_join < up_dst.size() && !src_set.contains(up_dst[dst_join])) ++dst_join;
    if (dst_join == up_dst.size()) throw NoRoute("tree route: no common ancestor");
    NodeAddress lca = up_dst[dst_join];

    std::vector<NodeAddress> path;
    for (NodeAddress a : up_src) {
      path.push_back(a);
      if (a == lca) break;
    }
    for (std::size_t i = dst_join; i-- > 0;) path.push_back(up_dst[i]);
    for (std::size_t i = 0; i + 1 < path.size(); ++i) check_hop(path[i], path[i + 1]);
    return path;
  }

  std::vector<NodeAddress> mesh_route(NodeAddress src, NodeAddress dst) const {
    if (!alive(src) || !alive(dst)) throw NoRoute("mesh route: endpoint down");
    std::map<NodeAddress, NodeAddress> from;
    std::deque<NodeAddress> frontier{src};
    from[src] = src;
    while (!frontier.empty()) {
      NodeAddress cur = frontier.front();
      frontier.pop_front();
      if (cur == dst) break;
      Position cp = position(cur);
      for (const auto& [addr, p] : nodes_) {  // address order: deterministic paths
        if (addr == cur || from.contains(addr) || down_.contains(addr)) continue;
        if (distance_m(cp, p) > max_range_) continue;
        from[addr] = cur;
        frontier.push_back(addr);
      }
    }
    if (!from.contains(dst)) throw NoRoute("mesh route: graph disconnected");
    std::vector<NodeAddress> path{dst};
    while (path.back() != src) path.push_back(from[path.back()]);
    std::reverse(path.begin(), path.end());
    return path;
  }

  double max_range_;
  RoutingMode mode_;
  std::map<NodeAddress, Position> nodes_;
  std::map<NodeAddress, NodeAddress> parent_;
  std::set<NodeAddress> down_;
  std::uint32_t next_address_ = 1;
};

enum class DropReason : std::uint8_t { none, out_of_range, interference, range_fade, no_route };

inline std::string_view to_string(DropReason r) {
  switch (r) {
    case DropReason::none: return "none";
    case DropReason::out_of_range: return "out_of_range";
    case DropReason::interference: return "interference";
    case DropReason::range_fade: return "range_fade";
    case DropReason::no_route: return "no_route";
  }
  return "?";
}

// Airtime spent transmitting, attributed to the sending node of each hop.
struct TxShare {
  NodeAddress node = 0;
  double tx_ms = 0;
};

struct DeliveryOutcome {
  bool delivered = false;
  double at_ms = 0;  // meaningful when delivered
  DropReason reason = DropReason::none;
  int hops = 0;  // hops attempted (including the failing one)
  std::vector<TxShare> tx_shares;
};

struct MediumStats {
  std::uint64_t frames_sent = 0;
  std::uint64_t frames_delivered = 0;
  std::uint64_t delivered_bits = 0;
  std::map<DropReason, std::uint64_t> drops;
};

class Medium {
 public:
  Medium(LinkModel link, RoutingMode mode, std::uint64_t seed, Position coordinator = {0, 0})
      : link_(link), topo_(link.max_range_m, mode, coordinator), rng_(seed) {
    link_.validate();
  }

  Topology& topology() { return topo_; }
  const Topology& topology() const { return topo_; }
  const LinkModel& link() const { return link_; }
  const MediumStats& stats() const { return stats_; }

  // Carries one frame from frame.src toward frame.dst starting at now_ms.
  // Per hop: the link is occupied for bits/bit_rate (queueing behind in-flight
  // frames), then the hop either drops (interference Bernoulli, then a linear
  // loss ramp between reliable_range and max_range) or arrives after a latency
  // draw. RNG draws per hop, in order: interference, ramp (only past
  // reliable_range), latency (only when not dropped).
  DeliveryOutcome transmit(const Frame& frame, double now_ms) {
    if (!frame_valid(frame, link_.max_payload))
      throw InvalidFrame("transmit: payload too large or checksum mismatch");
    if (!topo_.joined(frame.src)) throw UnknownNode("transmit: src not joined");

    ++stats_.frames_sent;
    DeliveryOutcome out;

    std::vector<NodeAddress> path;
    try {
      path = topo_.route(frame.src, frame.dst);
    } catch (const NoRoute&) {
      return drop(out, DropReason::no_route);
    } catch (const UnknownNode&) {
      return drop(out, DropReason::no_route);
    }

    const double ser_ms = static_cast<double>(frame_bits(frame)) * 1000.0 / link_.bit_rate_bps;
    double t = now_ms;
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
      NodeAddress a = path[i];
      NodeAddress b = path[i + 1];
      out.hops = static_cast<int>(i) + 1;

      std::pair<NodeAddress, NodeAddress> key = std::minmax(a, b);
      double start = std::max(t, busy_until_[key]);
      busy_until_[key] = start + ser_ms;
      out.tx_shares.push_back({a, ser_ms});

      double d = distance_m(topo_.position(a), topo_.position(b));
      if (d > link_.max_range_m) return drop(out, DropReason::out_of_range);
      if (rng_.u01() < link_.interference_loss) return drop(out, DropReason::interference);
      if (d > link_.reliable_range_m) {
        double p = (d - link_.reliable_range_m) / (link_.max_range_m - link_.reliable_range_m);
        if (rng_.u01() < p) return drop(out, DropReason::range_fade);
      }
      double latency = i == 0 ? rng_.uniform(link_.latency_lo_ms, link_.latency_hi_ms)
                              : rng_.uniform(link_.extra_hop_lo_ms, link_.extra_hop_hi_ms);
      t = start + std::max(ser_ms, latency);
    }

    out.delivered = true;
    out.at_ms = t;
    out.reason = DropReason::none;
    ++stats_.frames_delivered;
    stats_.delivered_bits += frame_bits(frame);
    return out;
  }

 private:
  DeliveryOutcome drop(DeliveryOutcome& out, DropReason reason) {
    out.delivered = false;
    out.reason = reason;
    ++stats_.drops[reason];
    return out;
  }

  LinkModel link_;
  Topology topo_;
  Rng rng_;
  MediumStats stats_;
  std::map<std::pair<NodeAddress, NodeAddress>, double> busy_until_;
};

}  // namespace homewsn
