#include <doctest.h>

#include <algorithm>
#include <deque>
#include <map>
#include <set>
#include <vector>

#include "homewsn/medium.hpp"
#include "homewsn/rng.hpp"

using namespace homewsn;

namespace {

// Independent shortest-path oracle over the link graph (test-only BFS,
// separate from Topology's routing).
int bfs_hops(const std::map<NodeAddress, Position>& nodes, double max_range, NodeAddress src,
             NodeAddress dst) {
  std::map<NodeAddress, int> dist{{src, 0}};
  std::deque<NodeAddress> frontier{src};
  while (!frontier.empty()) {
    NodeAddress cur = frontier.front();
    frontier.pop_front();
    if (cur == dst) return dist[cur];
    for (const auto& [addr, pos] : nodes) {
      if (dist.contains(addr)) continue;
      if (distance_m(nodes.at(cur), pos) <= max_range) {
        dist[addr] = dist[cur] + 1;
        frontier.push_back(addr);
      }
    }
  }
  return -1;
}

// Random connected topology: every node placed within range of some earlier
// node, so join() preconditions always hold.
Topology random_topology(Rng& rng, std::size_t node_count, RoutingMode mode) {
  Topology topo(100.0, mode);
  for (std::size_t i = 0; i < node_count; ++i) {
    const auto& nodes = topo.nodes();
    auto it = nodes.begin();
    std::advance(it, static_cast<std::ptrdiff_t>(rng.below(nodes.size())));
    Position anchor = it->second;
    double angle = rng.uniform(0, 6.283185307179586);
    double radius = rng.uniform(10.0, 95.0);
    topo.join({anchor.x + radius * std::cos(angle), anchor.y + radius * std::sin(angle)});
  }
  return topo;
}

LinkModel lossless_link() {
  LinkModel link;
  link.interference_loss = 0.0;
  return link;
}

Frame test_frame(NodeAddress src, NodeAddress dst, std::uint8_t seq = 0,
                 std::size_t payload_len = 84) {
  return make_frame(src, dst, seq, std::vector<std::uint8_t>(payload_len, 0x5A));
}

}  // namespace

TEST_CASE("checksum matches the XBee two's-complement definition") {
  std::vector<std::uint8_t> payload{0x01, 0x02, 0x03};
  CHECK(payload_checksum(payload) == 0xFF - 0x06);
  CHECK(checksum_valid(payload, payload_checksum(payload)));
  CHECK_FALSE(checksum_valid(payload, 0x00));
  CHECK(payload_checksum({}) == 0xFF);
}

TEST_CASE("address allocation starts past the coordinator and never collides") {
  Topology topo;
  CHECK(topo.allocate_address() == 1);

  std::set<NodeAddress> seen;
  Topology big;
  for (int i = 0; i < 65'000; ++i) CHECK(seen.insert(big.allocate_address()).second);
  CHECK(seen.size() == 65'000);
}

TEST_CASE("address space exhausts at the 65,536th allocation") {
  Topology topo;
  for (int i = 0; i < 65'535; ++i) topo.allocate_address();
  CHECK_THROWS_AS(topo.allocate_address(), AddressSpaceExhausted);
}

TEST_CASE("join picks the nearest in-range parent") {
  Topology topo;
  NodeAddress a = topo.join({10, 0});
  CHECK(a == 1);
  CHECK(topo.parent(a) == kCoordinatorAddress);

  SUBCASE("out of range when nothing reachable") {
    CHECK_THROWS_AS(topo.join({150, 120}), OutOfRange);
  }

  SUBCASE("router closer than coordinator wins") {
    Topology t2;
    NodeAddress router = t2.join({80, 0});
    NodeAddress leaf = t2.join({90, 0});
    CHECK(t2.parent(leaf) == router);
  }
}

TEST_CASE("tree route follows the line topology to the coordinator") {
  Topology topo;
  NodeAddress prev = kCoordinatorAddress;
  std::vector<NodeAddress> line{kCoordinatorAddress};
  for (int i = 1; i <= 4; ++i) {
    NodeAddress n = topo.join({50.0 * i, 0});
    CHECK(topo.parent(n) == prev);
    line.push_back(n);
    prev = n;
  }
  std::vector<NodeAddress> expected{line[4], line[3], line[2], line[1], kCoordinatorAddress};
  CHECK(topo.route(line[4], kCoordinatorAddress) == expected);

  SUBCASE("self route is a single element") {
    CHECK(topo.route(line[2], line[2]) == std::vector<NodeAddress>{line[2]});
  }

  SUBCASE("down node on the path breaks the route") {
    topo.set_down(line[2], true);
    CHECK_THROWS_AS(topo.route(line[4], kCoordinatorAddress), NoRoute);
    topo.set_down(line[2], false);
    CHECK(topo.route(line[4], kCoordinatorAddress).size() == 5);
  }
}

TEST_CASE("tree route between two leaves passes through the common ancestor") {
  Topology topo;
  NodeAddress left = topo.join({40, 0});
  NodeAddress right = topo.join({0, 40});
  auto path = topo.route(left, right);
  CHECK(path == std::vector<NodeAddress>{left, kCoordinatorAddress, right});
}

TEST_CASE("mesh hop counts equal the BFS oracle on random connected topologies") {
  Rng rng(0xBEEF);
  for (int trial = 0; trial < 50; ++trial) {
    std::size_t n = 3 + rng.below(12);
    Topology topo = random_topology(rng, n, RoutingMode::mesh_shortest_path);
    const auto& nodes = topo.nodes();
    for (const auto& [addr, pos] : nodes) {
      auto path = topo.route(addr, kCoordinatorAddress);
      int oracle = bfs_hops(nodes, topo.max_range(), addr, kCoordinatorAddress);
      CHECK(static_cast<int>(path.size()) - 1 == oracle);
      // loop freedom
      std::set<NodeAddress> unique(path.begin(), path.end());
      CHECK(unique.size() == path.size());
    }
  }
}

TEST_CASE("tree routes are loop-free on random topologies") {
  Rng rng(0xFACE);
  for (int trial = 0; trial < 30; ++trial) {
    Topology topo = random_topology(rng, 4 + rng.below(20), RoutingMode::tree);
    for (const auto& [addr, pos] : topo.nodes()) {
      auto path = topo.route(addr, kCoordinatorAddress);
      std::set<NodeAddress> unique(path.begin(), path.end());
      CHECK(unique.size() == path.size());
      CHECK(path.back() == kCoordinatorAddress);
    }
  }
}

TEST_CASE("single-hop delivery stays inside the latency band") {
  Medium medium(lossless_link(), RoutingMode::tree, 7);
  NodeAddress n = medium.topology().join({40, 0});
  for (int i = 0; i < 500; ++i) {
    double now = i * 200.0;
    auto outcome = medium.transmit(test_frame(n, kCoordinatorAddress), now);
    REQUIRE(outcome.delivered);
    double delay = outcome.at_ms - now;
    CHECK(delay >= 15.0);
    CHECK(delay <= 100.0);
  }
}

TEST_CASE("hop beyond max_range always drops as out_of_range") {
  Medium medium(lossless_link(), RoutingMode::tree, 7);
  NodeAddress n = medium.topology().join({90, 0});
  medium.topology().set_position(n, {150, 0});  // link now stale
  for (int i = 0; i < 50; ++i) {
    auto outcome = medium.transmit(test_frame(n, kCoordinatorAddress), i * 10.0);
    CHECK_FALSE(outcome.delivered);
    CHECK(outcome.reason == DropReason::out_of_range);
  }
}

TEST_CASE("offered load of 250k bits serializes for at least one second") {
  Medium medium(lossless_link(), RoutingMode::tree, 11);
  NodeAddress n = medium.topology().join({30, 0});

  double first_start = 0.0;
  double last_delivery = 0.0;
  std::size_t bits_offered = 0;
  std::uint8_t seq = 0;
  while (bits_offered < 250'000) {
    Frame f = test_frame(n, kCoordinatorAddress, seq++);
    bits_offered += frame_bits(f);
    auto outcome = medium.transmit(f, first_start);
    REQUIRE(outcome.delivered);
    last_delivery = std::max(last_delivery, outcome.at_ms);
  }
  CHECK(last_delivery - first_start >= 1000.0);
}

TEST_CASE("drops between reliable and max range ramp up with distance") {
  LinkModel link = lossless_link();
  Medium near_medium(link, RoutingMode::tree, 3);
  NodeAddress near = near_medium.topology().join({65, 0});  // 12.5% ramp
  Medium far_medium(link, RoutingMode::tree, 3);
  NodeAddress far = far_medium.topology().join({95, 0});  // 87.5% ramp

  auto loss_rate = [](Medium& m, NodeAddress n) {
    int drops = 0;
    for (int i = 0; i < 2000; ++i) {
      if (!m.transmit(test_frame(n, kCoordinatorAddress, static_cast<std::uint8_t>(i)),
                      i * 200.0)
               .delivered)
        ++drops;
    }
    return drops / 2000.0;
  };
  double near_loss = loss_rate(near_medium, near);
  double far_loss = loss_rate(far_medium, far);
  CHECK(near_loss == doctest::Approx(0.125).epsilon(0.35));
  CHECK(far_loss == doctest::Approx(0.875).epsilon(0.10));
  CHECK(far_loss > near_loss);
}

TEST_CASE("identical seed and call sequence reproduce identical outcomes") {
  auto run = [] {
    Medium medium(LinkModel{}, RoutingMode::tree, 99);
    NodeAddress n = medium.topology().join({70, 0});
    std::vector<std::pair<bool, double>> results;
    for (int i = 0; i < 300; ++i) {
      auto o = medium.transmit(test_frame(n, kCoordinatorAddress, static_cast<std::uint8_t>(i)),
                               i * 50.0);
      results.emplace_back(o.delivered, o.at_ms);
    }
    return results;
  };
  CHECK(run() == run());
}

TEST_CASE("multi-hop delivery relays through the tree parent") {
  Medium medium(lossless_link(), RoutingMode::tree, 5);
  NodeAddress relay = medium.topology().join({55, 0});
  NodeAddress leaf = medium.topology().join({110, 0});  // only the relay is in range
  REQUIRE(medium.topology().parent(leaf) == relay);

  for (int i = 0; i < 200; ++i) {
    double now = i * 300.0;
    auto outcome = medium.transmit(test_frame(leaf, kCoordinatorAddress,
                                              static_cast<std::uint8_t>(i)),
                                   now);
    REQUIRE(outcome.delivered);
    CHECK(outcome.hops == 2);
    double delay = outcome.at_ms - now;
    CHECK(delay >= 15.0 + 5.0);   // first hop band + one extra hop
    CHECK(delay <= 100.0 + 30.0);
    REQUIRE(outcome.tx_shares.size() == 2);
    CHECK(outcome.tx_shares[0].node == leaf);
    CHECK(outcome.tx_shares[1].node == relay);
    CHECK(outcome.tx_shares[0].tx_ms == outcome.tx_shares[1].tx_ms);
  }

  SUBCASE("a dead relay severs the leaf") {
    medium.topology().set_down(relay, true);
    auto outcome = medium.transmit(test_frame(leaf, kCoordinatorAddress), 0.0);
    CHECK_FALSE(outcome.delivered);
    CHECK(outcome.reason == DropReason::no_route);
  }
}

TEST_CASE("transmit rejects invalid frames and unjoined sources") {
  Medium medium(LinkModel{}, RoutingMode::tree, 1);
  NodeAddress n = medium.topology().join({10, 0});

  Frame oversized = test_frame(n, kCoordinatorAddress, 0, 85);
  CHECK_THROWS_AS(medium.transmit(oversized, 0.0), InvalidFrame);

  Frame corrupt = test_frame(n, kCoordinatorAddress);
  corrupt.checksum ^= 0xFF;
  CHECK_THROWS_AS(medium.transmit(corrupt, 0.0), InvalidFrame);

  CHECK_THROWS_AS(medium.transmit(test_frame(42, kCoordinatorAddress), 0.0), UnknownNode);

  SUBCASE("unjoined destination is a no_route drop") {
    auto outcome = medium.transmit(test_frame(n, 42), 0.0);
    CHECK_FALSE(outcome.delivered);
    CHECK(outcome.reason == DropReason::no_route);
  }
}
