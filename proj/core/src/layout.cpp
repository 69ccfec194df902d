#include "roomloc/layout.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "roomloc/errors.hpp"

namespace roomloc {

double distance(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

bool HouseLayout::adjacent(int a, int b) const {
  return std::any_of(adjacency.begin(), adjacency.end(), [&](const auto& e) {
    return (e.first == a && e.second == b) || (e.first == b && e.second == a);
  });
}

std::vector<int> HouseLayout::neighbours(int room) const {
  std::vector<int> out;
  for (const auto& [a, b] : adjacency) {
    if (a == room && b != room) out.push_back(b);
    if (b == room && a != room) out.push_back(a);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<int> HouseLayout::shortest_path(int from, int to) const {
  const int n = static_cast<int>(room_count());
  std::vector<int> parent(n, -1);
  std::vector<char> seen(n, 0);
  std::deque<int> queue{from};
  seen[from] = 1;
  while (!queue.empty()) {
    const int u = queue.front();
    queue.pop_front();
    if (u == to) break;
    for (int v : neighbours(u)) {
      if (!seen[v]) {
        seen[v] = 1;
        parent[v] = u;
        queue.push_back(v);
      }
    }
  }
  if (!seen[to]) return {};
  std::vector<int> path;
  for (int v = to; v != -1; v = parent[v]) path.push_back(v);
  std::reverse(path.begin(), path.end());
  return path;
}

bool HouseLayout::connected() const {
  if (rooms.empty()) return false;
  for (int r = 1; r < static_cast<int>(room_count()); ++r) {
    if (shortest_path(0, r).empty()) return false;
  }
  return true;
}

int HouseLayout::room_index(const std::string& name) const {
  const auto it = std::find(rooms.begin(), rooms.end(), name);
  if (it == rooms.end()) throw ValidationError("unknown room '" + name + "'");
  return static_cast<int>(it - rooms.begin());
}

void HouseLayout::validate() const {
  if (rooms.empty()) throw ValidationError("layout has no rooms");
  if (room_positions.size() != rooms.size())
    throw ValidationError("layout: room_positions size does not match rooms");
  if (gateway_positions.empty()) throw ValidationError("layout has no gateways");
  const int n = static_cast<int>(room_count());
  for (const auto& [a, b] : adjacency) {
    if (a < 0 || b < 0 || a >= n || b >= n)
      throw ValidationError("layout: adjacency references a missing room");
  }
  if (bedroom < 0 || bedroom >= n) throw ValidationError("layout: bedroom index out of range");
  if (!(room_radius >= 0.0)) throw ValidationError("layout: room_radius must be non-negative");
  if (!connected()) throw ValidationError("layout: some rooms are unreachable");
}

HouseLayout demo_layout() {
  HouseLayout h;
  h.rooms = {"bedroom", "bathroom", "hall", "kitchen", "living"};
  h.room_positions = {{2.5, 7.0}, {7.5, 7.0}, {5.0, 4.5}, {7.5, 1.5}, {2.5, 1.5}};
  h.gateway_positions = {{1.0, 8.0}, {9.0, 8.0}, {5.0, 4.0}, {9.0, 0.5}, {1.0, 0.5}, {4.0, 0.5}};
  h.adjacency = {{0, 2}, {1, 2}, {2, 3}, {2, 4}, {3, 4}};
  h.bedroom = 0;
  h.room_radius = 1.2;
  return h;
}

}  // namespace roomloc
