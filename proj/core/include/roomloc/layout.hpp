#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace roomloc {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

double distance(Point2 a, Point2 b);

/// Floor plan of a simulated house: room centres, gateway positions and which
/// rooms open onto each other. Coordinates are metres.
struct HouseLayout {
  std::vector<std::string> rooms;
  std::vector<Point2> room_positions;
  std::vector<Point2> gateway_positions;
  /// Undirected room pairs (indices into `rooms`).
  std::vector<std::pair<int, int>> adjacency;
  /// Room where residents sleep.
  int bedroom = 0;
  /// Residents and the technician stand within this radius of a room centre.
  double room_radius = 1.2;

  std::size_t room_count() const { return rooms.size(); }
  std::size_t gateway_count() const { return gateway_positions.size(); }

  bool adjacent(int a, int b) const;
  std::vector<int> neighbours(int room) const;
  /// Rooms on a shortest path from `from` to `to`, both ends included.
  std::vector<int> shortest_path(int from, int to) const;
  bool connected() const;
  int room_index(const std::string& name) const;

  /// Throws ValidationError when the layout is unusable for simulation:
  /// no rooms, no gateways, mismatched sizes, out-of-range or asymmetric
  /// adjacency, or a room unreachable from the others.
  void validate() const;
};

/// Five rooms, six gateways: bedroom, bathroom, hall, kitchen, living room.
HouseLayout demo_layout();

}  // namespace roomloc
