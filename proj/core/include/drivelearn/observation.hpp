#pragma once

#include <array>
#include <span>
#include <vector>

#include "drivelearn/geometry.hpp"
#include "drivelearn/simulator.hpp"

namespace drivelearn {

inline constexpr int kRoutePoints = 30;
inline constexpr int kBoundPoints = 20;
inline constexpr int kNeighborSlots = 5;
inline constexpr int kHistoryPoints = 21;
inline constexpr double kRouteSpacing = 0.5;

inline constexpr int kRouteDim = 2 * kRoutePoints;                // 60
inline constexpr int kCorridorDim = 2 * 2 * kBoundPoints;         // 80
inline constexpr int kNeighborBlockDim = 14;
inline constexpr int kNeighborDim = kNeighborSlots * kNeighborBlockDim;  // 70
inline constexpr int kEgoDim = 2 * kHistoryPoints + 1 + 1 + 8;    // 52
inline constexpr int kObsDim = kRouteDim + kCorridorDim + kNeighborDim + kEgoDim;
static_assert(kObsDim == 262);

struct NeighborBlock {
  double mask = 0.0;
  Point2 position;
  Point2 velocity;
  double distance = 0.0;
  std::array<Point2, 4> border{};
};

/// Actor-centric view of a world, every position in the actor frame.
struct Observation {
  std::array<Point2, kRoutePoints> route{};
  std::array<Point2, kBoundPoints> right_bound{};
  std::array<Point2, kBoundPoints> left_bound{};
  std::array<NeighborBlock, kNeighborSlots> neighbors{};
  std::array<Point2, kHistoryPoints> history{};  // oldest first, last entry is the actor itself
  double last_action = 0.0;
  double collision_flag = 0.0;
  std::array<Point2, 4> ego_border{};
};

struct NormalizationSpec {
  double position_scale = 15.0;
  double speed_scale = 13.89;
  double distance_scale = 30.0;
  double action_scale = 2.0;

  void validate() const;
};

Observation build_observation(const WorldState& world);

/// Flattens in the order route, corridor (right, left), neighbours 1..5,
/// ego (history, last action, collision flag, border points).
std::vector<double> normalize(const Observation& obs, const NormalizationSpec& spec = {});
void normalize_into(const Observation& obs, const NormalizationSpec& spec, std::span<double> out);

}  // namespace drivelearn
