#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "handkit/motion.hpp"

namespace handkit {

inline constexpr int kPalmCloudSize = 100;

/// Points sampled uniformly inside the convex hull of the wrist and the five
/// MCP joints of one hand.
struct PalmCloud
{
  std::vector<Vec3> points;
  std::uint64_t seed = 0;
};

/// Wrist + thumb..little MCPs of one hand.
std::array<Vec3, 6> palm_vertices(std::span<const Vec3> hand_joints);

/// Hull decomposition used for sampling: triangles when the six points are
/// within 5 mm of a plane, tetrahedra otherwise. Exposed for testing.
struct PalmHull
{
  bool planar = true;
  std::vector<std::array<Vec3, 3>> triangles;
  std::vector<std::array<Vec3, 4>> tetrahedra;
  double measure = 0.0; ///< total area (planar) or volume
};

/// Throws DataError("degenerate palm hull") when the points are collinear
/// (or coincident).
PalmHull palm_hull(const std::array<Vec3, 6>& vertices, double planarity_tolerance = 0.005);

/// Samples `count` points: simplex chosen proportional to its measure, then
/// uniform barycentric coordinates. Deterministic in `seed`.
PalmCloud sample_palm_cloud(const std::array<Vec3, 6>& vertices, std::uint64_t seed,
                            int count = kPalmCloudSize);

/// Palm cloud of `hand` in frame `frame_index` of `seq`, with the per-frame
/// stream seed derived from (seed, frame, hand).
PalmCloud palm_cloud(const MotionSequence& seq, std::size_t frame_index, Hand hand, std::uint64_t seed);

} // namespace handkit
