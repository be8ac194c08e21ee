#include "handkit/palm.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <Eigen/SVD>

#include "handkit/error.hpp"
#include "handkit/random.hpp"

namespace handkit {

std::array<Vec3, 6> palm_vertices(std::span<const Vec3> hand_joints)
{
  std::array<Vec3, 6> v;
  v[0] = hand_joints[kWrist];
  for (Finger f : kFingers)
    v[1 + static_cast<int>(f)] = hand_joints[joint_index(f, JointClass::Mcp)];
  return v;
}

namespace {

using Vec2 = Eigen::Vector2d;

double cross2(const Vec2& o, const Vec2& a, const Vec2& b)
{
  return (a - o).x() * (b - o).y() - (a - o).y() * (b - o).x();
}

/// Andrew's monotone chain over indexed 2D points; counter-clockwise, no
/// collinear vertices.
std::vector<int> convex_hull_2d(const std::vector<Vec2>& pts, const std::vector<int>& ids)
{
  std::vector<int> order(ids);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return pts[a].x() < pts[b].x() || (pts[a].x() == pts[b].x() && pts[a].y() < pts[b].y());
  });
  if (order.size() < 3)
    return order;
  std::vector<int> hull(2 * order.size());
  std::size_t k = 0;
  for (int id : order)
  {
    while (k >= 2 && cross2(pts[hull[k - 2]], pts[hull[k - 1]], pts[id]) <= 0.0)
      --k;
    hull[k++] = id;
  }
  for (std::size_t i = order.size() - 1, t = k + 1; i-- > 0;)
  {
    const int id = order[i];
    while (k >= t && cross2(pts[hull[k - 2]], pts[hull[k - 1]], pts[id]) <= 0.0)
      --k;
    hull[k++] = id;
  }
  hull.resize(k - 1);
  return hull;
}

/// Triangles covering the convex hull of `ids` (all on one plane with unit
/// normal `normal`), fanned from `apex` when it is a hull vertex.
void triangulate_polygon(const std::array<Vec3, 6>& v, const std::vector<int>& ids, const Vec3& normal, int apex,
                         std::vector<std::array<Vec3, 3>>& out)
{
  const Vec3 u = normal.unitOrthogonal();
  const Vec3 w = normal.cross(u);
  std::vector<Vec2> pts(v.size());
  for (int id : ids)
    pts[id] = Vec2(v[id].dot(u), v[id].dot(w));
  auto hull = convex_hull_2d(pts, ids);
  if (hull.size() < 3)
    return;
  const auto it = std::find(hull.begin(), hull.end(), apex);
  if (it != hull.end())
    std::rotate(hull.begin(), it, hull.end());
  for (std::size_t i = 1; i + 1 < hull.size(); ++i)
    out.push_back({v[hull[0]], v[hull[i]], v[hull[i + 1]]});
}

double triangle_area(const std::array<Vec3, 3>& t)
{
  return 0.5 * (t[1] - t[0]).cross(t[2] - t[0]).norm();
}

double tetra_volume(const std::array<Vec3, 4>& t)
{
  return std::abs((t[1] - t[0]).dot((t[2] - t[0]).cross(t[3] - t[0]))) / 6.0;
}

} // namespace

PalmHull palm_hull(const std::array<Vec3, 6>& v, double planarity_tolerance)
{
  Vec3 centroid = Vec3::Zero();
  for (const auto& p : v)
  {
    if (!p.allFinite())
      throw DataError("degenerate palm hull");
    centroid += p;
  }
  centroid /= 6.0;
  Eigen::Matrix<double, 6, 3> centered;
  for (int i = 0; i < 6; ++i)
    centered.row(i) = (v[i] - centroid).transpose();
  Eigen::JacobiSVD<Eigen::Matrix<double, 6, 3>> svd(centered, Eigen::ComputeFullV);
  const auto sv = svd.singularValues();
  if (!(sv(1) > 1e-9))
    throw DataError("degenerate palm hull");
  const Vec3 normal = svd.matrixV().col(2);

  double residual = 0.0;
  for (const auto& p : v)
    residual = std::max(residual, std::abs((p - centroid).dot(normal)));

  PalmHull hull;
  if (residual <= planarity_tolerance)
  {
    hull.planar = true;
    triangulate_polygon(v, {0, 1, 2, 3, 4, 5}, normal, 0, hull.triangles);
    for (const auto& t : hull.triangles)
      hull.measure += triangle_area(t);
  }
  else
  {
    // Brute-force hull faces: every plane through three vertices with all
    // others on one side. Coplanar vertex groups are triangulated once.
    hull.planar = false;
    const double scale = sv(0);
    const double eps = 1e-12 * std::max(1.0, scale * scale);
    std::map<unsigned, Vec3> faces; // vertex mask -> outward normal
    for (int i = 0; i < 6; ++i)
      for (int j = i + 1; j < 6; ++j)
        for (int k = j + 1; k < 6; ++k)
        {
          Vec3 n = (v[j] - v[i]).cross(v[k] - v[i]);
          if (n.norm() < 1e-15)
            continue;
          int above = 0, below = 0;
          unsigned mask = 0;
          for (int m = 0; m < 6; ++m)
          {
            const double d = n.dot(v[m] - v[i]);
            if (d > eps)
              ++above;
            else if (d < -eps)
              ++below;
            else
              mask |= 1u << m;
          }
          if (above && below)
            continue;
          if (above)
            n = -n;
          faces.emplace(mask, n.normalized());
        }
    std::vector<std::array<Vec3, 3>> surface;
    for (const auto& [mask, n] : faces)
    {
      std::vector<int> ids;
      for (int m = 0; m < 6; ++m)
        if (mask & (1u << m))
          ids.push_back(m);
      triangulate_polygon(v, ids, n, 0, surface);
    }
    for (const auto& t : surface)
    {
      std::array<Vec3, 4> tet{centroid, t[0], t[1], t[2]};
      const double vol = tetra_volume(tet);
      if (vol > 0.0)
      {
        hull.tetrahedra.push_back(tet);
        hull.measure += vol;
      }
    }
  }
  if (!(hull.measure > 0.0))
    throw DataError("degenerate palm hull");
  return hull;
}

PalmCloud sample_palm_cloud(const std::array<Vec3, 6>& vertices, std::uint64_t seed, int count)
{
  const PalmHull hull = palm_hull(vertices);
  Rng rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);

  std::vector<double> cumulative;
  if (hull.planar)
    for (const auto& t : hull.triangles)
      cumulative.push_back((cumulative.empty() ? 0.0 : cumulative.back()) + triangle_area(t));
  else
    for (const auto& t : hull.tetrahedra)
      cumulative.push_back((cumulative.empty() ? 0.0 : cumulative.back()) + tetra_volume(t));

  PalmCloud cloud;
  cloud.seed = seed;
  cloud.points.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i)
  {
    const double pick = uni(rng) * cumulative.back();
    const auto idx = static_cast<std::size_t>(
        std::min<std::ptrdiff_t>(std::upper_bound(cumulative.begin(), cumulative.end(), pick) - cumulative.begin(),
                                 static_cast<std::ptrdiff_t>(cumulative.size()) - 1));
    double a = uni(rng);
    double b = uni(rng);
    if (hull.planar)
    {
      if (a + b > 1.0)
      {
        a = 1.0 - a;
        b = 1.0 - b;
      }
      const auto& t = hull.triangles[idx];
      cloud.points.push_back(t[0] + a * (t[1] - t[0]) + b * (t[2] - t[0]));
    }
    else
    {
      // Uniform point in a tetrahedron by folding the unit cube.
      double c = uni(rng);
      if (a + b > 1.0)
      {
        a = 1.0 - a;
        b = 1.0 - b;
      }
      if (b + c > 1.0)
      {
        const double tmp = c;
        c = 1.0 - a - b;
        b = 1.0 - tmp;
      }
      else if (a + b + c > 1.0)
      {
        const double tmp = c;
        c = a + b + c - 1.0;
        a = 1.0 - b - tmp;
      }
      const auto& t = hull.tetrahedra[idx];
      cloud.points.push_back(t[0] + a * (t[1] - t[0]) + b * (t[2] - t[0]) + c * (t[3] - t[0]));
    }
  }
  return cloud;
}

PalmCloud palm_cloud(const MotionSequence& seq, std::size_t frame_index, Hand hand, std::uint64_t seed)
{
  return sample_palm_cloud(palm_vertices(seq.hand(frame_index, hand)),
                           derive_seed(seed, frame_index, static_cast<std::uint64_t>(hand)));
}

} // namespace handkit
