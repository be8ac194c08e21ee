#include "handkit/representations.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>

#include <fmt/format.h>
#include <json.hpp>

#include "handkit/error.hpp"
#include "handkit/hmx_io.hpp"

namespace handkit {

static_assert(std::endian::native == std::endian::little, "binary writers assume a little-endian host");

namespace {

constexpr double kRadToDeg = 180.0 / M_PI;

struct BinaryField
{
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<double> values;
};

void write_fields(const std::filesystem::path& stem, std::string_view format, double fps,
                  const std::vector<BinaryField>& fields, const nlohmann::ordered_json& extra)
{
  auto bin = stem;
  bin += ".bin";
  auto meta = stem;
  meta += ".json";
  if (stem.has_parent_path())
    std::filesystem::create_directories(stem.parent_path());

  std::ofstream out(bin, std::ios::binary | std::ios::trunc);
  if (!out)
    throw DataError(fmt::format("cannot write {}", bin.string()));
  nlohmann::ordered_json j;
  j["format"] = format;
  j["dtype"] = "float64";
  j["byte_order"] = "little";
  j["fps"] = fps;
  auto& arr = j["fields"] = nlohmann::ordered_json::array();
  std::size_t offset = 0;
  for (const auto& field : fields)
  {
    nlohmann::ordered_json f;
    f["name"] = field.name;
    f["shape"] = field.shape;
    f["offset"] = offset;
    f["bytes"] = field.values.size() * sizeof(double);
    arr.push_back(std::move(f));
    out.write(reinterpret_cast<const char*>(field.values.data()),
              static_cast<std::streamsize>(field.values.size() * sizeof(double)));
    offset += field.values.size() * sizeof(double);
  }
  if (!out)
    throw DataError(fmt::format("failed writing {}", bin.string()));
  for (const auto& [k, v] : extra.items())
    j[k] = v;
  write_text_file(meta, j.dump(2) + "\n");
}

void push(std::vector<double>& out, const Vec3& v)
{
  out.insert(out.end(), {v.x(), v.y(), v.z()});
}

} // namespace

RotationScalar rotation_scalar(std::span<const Vec3> hj, int joint)
{
  if (!has_bending_angle(joint))
    return {};
  const Vec3 axis_raw = hj[joint_index(Finger::Index, JointClass::Mcp)] - hj[joint_index(Finger::Little, JointClass::Mcp)];
  const double axis_len = axis_raw.norm();
  if (!(axis_len > 1e-9))
    return {0.0, true};
  const Vec3 axis = axis_raw / axis_len;
  const Vec3 a = hj[joint] - hj[parent_joint(joint)];
  const Vec3 b = hj[child_joint(joint)] - hj[joint];
  const Vec3 pa = a - a.dot(axis) * axis;
  const Vec3 pb = b - b.dot(axis) * axis;
  const double la = pa.norm();
  const double lb = pb.norm();
  if (!(la >= 1e-9) || !(lb >= 1e-9))
    return {0.0, true};
  return {angle_degrees(pa, pb), false};
}

MotionSequence DiffusionRep::positions() const
{
  std::vector<Vec3> pts(frames * kJointsTotal);
  for (std::size_t f = 0; f < frames; ++f)
    for (int j = 0; j < kJointsTotal; ++j)
      pts[f * kJointsTotal + j] = Vec3(at(f, j, 0), at(f, j, 1), at(f, j, 2));
  return MotionSequence(fps, std::move(pts));
}

DiffusionRep to_diffusion_rep(const MotionSequence& seq)
{
  DiffusionRep rep;
  rep.fps = seq.fps();
  rep.frames = seq.num_frames();
  rep.data.resize(rep.frames * kJointsTotal * DiffusionRep::kChannels);
  for (std::size_t f = 0; f < rep.frames; ++f)
    for (Hand h : kHands)
    {
      const auto hj = seq.hand(f, h);
      for (int j = 0; j < kJointsPerHand; ++j)
      {
        const int g = global_joint(h, j);
        for (int c = 0; c < 3; ++c)
          rep.at(f, g, c) = hj[j][c];
        const auto s = rotation_scalar(hj, j);
        rep.at(f, g, 3) = s.degrees;
        rep.degenerate_scalars += s.degenerate;
      }
    }
  return rep;
}

Mat3 wrist_orientation(std::span<const Vec3> hj)
{
  const Vec3 a = hj[joint_index(Finger::Index, JointClass::Mcp)] - hj[kWrist];
  const Vec3 b = hj[joint_index(Finger::Little, JointClass::Mcp)] - hj[kWrist];
  const double la = a.norm();
  if (!(la > 1e-9))
    throw DataError("degenerate wrist frame");
  const Vec3 c0 = a / la;
  const Vec3 b_perp = b - b.dot(c0) * c0;
  const double lb = b_perp.norm();
  if (!(lb > 1e-9 * std::max(1.0, b.norm())))
    throw DataError("degenerate wrist frame");
  Mat3 r;
  r.col(0) = c0;
  r.col(1) = b_perp / lb;
  r.col(2) = r.col(0).cross(r.col(1));
  return r;
}

std::vector<double> ARLocalRep::flatten() const
{
  std::vector<double> out;
  out.reserve(frames.size() * kFrameWidth);
  for (const auto& fr : frames)
  {
    push(out, fr.d_r);
    push(out, fr.v_r);
    for (const auto& t : fr.theta_r)
      out.insert(out.end(), t.begin(), t.end());
    for (const auto& hand : fr.p_l)
      for (const auto& p : hand)
        push(out, p);
    for (const auto& hand : fr.v_l)
      for (const auto& v : hand)
        push(out, v);
    for (const auto& hand : fr.s)
      out.insert(out.end(), hand.begin(), hand.end());
  }
  return out;
}

ARLocalRep to_ar_rep(const MotionSequence& seq)
{
  const std::size_t n = seq.num_frames();
  if (n < 2)
    throw ValidationError("local representation needs at least two frames");
  ARLocalRep rep;
  rep.fps = seq.fps();
  rep.frames.resize(n);
  for (std::size_t f = 0; f < n; ++f)
  {
    auto& fr = rep.frames[f];
    fr.d_r = seq.at(f, Hand::Right, kWrist) - seq.at(f, Hand::Left, kWrist);
    for (Hand h : kHands)
    {
      const int hi = static_cast<int>(h);
      const auto hj = seq.hand(f, h);
      const Mat3 r = wrist_orientation(hj);
      for (int c = 0; c < 2; ++c)
        for (int k = 0; k < 3; ++k)
          fr.theta_r[hi][c * 3 + k] = r(k, c);
      for (int j = 1; j < kJointsPerHand; ++j)
      {
        fr.p_l[hi][j - 1] = r.transpose() * (hj[j] - hj[kWrist]);
        fr.s[hi][j - 1] = rotation_scalar(hj, j).degrees;
      }
    }
  }
  for (std::size_t f = 0; f < n; ++f)
  {
    const std::size_t a = f + 1 < n ? f : f - 1;
    auto& fr = rep.frames[f];
    fr.v_r = seq.at(a + 1, Hand::Right, kWrist) - seq.at(a, Hand::Right, kWrist);
    for (int h = 0; h < 2; ++h)
      for (int j = 0; j < kLocalJoints; ++j)
        fr.v_l[h][j] = rep.frames[a + 1].p_l[h][j] - rep.frames[a].p_l[h][j];
  }
  return rep;
}

MotionSequence from_ar_rep(const ARLocalRep& rep, std::span<const Vec3> left_wrist)
{
  if (left_wrist.size() != rep.frames.size())
    throw ValidationError(fmt::format("left wrist path has {} frames, representation has {}", left_wrist.size(),
                                      rep.frames.size()));
  std::vector<Vec3> pts(rep.frames.size() * kJointsTotal);
  for (std::size_t f = 0; f < rep.frames.size(); ++f)
  {
    const auto& fr = rep.frames[f];
    const std::array<Vec3, 2> wrists{left_wrist[f], left_wrist[f] + fr.d_r};
    for (int h = 0; h < 2; ++h)
    {
      Mat3 r;
      r.col(0) = Vec3(fr.theta_r[h][0], fr.theta_r[h][1], fr.theta_r[h][2]);
      r.col(1) = Vec3(fr.theta_r[h][3], fr.theta_r[h][4], fr.theta_r[h][5]);
      r.col(2) = r.col(0).cross(r.col(1));
      Vec3* out = &pts[f * kJointsTotal + h * kJointsPerHand];
      out[kWrist] = wrists[h];
      for (int j = 1; j < kJointsPerHand; ++j)
        out[j] = wrists[h] + r * fr.p_l[h][j - 1];
    }
  }
  return MotionSequence(rep.fps, std::move(pts));
}

void write_diffusion_rep(const std::filesystem::path& stem, const DiffusionRep& rep)
{
  nlohmann::ordered_json extra;
  extra["degenerate_scalars"] = rep.degenerate_scalars;
  write_fields(stem, "handkit.diffusion", rep.fps,
               {{"x", {rep.frames, static_cast<std::size_t>(kJointsTotal), DiffusionRep::kChannels}, rep.data}},
               extra);
}

void write_ar_rep(const std::filesystem::path& stem, const ARLocalRep& rep)
{
  const std::size_t n = rep.frames.size();
  const std::size_t lj = kLocalJoints;
  std::vector<BinaryField> fields{{"d_r", {n, 3}, {}},          {"v_r", {n, 3}, {}},
                                  {"theta_r", {n, 2, 6}, {}},   {"p_l", {n, 2, lj, 3}, {}},
                                  {"v_l", {n, 2, lj, 3}, {}},   {"s", {n, 2, lj}, {}}};
  for (const auto& fr : rep.frames)
  {
    push(fields[0].values, fr.d_r);
    push(fields[1].values, fr.v_r);
    for (const auto& t : fr.theta_r)
      fields[2].values.insert(fields[2].values.end(), t.begin(), t.end());
    for (const auto& hand : fr.p_l)
      for (const auto& p : hand)
        push(fields[3].values, p);
    for (const auto& hand : fr.v_l)
      for (const auto& v : hand)
        push(fields[4].values, v);
    for (const auto& hand : fr.s)
      fields[5].values.insert(fields[5].values.end(), hand.begin(), hand.end());
  }
  write_fields(stem, "handkit.ar_local", rep.fps, fields, nlohmann::ordered_json::object());
}

} // namespace handkit
