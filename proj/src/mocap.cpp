#include "handkit/mocap.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include <Eigen/QR>
#include <fmt/format.h>
#include <json.hpp>

#include "handkit/error.hpp"

namespace handkit {

std::string marker_label(int marker)
{
  if (marker == kWristMarker)
    return "wrist";
  if (marker >= 1 && marker <= 4)
    return fmt::format("palm_{}", marker - 1);
  if (marker < 5 || marker >= kMarkersPerHand)
    return {};
  static constexpr const char* kSites[] = {"mcp", "pip", "dip", "tip"};
  const int k = marker - 5;
  return fmt::format("{}_{}", finger_name(static_cast<Finger>(k / 4)), kSites[k % 4]);
}

int parse_marker_label(std::string_view label)
{
  for (int m = 0; m < kMarkersPerHand; ++m)
    if (marker_label(m) == label)
      return m;
  return -1;
}

bool MarkerFrame::all_finite() const
{
  for (const auto& m : markers)
    if (!m.allFinite())
      return false;
  return true;
}

double DepthFactors::of(JointClass cls) const
{
  switch (cls)
  {
    case JointClass::Mcp: return mcp;
    case JointClass::Pip: return pip;
    case JointClass::Dip: return dip;
    case JointClass::Tip: return tip;
    case JointClass::Wrist: return 0.0;
  }
  return 0.0;
}

void HandCalibration::validate() const
{
  if (!(depth_scale > 0.0) || !std::isfinite(depth_scale))
    throw ValidationError("depth_scale must be positive");
  for (double l : reference_lengths)
    if (!(l > 0.0) || !std::isfinite(l))
      throw ValidationError("reference lengths must be positive");
  for (double f : {factors.mcp, factors.pip, factors.dip, factors.tip})
    if (!(f >= 0.0) || !std::isfinite(f))
      throw ValidationError("depth factors must be non-negative");
}

namespace {

/// Palm-ward direction from the dorsal markers: the cross product of the
/// radial-to-ulnar MCP axis and the wrist-to-knuckles axis, mirrored for the
/// left hand.
Vec3 inward_reference(const MarkerFrame& m, Hand hand)
{
  const Vec3 lateral = m.at(hand, finger_marker(Finger::Index, MarkerSite::Mcp)) -
                       m.at(hand, finger_marker(Finger::Little, MarkerSite::Mcp));
  Vec3 knuckles = Vec3::Zero();
  for (Finger f : {Finger::Index, Finger::Middle, Finger::Ring, Finger::Little})
    knuckles += m.at(hand, finger_marker(f, MarkerSite::Mcp));
  const Vec3 forward = 0.25 * knuckles - m.at(hand, kWristMarker);
  const Vec3 n = lateral.cross(forward);
  return hand == Hand::Right ? n : Vec3(-n);
}

Vec3 radial_reference(const MarkerFrame& m, Hand hand)
{
  return m.at(hand, finger_marker(Finger::Index, MarkerSite::Mcp)) -
         m.at(hand, finger_marker(Finger::Little, MarkerSite::Mcp));
}

struct Triple
{
  int a, b, c;
};

Triple normal_triple(int joint)
{
  const Finger f = joint_finger(joint);
  const auto fm = [f](MarkerSite s) { return finger_marker(f, s); };
  switch (joint_class(joint))
  {
    case JointClass::Pip: return {fm(MarkerSite::Mcp), fm(MarkerSite::Pip), fm(MarkerSite::Dip)};
    case JointClass::Dip:
    case JointClass::Tip: return {fm(MarkerSite::Pip), fm(MarkerSite::Dip), fm(MarkerSite::Tip)};
    case JointClass::Mcp:
    {
      if (f == Finger::Thumb)
        return {fm(MarkerSite::Mcp), finger_marker(Finger::Index, MarkerSite::Mcp), palm_marker(0)};
      const Finger neighbor = f == Finger::Little ? Finger::Ring : static_cast<Finger>(static_cast<int>(f) + 1);
      return {fm(MarkerSite::Mcp), finger_marker(neighbor, MarkerSite::Mcp), palm_marker(static_cast<int>(f) - 1)};
    }
    case JointClass::Wrist: break;
  }
  throw ValidationError("the wrist has no marker normal");
}

} // namespace

Vec3 marker_normal(const MarkerFrame& markers, Hand hand, int joint)
{
  if (joint <= kWrist || joint >= kJointsPerHand)
    throw ValidationError(fmt::format("no marker normal for joint {}", joint));
  const Triple t = normal_triple(joint);
  const Vec3& a = markers.at(hand, t.a);
  const Vec3& b = markers.at(hand, t.b);
  const Vec3& c = markers.at(hand, t.c);
  const Vec3 n = (b - a).cross(c - b);
  const double len = n.norm();
  if (!(len >= 1e-9))
    throw DataError(fmt::format("degenerate normal plane at {} {}", hand_name(hand), joint_name(joint)));
  // Finger-chain triples lie in the flexion plane, so their normal is
  // lateral; its sign is fixed toward the radial (index) side instead.
  const Vec3 reference = joint_class(joint) == JointClass::Mcp ? inward_reference(markers, hand)
                                                               : radial_reference(markers, hand);
  Vec3 unit = n / len;
  if (unit.dot(reference) < 0.0)
    unit = -unit;
  return unit;
}

HandJoints estimate_joints(const MarkerFrame& markers, Hand hand, const HandCalibration& calib)
{
  HandJoints joints;
  joints[kWrist] = markers.at(hand, kWristMarker);
  for (Finger f : kFingers)
  {
    for (int s = 0; s < 4; ++s)
    {
      const auto site = static_cast<MarkerSite>(s);
      const int joint = joint_index(f, static_cast<JointClass>(s + 1));
      const double depth = calib.depth_scale * calib.factors.of(joint_class(joint));
      joints[joint] = markers.at(hand, finger_marker(f, site)) + marker_normal(markers, hand, joint) * depth;
    }
  }
  return joints;
}

double wrist_objective(const HandJoints& joints, const std::array<double, 5>& reference_lengths, const Vec3& wrist)
{
  double sum = 0.0;
  for (Finger f : kFingers)
  {
    const int i = static_cast<int>(f);
    const double r = (joints[joint_index(f, JointClass::Mcp)] - wrist).norm() - reference_lengths[i];
    sum += r * r;
  }
  return sum;
}

WristFit optimize_wrist(const HandJoints& joints, const HandCalibration& calib, const Vec3& initial, int max_iters,
                        double tol)
{
  calib.validate();
  std::array<Vec3, 5> mcp;
  for (Finger f : kFingers)
    mcp[static_cast<int>(f)] = joints[joint_index(f, JointClass::Mcp)];
  double spread = 0.0;
  for (const auto& p : mcp)
  {
    if (!p.allFinite())
      throw DataError("non-finite MCP joint");
    spread = std::max(spread, (p - mcp[0]).norm());
  }
  if (spread < 1e-12)
    throw DataError("underdetermined wrist");
  if (!initial.allFinite())
    throw DataError("non-finite wrist initializer");

  const auto& lref = calib.reference_lengths;
  WristFit fit;
  fit.wrist = initial;
  fit.residual = fit.initial_residual = wrist_objective(joints, lref, initial);

  Eigen::Matrix<double, 5, 3> jac;
  Eigen::Matrix<double, 5, 1> res;
  for (int it = 0; it < max_iters; ++it)
  {
    fit.iterations = it + 1;
    for (int i = 0; i < 5; ++i)
    {
      const Vec3 d = fit.wrist - mcp[i];
      const double len = d.norm();
      res(i) = len - lref[i];
      jac.row(i) = len > 1e-15 ? Eigen::RowVector3d((d / len).transpose()) : Eigen::RowVector3d::Zero();
    }
    const Vec3 delta = jac.colPivHouseholderQr().solve(-res);
    if (!delta.allFinite())
      break;

    double step = 1.0;
    bool accepted = false;
    Vec3 candidate;
    double value = 0.0;
    for (int k = 0; k < 40; ++k, step *= 0.5)
    {
      candidate = fit.wrist + step * delta;
      value = wrist_objective(joints, lref, candidate);
      if (value < fit.residual)
      {
        accepted = true;
        break;
      }
    }
    if (!accepted)
    {
      // No descent along the Gauss-Newton direction: stationary point.
      fit.converged = true;
      break;
    }
    fit.wrist = candidate;
    fit.residual = value;
    if (step * delta.norm() < tol)
    {
      fit.converged = true;
      break;
    }
  }
  return fit;
}

MotionSequence solve_sequence(std::span<const MarkerFrame> frames, double fps,
                              const std::array<HandCalibration, 2>& calib, const SolveOptions& opts)
{
  if (frames.empty())
    throw DataError("marker stream is empty");
  for (const auto& c : calib)
    c.validate();

  std::vector<Vec3> pts;
  pts.reserve(frames.size() * kJointsTotal);
  std::array<Vec3, 2> previous_wrist;
  for (std::size_t f = 0; f < frames.size(); ++f)
  {
    if (!frames[f].all_finite())
      throw DataError(fmt::format("frame {}: non-finite marker", f));
    for (Hand h : kHands)
    {
      const auto hi = static_cast<std::size_t>(h);
      try
      {
        HandJoints joints = estimate_joints(frames[f], h, calib[hi]);
        const Vec3 init = f == 0 ? joints[kWrist] : previous_wrist[hi];
        const WristFit fit = optimize_wrist(joints, calib[hi], init, opts.max_iters, opts.tol);
        joints[kWrist] = fit.wrist;
        previous_wrist[hi] = fit.wrist;
        pts.insert(pts.end(), joints.begin(), joints.end());
      }
      catch (const DataError& e)
      {
        throw DataError(fmt::format("frame {}: {}", f, e.what()));
      }
    }
  }
  return MotionSequence(fps, std::move(pts));
}

namespace {

double parse_double(std::string_view field, std::size_t line)
{
  double v = 0.0;
  const auto* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, v);
  if (ec != std::errc() || ptr != end)
    throw DataError(fmt::format("marker CSV line {}: bad number '{}'", line, field));
  return v;
}

std::vector<std::string_view> split(std::string_view line, char sep)
{
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true)
  {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos)
      break;
    start = pos + 1;
  }
  return out;
}

} // namespace

std::vector<MarkerFrame> parse_marker_csv(std::string_view text)
{
  std::map<std::size_t, std::pair<MarkerFrame, std::array<bool, 2 * kMarkersPerHand>>> frames;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool header = false;
  while (pos < text.size())
  {
    auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r')
      line.remove_suffix(1);
    if (line.empty())
      continue;
    if (!header)
    {
      if (line != "frame,hand,label,x,y,z")
        throw DataError("marker CSV header must be 'frame,hand,label,x,y,z'");
      header = true;
      continue;
    }
    const auto fields = split(line, ',');
    if (fields.size() != 6)
      throw DataError(fmt::format("marker CSV line {}: expected 6 fields", line_no));
    std::size_t frame = 0;
    auto [p, ec] = std::from_chars(fields[0].data(), fields[0].data() + fields[0].size(), frame);
    if (ec != std::errc() || p != fields[0].data() + fields[0].size())
      throw DataError(fmt::format("marker CSV line {}: bad frame index", line_no));
    const auto hand = parse_hand(fields[1]);
    if (!hand)
      throw DataError(fmt::format("marker CSV line {}: bad hand '{}'", line_no, fields[1]));
    const int marker = parse_marker_label(fields[2]);
    if (marker < 0)
      throw DataError(fmt::format("marker CSV line {}: unknown label '{}'", line_no, fields[2]));
    auto& [mf, seen] = frames[frame];
    const auto slot = static_cast<std::size_t>(*hand) * kMarkersPerHand + marker;
    if (seen[slot])
      throw DataError(fmt::format("marker CSV line {}: duplicate marker", line_no));
    seen[slot] = true;
    mf.markers[slot] = Vec3(parse_double(fields[3], line_no), parse_double(fields[4], line_no),
                            parse_double(fields[5], line_no));
  }
  if (!header)
    throw DataError("marker CSV is empty");

  std::vector<MarkerFrame> out;
  out.reserve(frames.size());
  for (const auto& [index, entry] : frames)
  {
    if (index != out.size())
      throw DataError(fmt::format("marker CSV: frame {} missing", out.size()));
    for (bool s : entry.second)
      if (!s)
        throw DataError(fmt::format("marker CSV: frame {} is missing markers", index));
    out.push_back(entry.first);
  }
  return out;
}

std::string dump_marker_csv(std::span<const MarkerFrame> frames)
{
  std::string out = "frame,hand,label,x,y,z\n";
  auto it = std::back_inserter(out);
  for (std::size_t f = 0; f < frames.size(); ++f)
    for (Hand h : kHands)
      for (int m = 0; m < kMarkersPerHand; ++m)
      {
        const Vec3& p = frames[f].at(h, m);
        fmt::format_to(it, "{},{},{},{},{},{}\n", f, hand_name(h), marker_label(m), p.x(), p.y(), p.z());
      }
  return out;
}

namespace {

HandCalibration calibration_from(const nlohmann::json& j)
{
  HandCalibration c;
  try
  {
    c.depth_scale = j.at("depth_scale").get<double>();
    const auto& lengths = j.at("reference_lengths");
    if (!lengths.is_array() || lengths.size() != 5)
      throw ValidationError("reference_lengths must have 5 entries");
    for (std::size_t i = 0; i < 5; ++i)
      c.reference_lengths[i] = lengths[i].get<double>();
    if (j.contains("factors"))
    {
      const auto& f = j["factors"];
      c.factors.mcp = f.value("mcp", c.factors.mcp);
      c.factors.pip = f.value("pip", c.factors.pip);
      c.factors.dip = f.value("dip", c.factors.dip);
      c.factors.tip = f.value("tip", c.factors.tip);
    }
  }
  catch (const nlohmann::json::exception& e)
  {
    throw ValidationError(fmt::format("calibration: {}", e.what()));
  }
  c.validate();
  return c;
}

} // namespace

std::array<HandCalibration, 2> parse_calibration(std::string_view json_text)
{
  nlohmann::json j;
  try
  {
    j = nlohmann::json::parse(json_text);
  }
  catch (const nlohmann::json::exception& e)
  {
    throw ValidationError(fmt::format("calibration JSON: {}", e.what()));
  }
  if (j.contains("left") || j.contains("right"))
    return {calibration_from(j.at("left")), calibration_from(j.at("right"))};
  const auto c = calibration_from(j);
  return {c, c};
}

} // namespace handkit
