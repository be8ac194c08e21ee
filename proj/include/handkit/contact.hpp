#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "handkit/motion.hpp"

namespace handkit {

inline constexpr double kContactThreshold = 0.02;

/// Binary contact labels; 1 = contact.
struct ContactLabels
{
  std::size_t frames = 0;
  double threshold = kContactThreshold;
  /// frame x hand x {index, middle, ring, little}: thumb tip touches that tip.
  std::vector<std::uint8_t> intra;
  /// Per frame: the two hands touch.
  std::vector<std::uint8_t> inter;

  std::uint8_t intra_at(std::size_t f, Hand h, int pair) const
  {
    return intra[(f * 2 + static_cast<std::size_t>(h)) * 4 + pair];
  }
};

std::vector<std::uint8_t> intra_contact(const MotionSequence& seq, double threshold = kContactThreshold);

/// Smallest left-right distance over all joints plus each hand's palm cloud.
double min_interhand_distance(const MotionSequence& seq, std::size_t frame, std::uint64_t seed);

/// Per frame: min_interhand_distance < threshold. Frames whose joint bounding
/// spheres are further apart than the threshold skip cloud sampling.
std::vector<std::uint8_t> inter_contact(const MotionSequence& seq, double threshold = kContactThreshold,
                                        std::uint64_t seed = 0);

ContactLabels contact_labels(const MotionSequence& seq, double threshold = kContactThreshold,
                             std::uint64_t seed = 0);

struct ContactCounts
{
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;

  ContactCounts& operator+=(const ContactCounts& o)
  {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
};

struct ContactScore
{
  ContactCounts counts;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  /// A denominator was empty and the convention (1 if neither side has
  /// positives, else 0) was applied.
  bool degenerate = false;
};

ContactScore score_counts(const ContactCounts& counts);
ContactCounts count_matches(std::span<const std::uint8_t> gt, std::span<const std::uint8_t> gen);

enum class ContactMode
{
  PerFrame,
  /// Each label channel reduced to "contact at any frame" before scoring.
  PerClip,
};

struct ContactReport
{
  ContactScore intra;
  ContactScore inter;
};

/// Throws ValidationError on shape mismatch.
ContactReport score(const ContactLabels& gt, const ContactLabels& gen, ContactMode mode = ContactMode::PerFrame);

/// Summed counts over many clips, then scored.
class ContactReportAccumulator
{
public:
  void add(const ContactLabels& gt, const ContactLabels& gen, ContactMode mode = ContactMode::PerFrame);
  ContactReport result() const;

private:
  ContactCounts intra_;
  ContactCounts inter_;
};

/// {"intra":{precision,recall,f1,tp,fp,fn},"inter":{...}}
std::string contact_report_json(const ContactReport& report, int indent = 2);

} // namespace handkit
