#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "handkit/motion.hpp"

namespace handkit {

/// HMX-JSON: {"fps", "joints_per_hand": 21, "hands": ["left","right"],
/// "frames": [[[x,y,z] x 42] x F]}. The reader rejects NaN/Inf and any
/// shape mismatch with DataError.
MotionSequence parse_hmx(std::string_view text, std::string source_id = {});
std::string dump_hmx(const MotionSequence& seq);

MotionSequence read_hmx(const std::filesystem::path& path);
void write_hmx(const std::filesystem::path& path, const MotionSequence& seq);

/// Whole-file helpers shared by the readers in this library.
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

} // namespace handkit
