#include "vmic/segment_csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "vmic/error.hpp"

namespace vmic {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  return s.substr(first, s.find_last_not_of(" \t\r") - first + 1);
}

}  // namespace

bool is_speech_label(std::string_view label) {
  return !label.empty() && label != kNoiseLabel && label != "silence";
}

std::vector<LabeledSegment> read_segment_csv(std::istream& in, const std::string& source_name) {
  std::vector<LabeledSegment> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    if (line_no == 1 && body.rfind("start", 0) == 0) continue;

    auto fail = [&](const std::string& why) {
      throw InputError(source_name + ":" + std::to_string(line_no) + ": " + why);
    };
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
      const auto comma = body.find(',', start);
      fields.push_back(trim(body.substr(start, comma - start)));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (fields.size() < 3 || fields.size() > 4) fail("expected start_s,end_s,label[,score]");

    LabeledSegment seg;
    auto number = [&](std::string_view f, double& out) {
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), out);
      if (f.empty() || ec != std::errc() || ptr != f.data() + f.size() || !std::isfinite(out)) {
        fail("'" + std::string(f) + "' is not a number");
      }
    };
    number(fields[0], seg.start_s);
    number(fields[1], seg.end_s);
    if (!(seg.end_s >= seg.start_s) || seg.start_s < 0.0) fail("segment end precedes start");
    if (fields[2].empty()) fail("empty label");
    seg.label = std::string(fields[2]);
    if (fields.size() == 4 && !fields[3].empty()) {
      long long score = 0;
      auto [ptr, ec] = std::from_chars(fields[3].data(), fields[3].data() + fields[3].size(), score);
      if (ec != std::errc() || ptr != fields[3].data() + fields[3].size()) fail("bad score");
      seg.score = score;
    }
    rows.push_back(std::move(seg));
  }
  return rows;
}

std::vector<LabeledSegment> load_segment_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open segment CSV '" + path + "'");
  return read_segment_csv(in, path);
}

void write_segment_csv(std::ostream& out, std::span<const LabeledSegment> segments) {
  bool with_score = false;
  for (const auto& s : segments) with_score = with_score || s.score.has_value();
  out << (with_score ? "start_s,end_s,label,score\n" : "start_s,end_s,label\n");
  out << std::fixed << std::setprecision(3);
  for (const auto& s : segments) {
    out << s.start_s << ',' << s.end_s << ',' << s.label;
    if (with_score) {
      out << ',';
      if (s.score) out << *s.score;
    }
    out << '\n';
  }
}

}  // namespace vmic
