#pragma once

#include "ihcpd/cli/io.hpp"
#include "ihcpd/errors.hpp"
#include "ihcpd/oracle_sim.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace ihcpd::cli {

// "len:mu:var[:class],len:mu:var[:class],..." ; class defaults to the segment's position.
inline std::vector<oracle::SegmentSpec> parse_segments(std::string_view text) {
  std::vector<oracle::SegmentSpec> segments;
  std::size_t index = 0;
  while (!text.empty()) {
    const auto comma = text.find(',');
    const std::string_view item = trim(text.substr(0, comma));
    text = comma == std::string_view::npos ? std::string_view{} : text.substr(comma + 1);
    ++index;
    if (item.empty()) throw ConfigError("segments: empty entry " + std::to_string(index));

    std::vector<std::string_view> fields;
    std::string_view rest = item;
    while (true) {
      const auto colon = rest.find(':');
      fields.push_back(trim(rest.substr(0, colon)));
      if (colon == std::string_view::npos) break;
      rest = rest.substr(colon + 1);
    }
    if (fields.size() < 3 || fields.size() > 4) {
      throw ConfigError("segments: entry " + std::to_string(index) + " must be len:mu:var[:class]");
    }
    oracle::SegmentSpec seg;
    double len = 0.0;
    double cls = static_cast<double>(index);
    if (!parse_double(fields[0], len) || len < 1.0 || len != static_cast<double>(static_cast<std::size_t>(len)) ||
        !parse_double(fields[1], seg.mu) || !parse_double(fields[2], seg.var) || !(seg.var > 0.0) ||
        (fields.size() == 4 && (!parse_double(fields[3], cls) || cls < 1.0))) {
      throw ConfigError("segments: entry " + std::to_string(index) + " is malformed");
    }
    seg.length = static_cast<std::size_t>(len);
    seg.class_id = static_cast<std::size_t>(cls);
    segments.push_back(seg);
  }
  if (segments.empty()) throw ConfigError("segments: nothing to generate");
  return segments;
}

} // namespace ihcpd::cli
