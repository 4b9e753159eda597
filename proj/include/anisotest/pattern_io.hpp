#pragma once

#include <istream>
#include <string>

#include "anisotest/geometry.hpp"

namespace anisotest {

/// Reads an `x,y` CSV (header optional) into a pattern on `window`.
/// Errors name the offending line; points outside the window and duplicates are rejected.
PointPattern ingest_pattern_csv(const std::string& path, const Window& window);
PointPattern parse_pattern_csv(std::istream& in, const Window& window, const std::string& source = "<input>");

void write_pattern_csv(const PointPattern& pat, const std::string& path);
std::string format_pattern_csv(const PointPattern& pat);

/// Shortest decimal text that reads back to the same double.
std::string format_number(double v);
/// Parses a whole string as a double; throws on trailing junk.
double parse_number(const std::string& s);

/// "xmin,xmax,ymin,ymax".
Window parse_window(const std::string& s);

}  // namespace anisotest
