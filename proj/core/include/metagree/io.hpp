#pragma once

#include <filesystem>
#include <string>

namespace metagree {

// Shortest-ish round-trip decimal form (%.17g); used everywhere a double
// lands in a CSV so files are byte-stable.
std::string format_double(double v);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace metagree
