#ifndef ADARAND_TEXT_IO_HPP
#define ADARAND_TEXT_IO_HPP

#include <filesystem>
#include <string>
#include <string_view>

namespace adarand {

/// Shortest locale-independent decimal representation that parses back
/// to the same double. Used for every CSV/JSON number the harness emits
/// so reruns are byte-identical.
std::string format_double(double value);

/// Locale-independent strtod; the whole token must be consumed.
bool parse_double(std::string_view token, double& out);
bool parse_int(std::string_view token, long long& out);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view content);

}  // namespace adarand

#endif
