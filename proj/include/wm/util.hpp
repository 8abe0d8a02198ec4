#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace wm {

/// SHA-256 of a byte string, hex encoded. Used for calibration/registry
/// content hashes surfaced in reports and the service health endpoint.
std::string sha256_hex(const std::string& bytes);

std::string base64_encode(const std::vector<uint8_t>& bytes);
std::vector<uint8_t> base64_decode(const std::string& text);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

/// Fixed-notation decimal formatting used everywhere a float enters a report,
/// so that rendered output is stable.
std::string format_fixed(double v, int digits);

} // namespace wm
