#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace jdlife {

std::uint64_t fnv1a64(std::string_view data);

// Fixed shortest-roundtrip formatting so identical runs serialize identically.
std::string format_double(double v);

// Write via temp file + rename in the same directory.
void atomic_write_file(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

// Sidecar metadata carrying the producing config hash and the artifact's own
// checksum; downstream commands refuse mismatches.
void write_meta(const std::string& artifact_path, std::uint64_t config_hash,
                std::uint64_t seed, const std::string& produced_by);
void check_artifact(const std::string& artifact_path, std::uint64_t expected_config_hash);

} // namespace jdlife
