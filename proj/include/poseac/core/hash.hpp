#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace poseac {

std::string sha256_hex(const void* data, size_t len);
std::string sha256_hex(const std::string& s);
std::string sha256_hex(const std::vector<float>& v);
std::string sha256_file(const std::filesystem::path& path);

// Digest of a directory: SHA-256 over the sorted (relative path, file hash)
// pairs of every regular file under root.
std::string sha256_tree(const std::filesystem::path& root);

}  // namespace poseac
