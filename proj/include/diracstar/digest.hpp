#pragma once

#include <string>

namespace diracstar {

// lowercase hex SHA-256
std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::string& path);

}  // namespace diracstar
