#pragma once

#include <string>
#include <vector>

#include "diracstar/radial_profile.hpp"

namespace diracstar {

// Column table keyed by r, as written to and read from CSV.
struct ProfileTable {
  std::vector<double> r;
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;

  const std::vector<double>& column(const std::string& name) const;
};

// 17 significant digits, shortest form that round-trips
std::string format_double(double x);

// write to a temporary sibling then rename
void atomic_write(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

std::string to_csv(const ProfileTable& t);
void save_profiles(const std::string& path, const ProfileTable& t);
// single profile with header r,value
void save_profile(const std::string& path, const RadialProfile& p);

ProfileTable parse_csv(const std::string& text);
ProfileTable load_profiles(const std::string& path);
RadialProfile load_profile(const std::string& path, Parity parity = Parity::even);

}  // namespace diracstar
