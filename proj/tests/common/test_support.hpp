#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "trajcot/civil_time.hpp"
#include "trajcot/trajectory.hpp"

namespace trajcot::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::mt19937_64 salt(std::random_device{}());
    path_ = std::filesystem::temp_directory_path() /
            ("trajcot-" + tag + "-" + std::to_string(salt()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

inline Visit make_visit(const std::string& agent, const std::string& start, const std::string& end,
                        const std::string& name, std::vector<std::string> tags,
                        const std::string& poi_id = "p1") {
  Visit v;
  v.stay.agent_id = agent;
  v.stay.start_ts = parse_rfc3339(start);
  v.stay.end_ts = parse_rfc3339(end);
  v.stay.poi_id = poi_id;
  v.name = name;
  v.activity_types = std::move(tags);
  v.duration_s = (v.stay.end_ts - v.stay.start_ts).count();
  return v;
}

}  // namespace trajcot::testing
