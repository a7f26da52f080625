#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "refcast/refcast.hpp"

namespace testing_support {

inline std::string data_path(const std::string& name) {
  return std::string(REFCAST_DATA_DIR) + "/" + name;
}

inline refcast::Dataset load_fixture(const std::string& name) {
  const auto path = data_path(name);
  auto result = refcast::load_dataset(path, refcast::format_from_path(path));
  if (!result.ok()) throw std::runtime_error("fixture failed validation: " + name);
  return std::move(*result.dataset);
}

inline refcast::ClassFilter load_filter(const std::string& name) {
  return refcast::Json::parse(refcast::detail::read_file(data_path("filters/" + name)))
      .get<refcast::ClassFilter>();
}

inline refcast::ReferenceClass fixture_class(const std::string& data, const std::string& filter) {
  return refcast::build_class(load_fixture(data), load_filter(filter));
}

/// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::mt19937_64 rng{std::random_device{}()};
    path_ = std::filesystem::temp_directory_path() /
            ("refcast-test-" + std::to_string(rng()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

}  // namespace testing_support
