#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace trackmine {

// Writes to a sibling temporary file, then renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

// Collects outputs in temporaries and publishes them together on commit(). Anything
// not committed is removed on destruction, so a failing run leaves no partial files.
class StagedOutputs {
 public:
  StagedOutputs() = default;
  StagedOutputs(const StagedOutputs&) = delete;
  StagedOutputs& operator=(const StagedOutputs&) = delete;
  ~StagedOutputs();

  void stage(const std::filesystem::path& path, std::string_view bytes);
  void commit();

 private:
  std::vector<std::pair<std::filesystem::path, std::filesystem::path>> staged_;  // (tmp, final)
};

}  // namespace trackmine
