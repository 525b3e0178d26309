#include "trackmine/atomic_file.hpp"

#include <fstream>

#include <unistd.h>

#include "trackmine/error.hpp"

namespace trackmine {

namespace {

std::filesystem::path temp_sibling(const std::filesystem::path& path) {
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  return tmp;
}

void write_plain(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.close();
  if (!out) throw Error(ErrorKind::Io, "short write to " + path.string());
}

}  // namespace

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  const auto tmp = temp_sibling(path);
  try {
    write_plain(tmp, bytes);
    std::filesystem::rename(tmp, path);
  } catch (const std::filesystem::filesystem_error& e) {
    std::error_code ec;
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorKind::Io, e.what());
  } catch (...) {
    std::error_code ec;
    std::filesystem::remove(tmp, ec);
    throw;
  }
}

StagedOutputs::~StagedOutputs() {
  for (const auto& [tmp, final_path] : staged_) {
    std::error_code ec;
    std::filesystem::remove(tmp, ec);
  }
}

void StagedOutputs::stage(const std::filesystem::path& path, std::string_view bytes) {
  const auto tmp = temp_sibling(path);
  staged_.emplace_back(tmp, path);
  try {
    write_plain(tmp, bytes);
  } catch (const std::filesystem::filesystem_error& e) {
    throw Error(ErrorKind::Io, e.what());
  }
}

void StagedOutputs::commit() {
  try {
    for (const auto& [tmp, final_path] : staged_) std::filesystem::rename(tmp, final_path);
  } catch (const std::filesystem::filesystem_error& e) {
    throw Error(ErrorKind::Io, e.what());
  }
  staged_.clear();
}

}  // namespace trackmine
