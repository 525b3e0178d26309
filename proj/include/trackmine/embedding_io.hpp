#pragma once

// Feature / embedding files.
//
// Binary layout, all integers and floats little-endian:
//   "TMEB" | dim:u32 | count:u64 | count x (key_len:u32 | key bytes | dim x f32)
// CSV layout: one record per line, `id,v0,...,v{dim-1}`, optional header row starting with "id".

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "trackmine/embedding.hpp"

namespace trackmine {

inline constexpr char kEmbeddingMagic[4] = {'T', 'M', 'E', 'B'};

struct EmbeddingSet {
  std::size_t dim = 0;
  std::vector<EmbeddingRecord> records;

  friend bool operator==(const EmbeddingSet&, const EmbeddingSet&) = default;
};

// Detects the binary magic, falls back to CSV.
EmbeddingSet read_embeddings(const std::filesystem::path& path);
EmbeddingSet parse_embeddings_binary(const std::string& bytes);
EmbeddingSet parse_embeddings_csv(const std::string& text);

// Values are rounded to f32 in the binary form.
std::string encode_embeddings_binary(const EmbeddingSet& set);
std::string encode_embeddings_csv(const EmbeddingSet& set);

// `id,label` rows; a leading "id,..." header is skipped.
std::vector<std::pair<std::string, std::string>> read_labels_csv(const std::filesystem::path& path);
std::string encode_labels_csv(const std::vector<std::pair<std::string, std::string>>& rows);

nlohmann::json to_json(const EmbeddingModel& model);
EmbeddingModel model_from_json(const nlohmann::json& j);

std::string read_file(const std::filesystem::path& path);

}  // namespace trackmine
