#include "trackmine/embedding_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "trackmine/error.hpp"

namespace trackmine {
namespace {

template <typename T>
void put_le(std::string& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

template <typename T>
T get_le(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw Error(ErrorKind::Parse, "truncated embedding file");
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    v |= static_cast<T>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  }
  pos += sizeof(T);
  return v;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(line);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& s) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw Error(ErrorKind::Parse, "not a number: '" + s + "'");
  }
  if (used != s.size()) throw Error(ErrorKind::Parse, "not a number: '" + s + "'");
  return v;
}

}  // namespace

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

EmbeddingSet parse_embeddings_binary(const std::string& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kEmbeddingMagic, 4) != 0) {
    throw Error(ErrorKind::Parse, "missing embedding magic");
  }
  std::size_t pos = 4;
  EmbeddingSet set;
  set.dim = get_le<std::uint32_t>(bytes, pos);
  const auto count = get_le<std::uint64_t>(bytes, pos);
  set.records.reserve(static_cast<std::size_t>(count));
  for (std::uint64_t r = 0; r < count; ++r) {
    const auto len = get_le<std::uint32_t>(bytes, pos);
    if (pos + len > bytes.size()) throw Error(ErrorKind::Parse, "truncated embedding key");
    EmbeddingRecord rec;
    rec.key = bytes.substr(pos, len);
    pos += len;
    rec.vector.resize(set.dim);
    for (std::size_t k = 0; k < set.dim; ++k) {
      const float f = std::bit_cast<float>(get_le<std::uint32_t>(bytes, pos));
      if (!std::isfinite(f)) throw Error(ErrorKind::Parse, "non-finite value in record " + rec.key);
      rec.vector[k] = f;
    }
    set.records.push_back(std::move(rec));
  }
  if (pos != bytes.size()) throw Error(ErrorKind::Parse, "trailing bytes in embedding file");
  return set;
}

EmbeddingSet parse_embeddings_csv(const std::string& text) {
  EmbeddingSet set;
  std::istringstream in(text);
  std::string line;
  bool first = true;
  bool have_dim = false;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    auto cells = split(line, ',');
    if (first && !cells.empty() && trim(cells[0]) == "id") {
      first = false;
      continue;
    }
    first = false;
    if (cells.size() < 2) throw Error(ErrorKind::Parse, "embedding CSV row without values");
    EmbeddingRecord rec;
    rec.key = trim(cells[0]);
    for (std::size_t k = 1; k < cells.size(); ++k) {
      const double v = parse_double(trim(cells[k]));
      if (!std::isfinite(v)) throw Error(ErrorKind::Parse, "non-finite value in record " + rec.key);
      rec.vector.push_back(v);
    }
    if (!have_dim) {
      set.dim = rec.vector.size();
      have_dim = true;
    } else if (rec.vector.size() != set.dim) {
      throw Error(ErrorKind::Parse, "inconsistent dimension in record " + rec.key);
    }
    set.records.push_back(std::move(rec));
  }
  return set;
}

EmbeddingSet read_embeddings(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  if (bytes.size() >= 4 && std::memcmp(bytes.data(), kEmbeddingMagic, 4) == 0) {
    return parse_embeddings_binary(bytes);
  }
  return parse_embeddings_csv(bytes);
}

std::string encode_embeddings_binary(const EmbeddingSet& set) {
  std::string out(kEmbeddingMagic, 4);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(set.dim));
  put_le<std::uint64_t>(out, set.records.size());
  for (const auto& r : set.records) {
    if (r.vector.size() != set.dim) {
      throw Error(ErrorKind::LengthMismatch, "record " + r.key + " has the wrong dimension");
    }
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(r.key.size()));
    out += r.key;
    for (double v : r.vector) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  return out;
}

std::string encode_embeddings_csv(const EmbeddingSet& set) {
  std::ostringstream os;
  os.precision(17);
  for (const auto& r : set.records) {
    os << r.key;
    for (double v : r.vector) os << ',' << v;
    os << '\n';
  }
  return os.str();
}

std::vector<std::pair<std::string, std::string>> read_labels_csv(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::vector<std::pair<std::string, std::string>> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    auto cells = split(line, ',');
    if (first && !cells.empty() && trim(cells[0]) == "id") {
      first = false;
      continue;
    }
    first = false;
    if (cells.size() < 2) throw Error(ErrorKind::Parse, path.string() + ": label row needs id,label");
    rows.emplace_back(trim(cells[0]), trim(cells[1]));
  }
  return rows;
}

std::string encode_labels_csv(const std::vector<std::pair<std::string, std::string>>& rows) {
  std::string out = "id,label\n";
  for (const auto& [id, label] : rows) out += id + "," + label + "\n";
  return out;
}

nlohmann::json to_json(const EmbeddingModel& model) {
  const bool affine = model.architecture() == Architecture::Affine;
  const auto p = model.parameters();
  return nlohmann::json{{"arch", affine ? "affine" : "hidden_tanh"},
                        {"input_dim", model.input_dim()},
                        {"hidden_dim", model.hidden_dim()},
                        {"output_dim", model.output_dim()},
                        {"params", std::vector<double>(p.begin(), p.end())}};
}

EmbeddingModel model_from_json(const nlohmann::json& j) {
  try {
    const std::string arch = j.at("arch").get<std::string>();
    const auto in = j.at("input_dim").get<std::size_t>();
    const auto out = j.at("output_dim").get<std::size_t>();
    EmbeddingModel m;
    if (arch == "affine") {
      m = EmbeddingModel::affine(in, out);
    } else if (arch == "hidden_tanh") {
      m = EmbeddingModel::hidden_tanh(in, j.at("hidden_dim").get<std::size_t>(), out);
    } else {
      throw Error(ErrorKind::Parse, "unknown model architecture '" + arch + "'");
    }
    const auto params = j.at("params").get<std::vector<double>>();
    if (params.size() != m.parameters().size()) {
      throw Error(ErrorKind::Parse, "model parameter count does not match its architecture");
    }
    std::copy(params.begin(), params.end(), m.parameters().begin());
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("model file: ") + e.what());
  }
}

}  // namespace trackmine
