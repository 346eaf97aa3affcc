#include "metaml/metamodel/checkpoint.hpp"

#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <sstream>

#include "metaml/errors.hpp"

namespace metaml {

namespace fs = std::filesystem;

std::string canonical_dump(const Json& j) { return j.dump(); }

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw IoError("SHA-256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[md[i] >> 4]);
    out.push_back(kHex[md[i] & 0xF]);
  }
  return out;
}

Json checkpoint_document(const MetaModel& mm) {
  Json body = mm.to_json();
  body["schema_version"] = kSchemaVersion;
  const auto digest = sha256_hex(canonical_dump(body));
  body["digest"] = digest;
  return body;
}

std::string checkpoint_bytes(const MetaModel& mm) { return canonical_dump(checkpoint_document(mm)) + "\n"; }

MetaModel parse_checkpoint(std::string_view bytes) {
  Json doc;
  try {
    doc = Json::parse(bytes);
  } catch (const Json::exception& e) {
    throw CorruptCheckpoint(std::string("not a JSON document: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("digest") || !doc.contains("schema_version")) {
    throw CorruptCheckpoint("missing digest or schema_version");
  }
  if (!doc["schema_version"].is_number_integer() || doc["schema_version"].get<int>() != kSchemaVersion) {
    throw CorruptCheckpoint("unsupported schema version");
  }
  if (!doc["digest"].is_string()) throw CorruptCheckpoint("digest is not a string");
  const auto stored = doc["digest"].get<std::string>();
  Json body = doc;
  body.erase("digest");
  if (sha256_hex(canonical_dump(body)) != stored) throw CorruptCheckpoint("digest mismatch");

  // Same value, different bytes: reject so that every byte is covered.
  std::string_view trimmed = bytes;
  if (!trimmed.empty() && trimmed.back() == '\n') trimmed.remove_suffix(1);
  if (canonical_dump(doc) != trimmed) throw CorruptCheckpoint("non-canonical encoding");

  try {
    return MetaModel::from_json(body);
  } catch (const Json::exception& e) {
    throw CorruptCheckpoint(std::string("schema error: ") + e.what());
  } catch (const Error& e) {
    throw CorruptCheckpoint(std::string("invalid content: ") + e.what());
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failed for '" + path.string() + "'");
  return ss.str();
}

void write_file(const fs::path& path, std::string_view contents) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

void checkpoint_save(const MetaModel& mm, const fs::path& path) { write_file(path, checkpoint_bytes(mm)); }

MetaModel checkpoint_load(const fs::path& path) { return parse_checkpoint(read_file(path)); }

std::size_t persist_payloads(const MetaModel& mm, const fs::path& storage_root) {
  std::size_t written = 0;
  for (const auto& r : mm.space().records()) {
    const auto dir = storage_root / r.id;
    if (fs::exists(dir / "metrics.json")) continue;
    Json metrics = Json::object();
    for (const auto& [k, v] : r.metrics) metrics[k] = v;
    write_file(dir / "payload.json", r.payload.dump(2) + "\n");
    write_file(dir / "metrics.json", metrics.dump(2) + "\n");
    ++written;
  }
  return written;
}

}  // namespace metaml
