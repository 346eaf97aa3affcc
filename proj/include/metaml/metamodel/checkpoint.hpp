#pragma once

#include <filesystem>
#include <string>

#include "metaml/metamodel/metamodel.hpp"

namespace metaml {

inline constexpr int kSchemaVersion = 1;

// Canonical form: sorted keys, no insignificant whitespace.
std::string canonical_dump(const Json& j);
std::string sha256_hex(std::string_view bytes);

// Full checkpoint document {schema_version, digest, cfg, log, space,
// id_counter, branch_tag}; the digest covers every other field.
Json checkpoint_document(const MetaModel& mm);
std::string checkpoint_bytes(const MetaModel& mm);  // canonical document + '\n'

// Throws CorruptCheckpoint on any mismatch (syntax, schema, digest, or
// non-canonical bytes).
MetaModel parse_checkpoint(std::string_view bytes);

void checkpoint_save(const MetaModel& mm, const std::filesystem::path& path);  // IoError
MetaModel checkpoint_load(const std::filesystem::path& path);                  // IoError, CorruptCheckpoint

// Writes `<root>/<model_id>/{payload.json,metrics.json}` for every record not
// yet on disk. Returns the number of directories written.
std::size_t persist_payloads(const MetaModel& mm, const std::filesystem::path& storage_root);

std::string read_file(const std::filesystem::path& path);                       // IoError
void write_file(const std::filesystem::path& path, std::string_view contents);  // IoError

}  // namespace metaml
