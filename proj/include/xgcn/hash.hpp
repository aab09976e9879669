#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace xgcn {

std::uint32_t crc32(const void* data, std::size_t len);

// SHA-1 of "blob <len>\0<bytes>", hex encoded, i.e. the id git would assign
// to the same content.
std::string git_blob_sha1(const void* data, std::size_t len);
std::string git_blob_sha1(const std::string& s);
std::string git_blob_sha1_file(const std::string& path);

}  // namespace xgcn
