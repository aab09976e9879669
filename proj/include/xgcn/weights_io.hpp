#pragma once

#include <string>

#include "xgcn/model.hpp"

namespace xgcn {

// Weight file: magic "XGW1", u32 schema version, one record per named tensor
// (u32 name length, name bytes, u32 rank, u32 dims..., little-endian f64
// payload), trailing CRC32 over everything after the magic.
void save_weights(GcnModel& model, const std::string& path);

// Loads into an already-constructed model; tensor names and shapes must match
// exactly or the load fails naming the offending tensor.
void load_weights(GcnModel& model, const std::string& path);

}  // namespace xgcn
