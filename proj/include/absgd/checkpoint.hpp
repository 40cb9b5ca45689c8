#pragma once

#include <string>

#include "absgd/param_vector.hpp"

namespace absgd {

// Binary checkpoint: 16-byte header (8-byte magic "ABSGDCP1", u32 version,
// u32 reserved), segment table, then the values as little-endian IEEE-754
// doubles.
void save_checkpoint(const std::string& path, const ParamVector& params);
ParamVector load_checkpoint(const std::string& path);

}  // namespace absgd
