#pragma once

#include "smaflow/grid.hpp"

#include <json.hpp>

#include <string>

namespace smaflow {

// One JSON header line, then raw little-endian float64 data, x4 fastest.
void write_field(const std::string& path, const RealField& f, const nlohmann::json& extra = {});
RealField read_field(const std::string& path, nlohmann::json* header_out = nullptr);
// reads and additionally checks the header grid against an expected one
RealField read_field(const std::string& path, const TorusGrid& expected);

}  // namespace smaflow
