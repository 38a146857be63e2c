#pragma once

namespace axisfdr {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace axisfdr
