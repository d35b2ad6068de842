#pragma once

namespace hbmeta {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace hbmeta
