#pragma once

namespace droplet {

inline constexpr const char* kVersion = "0.1.0";

} // namespace droplet
