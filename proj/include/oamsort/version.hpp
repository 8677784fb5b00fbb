#pragma once

namespace oamsort {

inline constexpr const char* version = "0.1.0";

}  // namespace oamsort
