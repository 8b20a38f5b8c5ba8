#pragma once

namespace varqqa {

inline constexpr const char* kVersion = "0.1.0";

} // namespace varqqa
