#pragma once

namespace hyformer {
inline constexpr const char* kToolkitVersion = "0.1.0";
}
