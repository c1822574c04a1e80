#pragma once

namespace pbchron {

// Kept constant across runs so output files are reproducible byte-for-byte.
inline constexpr const char* kVersion = "pbchron 0.1.0";

}  // namespace pbchron
