#pragma once

#include <filesystem>

#include "latres/common.hpp"

namespace latres {

// Mono 16 kHz 16-bit PCM. Samples are clipped to [-1, 1] on write and
// scaled by 1/32768 on read.
void write_wav(const std::filesystem::path& path, std::span<const double> samples);
Vec read_wav(const std::filesystem::path& path);

}  // namespace latres
