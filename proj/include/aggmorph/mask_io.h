#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "aggmorph/silhouette.h"

namespace aggmorph {

// Portable graymap, plain (P2) or raw (P5), maxval up to 65535. A pixel is
// foreground iff value / maxval >= 0.5.
RasterMask ParsePgm(std::string_view bytes);

// Foreground as 255, background as 0, maxval 255.
std::string FormatPgm(const RasterMask& mask, bool binary);

RasterMask ReadMask(const std::filesystem::path& path);
void WriteMask(const std::filesystem::path& path, const RasterMask& mask, bool binary = true);

}  // namespace aggmorph
