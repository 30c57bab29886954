#pragma once

#include <string>

#include "forgesr/imgcore/image.hpp"

namespace forgesr {

// 8-bit RGB PNG. Grayscale, palette, alpha, and 16-bit inputs are
// converted to 8-bit RGB on read. Writing quantizes to k/255.
Image read_png(const std::string& path);
void write_png(const Image& img, const std::string& path);

// In-memory baseline JPEG encode + decode at the given quality (1..100),
// 4:2:0 chroma subsampling.
Image jpeg_roundtrip(const Image& img, int quality);

}  // namespace forgesr
