#pragma once
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace bilat::pgm {

// Row-major 16-bit grayscale raster (maxval 65535).
struct Image16 {
    int nx = 0;
    int ny = 0;
    std::vector<std::uint16_t> pixels;

    std::uint16_t at(int ix, int iy) const { return pixels[std::size_t(iy) * nx + ix]; }
};

// Serialize as binary P5 (big-endian two-byte samples) or plain-text P2.
// Both forms carry no comments or trailing content, so identical images
// encode to identical bytes.
std::string encode(const Image16& image, bool ascii);

// Accepts P2 and P5 with any maxval up to 65535 and `#` comments in the
// header. Throws ValidationError on malformed input.
Image16 decode(std::string_view bytes);

// Linear map of a sample field onto the full 16-bit range; the input min maps
// to 0 and the max to 65535 (a constant field maps to all zeros). The applied
// bounds are reported so callers can record the physical scale alongside.
Image16 quantize(const std::vector<double>& values, int nx, int ny, double& lo_out,
                 double& hi_out);

} // namespace bilat::pgm
