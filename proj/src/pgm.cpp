#include "bilat/pgm.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>

#include "bilat/errors.hpp"

namespace bilat::pgm {

namespace {

void validate_shape(const Image16& image) {
    if (image.nx <= 0 || image.ny <= 0)
        throw ValidationError("pgm: image dimensions must be positive");
    if (image.pixels.size() != std::size_t(image.nx) * std::size_t(image.ny))
        throw ValidationError("pgm: pixel count does not match the dimensions");
}

// Whitespace/comment-aware token scanner for the PGM header.
struct Scanner {
    std::string_view bytes;
    std::size_t pos = 0;

    void skip_separators() {
        while (pos < bytes.size()) {
            const char c = bytes[pos];
            if (c == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                ++pos;
            } else {
                break;
            }
        }
    }

    long next_number() {
        skip_separators();
        if (pos >= bytes.size() || !std::isdigit(static_cast<unsigned char>(bytes[pos])))
            throw ValidationError("pgm: malformed header");
        long value = 0;
        while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
            value = value * 10 + (bytes[pos] - '0');
            if (value > 1000000000L) throw ValidationError("pgm: header number out of range");
            ++pos;
        }
        return value;
    }
};

} // namespace

std::string encode(const Image16& image, bool ascii) {
    validate_shape(image);
    char header[64];
    std::snprintf(header, sizeof header, "%s\n%d %d\n65535\n", ascii ? "P2" : "P5", image.nx,
                  image.ny);
    std::string out = header;
    if (ascii) {
        char buf[8];
        for (int iy = 0; iy < image.ny; ++iy) {
            for (int ix = 0; ix < image.nx; ++ix) {
                std::snprintf(buf, sizeof buf, "%u", unsigned(image.at(ix, iy)));
                out += buf;
                out += ix + 1 == image.nx ? '\n' : ' ';
            }
        }
    } else {
        out.reserve(out.size() + image.pixels.size() * 2);
        for (const std::uint16_t p : image.pixels) {
            out += char(p >> 8);
            out += char(p & 0xff);
        }
    }
    return out;
}

Image16 decode(std::string_view bytes) {
    if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '2' && bytes[1] != '5'))
        throw ValidationError("pgm: not a P2/P5 stream");
    const bool ascii = bytes[1] == '2';
    Scanner scan{bytes, 2};
    Image16 image;
    image.nx = int(scan.next_number());
    image.ny = int(scan.next_number());
    const long maxval = scan.next_number();
    if (image.nx <= 0 || image.ny <= 0)
        throw ValidationError("pgm: image dimensions must be positive");
    if (maxval <= 0 || maxval > 65535)
        throw ValidationError("pgm: unsupported maxval");
    const std::size_t count = std::size_t(image.nx) * std::size_t(image.ny);
    image.pixels.reserve(count);
    if (ascii) {
        for (std::size_t i = 0; i < count; ++i) {
            const long v = scan.next_number();
            if (v > maxval) throw ValidationError("pgm: sample exceeds maxval");
            image.pixels.push_back(std::uint16_t(v));
        }
    } else {
        // exactly one whitespace byte separates the header from the raster
        if (scan.pos >= bytes.size() ||
            !std::isspace(static_cast<unsigned char>(bytes[scan.pos])))
            throw ValidationError("pgm: malformed header");
        std::size_t pos = scan.pos;  // header ended right before this byte
        ++pos;
        const int stride = maxval > 255 ? 2 : 1;
        if (bytes.size() - pos < count * std::size_t(stride))
            throw ValidationError("pgm: truncated raster");
        for (std::size_t i = 0; i < count; ++i) {
            std::uint16_t v;
            if (stride == 2) {
                v = std::uint16_t((std::uint8_t(bytes[pos]) << 8) | std::uint8_t(bytes[pos + 1]));
                pos += 2;
            } else {
                v = std::uint8_t(bytes[pos]);
                ++pos;
            }
            if (v > maxval) throw ValidationError("pgm: sample exceeds maxval");
            image.pixels.push_back(v);
        }
    }
    return image;
}

Image16 quantize(const std::vector<double>& values, int nx, int ny, double& lo_out,
                 double& hi_out) {
    if (nx <= 0 || ny <= 0 || values.size() != std::size_t(nx) * std::size_t(ny))
        throw ValidationError("pgm: sample count does not match the dimensions");
    double lo = values[0], hi = values[0];
    for (const double v : values) {
        if (!std::isfinite(v)) throw ValidationError("pgm: non-finite sample");
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    lo_out = lo;
    hi_out = hi;
    Image16 image;
    image.nx = nx;
    image.ny = ny;
    image.pixels.resize(values.size());
    const double span = hi - lo;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double t = span > 0.0 ? (values[i] - lo) / span : 0.0;
        image.pixels[i] = std::uint16_t(std::lround(t * 65535.0));
    }
    return image;
}

} // namespace bilat::pgm
