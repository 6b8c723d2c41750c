#include "slr/raster.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>

namespace slr {

GrayImage::GrayImage(int width, int height, std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
    if (width_ < 1 || height_ < 1)
        throw contract_error("image dimensions must be positive, got " +
                             std::to_string(width_) + "x" + std::to_string(height_));
    const std::size_t expect = static_cast<std::size_t>(width_) * height_;
    if (pixels_.size() != expect)
        throw contract_error("pixel count " + std::to_string(pixels_.size()) +
                             " does not match " + std::to_string(width_) + "x" +
                             std::to_string(height_));
}

GrayImage GrayImage::filled(int width, int height, std::uint8_t value) {
    return GrayImage(width, height,
                     std::vector<std::uint8_t>(static_cast<std::size_t>(width) * height, value));
}

namespace {

// Cursor over the PGM header. Tracks the byte offset for error reporting.
struct PgmCursor {
    std::span<const std::uint8_t> bytes;
    std::size_t pos = 0;

    bool eof() const { return pos >= bytes.size(); }
    std::uint8_t peek() const { return bytes[pos]; }

    static bool is_space(std::uint8_t c) {
        return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\v' || c == '\f';
    }

    // Whitespace and '#'-to-end-of-line comments.
    void skip_separators() {
        while (!eof()) {
            if (is_space(peek())) {
                ++pos;
            } else if (peek() == '#') {
                while (!eof() && peek() != '\n') ++pos;
            } else {
                break;
            }
        }
    }

    long parse_int(const char* what) {
        skip_separators();
        if (eof()) throw pgm_error(std::string("missing ") + what, pos);
        if (peek() < '0' || peek() > '9')
            throw pgm_error(std::string("expected digit for ") + what, pos);
        long value = 0;
        while (!eof() && peek() >= '0' && peek() <= '9') {
            value = value * 10 + (peek() - '0');
            if (value > 1'000'000'000L)
                throw pgm_error(std::string(what) + " out of range", pos);
            ++pos;
        }
        return value;
    }
};

}  // namespace

GrayImage load_pgm(std::span<const std::uint8_t> bytes) {
    PgmCursor cur{bytes};
    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') {
        std::string magic;
        for (std::size_t i = 0; i < bytes.size() && i < 2; ++i)
            magic.push_back(static_cast<char>(bytes[i]));
        throw pgm_error("unsupported magic \"" + magic + "\" (binary PGM requires P5)", 0);
    }
    cur.pos = 2;

    const std::size_t dim_at = cur.pos;
    const long width = cur.parse_int("width");
    const long height = cur.parse_int("height");
    if (width == 0 || height == 0)
        throw pgm_error("zero dimension " + std::to_string(width) + "x" + std::to_string(height),
                        dim_at);
    const std::size_t maxval_at = cur.pos;
    const long maxval = cur.parse_int("maxval");
    if (maxval > 255)
        throw pgm_error("maxval " + std::to_string(maxval) + " exceeds 255 (8-bit only)",
                        maxval_at);
    if (maxval < 1) throw pgm_error("maxval must be at least 1", maxval_at);

    // Exactly one whitespace byte separates the header from the payload.
    if (cur.eof() || !PgmCursor::is_space(cur.peek()))
        throw pgm_error("missing whitespace before pixel payload", cur.pos);
    ++cur.pos;

    const std::size_t need = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    if (bytes.size() - cur.pos < need)
        throw pgm_error("truncated pixel payload: need " + std::to_string(need) + " bytes, have " +
                            std::to_string(bytes.size() - cur.pos),
                        cur.pos);

    std::vector<std::uint8_t> pixels(bytes.begin() + cur.pos, bytes.begin() + cur.pos + need);
    return GrayImage(static_cast<int>(width), static_cast<int>(height), std::move(pixels));
}

std::vector<std::uint8_t> to_pgm_bytes(const GrayImage& img) {
    char header[64];
    const int n = std::snprintf(header, sizeof header, "P5\n%d %d\n255\n", img.width(), img.height());
    std::vector<std::uint8_t> out(header, header + n);
    out.insert(out.end(), img.pixels().begin(), img.pixels().end());
    return out;
}

GrayImage load_pgm_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::ios_base::failure("cannot open " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return load_pgm(bytes);
}

void save_pgm_file(const GrayImage& img, const std::string& path) {
    const auto bytes = to_pgm_bytes(img);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::ios_base::failure("cannot open " + path + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::ios_base::failure("short write to " + path);
}

}  // namespace slr
