#pragma once

#include "pectoral/raster.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>

namespace pectoral {

enum class ImageIoErrorKind {
    Open,              // cannot open / read / write the file
    UnsupportedFormat, // unknown magic, colour data, unsupported PNG layout
    Corrupt,           // malformed header or sample data
    Truncated,         // fewer sample bytes than the header promises
    DepthTooLarge,     // maxval > 65535 or PNG depth > 16
};

const char* to_string(ImageIoErrorKind kind);

class ImageIoError : public std::runtime_error {
public:
    ImageIoError(ImageIoErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind)
    {
    }
    ImageIoErrorKind kind() const noexcept { return kind_; }

private:
    ImageIoErrorKind kind_;
};

enum class ImageFormat { PgmBinary, PgmAscii, Png };

/// Picks the output format from the file extension (.pgm/.pnm -> binary PGM, .png -> PNG).
ImageFormat format_for_path(const std::filesystem::path& path);

/// Detects the format from the magic bytes; never trusts the extension.
GrayImage read_image(const std::filesystem::path& path);

void write_image(const GrayImage& img, const std::filesystem::path& path);
void write_image(const GrayImage& img, const std::filesystem::path& path, ImageFormat format);

/// Mask written as an 8-bit image with 0 / 255.
void write_mask(const BinaryMask& mask, const std::filesystem::path& path);
/// Any non-zero pixel is foreground.
BinaryMask read_mask(const std::filesystem::path& path);

/// 8-bit RGB PNG.
void write_rgb_png(const RgbImage& img, const std::filesystem::path& path);

// In-memory codecs; the file functions are thin wrappers over these.
GrayImage decode_pgm(const std::string& bytes);
std::string encode_pgm(const GrayImage& img, bool ascii);
GrayImage decode_png(const std::string& bytes);
std::string encode_png(const GrayImage& img);

} // namespace pectoral
