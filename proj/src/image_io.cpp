#include "pectoral/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <csetjmp>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace pectoral {

const char* to_string(ImageIoErrorKind kind)
{
    switch (kind) {
    case ImageIoErrorKind::Open: return "open";
    case ImageIoErrorKind::UnsupportedFormat: return "unsupported-format";
    case ImageIoErrorKind::Corrupt: return "corrupt";
    case ImageIoErrorKind::Truncated: return "truncated";
    case ImageIoErrorKind::DepthTooLarge: return "depth-too-large";
    }
    return "unknown";
}

namespace {

std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ImageIoError(ImageIoErrorKind::Open, "cannot open " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad())
        throw ImageIoError(ImageIoErrorKind::Open, "read failed: " + path.string());
    return bytes;
}

void write_file(const std::filesystem::path& path, const std::string& bytes)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw ImageIoError(ImageIoErrorKind::Open, "cannot create " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw ImageIoError(ImageIoErrorKind::Open, "write failed: " + path.string());
}

// ---------------------------------------------------------------------------
// PGM

class PnmHeaderReader {
public:
    explicit PnmHeaderReader(const std::string& bytes) : bytes_(bytes) {}

    // Skips whitespace and '#' comments, then parses one unsigned decimal.
    unsigned long next_number(const char* field)
    {
        skip_separators();
        if (pos_ >= bytes_.size())
            throw ImageIoError(ImageIoErrorKind::Corrupt, std::string("PGM header ends before ") + field);
        if (!std::isdigit(static_cast<unsigned char>(bytes_[pos_])))
            throw ImageIoError(ImageIoErrorKind::Corrupt, std::string("PGM header: bad ") + field);
        unsigned long v = 0;
        while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
            v = v * 10 + static_cast<unsigned long>(bytes_[pos_] - '0');
            if (v > 0xFFFFFFFFul)
                throw ImageIoError(ImageIoErrorKind::Corrupt, std::string("PGM header: ") + field + " overflows");
            ++pos_;
        }
        return v;
    }

    // After maxval exactly one whitespace byte separates header and raster.
    void consume_single_whitespace()
    {
        if (pos_ >= bytes_.size() || !std::isspace(static_cast<unsigned char>(bytes_[pos_])))
            throw ImageIoError(ImageIoErrorKind::Corrupt, "PGM header: missing separator before raster");
        ++pos_;
    }

    std::size_t position() const noexcept { return pos_; }

private:
    void skip_separators()
    {
        while (pos_ < bytes_.size()) {
            const char c = bytes_[pos_];
            if (std::isspace(static_cast<unsigned char>(c))) {
                ++pos_;
            } else if (c == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n' && bytes_[pos_] != '\r')
                    ++pos_;
            } else {
                break;
            }
        }
    }

    const std::string& bytes_;
    std::size_t pos_ = 2;
};

} // namespace

GrayImage decode_pgm(const std::string& bytes)
{
    if (bytes.size() < 2 || bytes[0] != 'P')
        throw ImageIoError(ImageIoErrorKind::UnsupportedFormat, "not a portable anymap");
    const char kind = bytes[1];
    if (kind == '3' || kind == '6')
        throw ImageIoError(ImageIoErrorKind::UnsupportedFormat, "colour PPM input is not supported");
    if (kind != '2' && kind != '5')
        throw ImageIoError(ImageIoErrorKind::UnsupportedFormat, std::string("unsupported PNM type P") + kind);

    PnmHeaderReader header(bytes);
    const auto width = header.next_number("width");
    const auto height = header.next_number("height");
    const auto maxval = header.next_number("maxval");
    if (width == 0 || height == 0 || width > 1u << 20 || height > 1u << 20)
        throw ImageIoError(ImageIoErrorKind::Corrupt, "PGM header: implausible dimensions");
    if (maxval == 0)
        throw ImageIoError(ImageIoErrorKind::Corrupt, "PGM header: maxval must be positive");
    if (maxval > 65535)
        throw ImageIoError(ImageIoErrorKind::DepthTooLarge, "PGM maxval above 65535");

    const int depth = maxval > 255 ? 16 : 8;
    const std::size_t count = static_cast<std::size_t>(width) * height;
    std::vector<std::uint16_t> pixels(count);

    if (kind == '5') {
        header.consume_single_whitespace();
        const std::size_t sample_bytes = depth == 16 ? 2 : 1;
        const std::size_t start = header.position();
        if (bytes.size() - start < count * sample_bytes)
            throw ImageIoError(ImageIoErrorKind::Truncated, "PGM raster shorter than header promises");
        const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + start);
        for (std::size_t i = 0; i < count; ++i) {
            // 16-bit samples are big-endian.
            const unsigned v = depth == 16 ? (unsigned(p[2 * i]) << 8) | p[2 * i + 1] : p[i];
            if (v > maxval)
                throw ImageIoError(ImageIoErrorKind::Corrupt, "PGM sample exceeds maxval");
            pixels[i] = static_cast<std::uint16_t>(v);
        }
    } else {
        for (std::size_t i = 0; i < count; ++i) {
            unsigned long v = 0;
            try {
                v = header.next_number("sample");
            } catch (const ImageIoError& e) {
                if (header.position() >= bytes.size())
                    throw ImageIoError(ImageIoErrorKind::Truncated, "PGM raster shorter than header promises");
                throw;
            }
            if (v > maxval)
                throw ImageIoError(ImageIoErrorKind::Corrupt, "PGM sample exceeds maxval");
            pixels[i] = static_cast<std::uint16_t>(v);
        }
    }
    return GrayImage(static_cast<int>(width), static_cast<int>(height), depth, std::move(pixels));
}

std::string encode_pgm(const GrayImage& img, bool ascii)
{
    std::ostringstream out;
    out << (ascii ? "P2" : "P5") << '\n'
        << img.width() << ' ' << img.height() << '\n'
        << img.max_value() << '\n';
    if (ascii) {
        int column = 0;
        for (auto v : img.pixels()) {
            out << v;
            if (++column == img.width()) {
                out << '\n';
                column = 0;
            } else {
                out << ' ';
            }
        }
        return out.str();
    }
    std::string s = out.str();
    const std::size_t header = s.size();
    const std::size_t sample_bytes = img.bit_depth() == 16 ? 2 : 1;
    s.resize(header + img.size() * sample_bytes);
    auto* p = reinterpret_cast<unsigned char*>(s.data() + header);
    for (std::size_t i = 0; i < img.size(); ++i) {
        const auto v = img[i];
        if (sample_bytes == 2) {
            p[2 * i] = static_cast<unsigned char>(v >> 8);
            p[2 * i + 1] = static_cast<unsigned char>(v & 0xFF);
        } else {
            p[i] = static_cast<unsigned char>(v);
        }
    }
    return s;
}

// ---------------------------------------------------------------------------
// PNG
//
// libpng reports errors through longjmp. Every frame between setjmp and the
// error callback holds only trivially destructible state; allocations owned
// by C++ objects are made before setjmp is armed.

namespace {

struct PngErrorState {
    std::jmp_buf jump;
    char message[256] = {};
    bool truncated = false;
};

void png_error_callback(png_structp png, png_const_charp msg)
{
    auto* state = static_cast<PngErrorState*>(png_get_error_ptr(png));
    std::snprintf(state->message, sizeof(state->message), "%s", msg ? msg : "libpng error");
    std::longjmp(state->jump, 1);
}

void png_warning_callback(png_structp, png_const_charp) {}

struct PngReadSource {
    const unsigned char* data;
    std::size_t size;
    std::size_t pos;
};

void png_read_callback(png_structp png, png_bytep out, png_size_t length)
{
    auto* src = static_cast<PngReadSource*>(png_get_io_ptr(png));
    if (src->size - src->pos < length) {
        static_cast<PngErrorState*>(png_get_error_ptr(png))->truncated = true;
        png_error(png, "unexpected end of PNG data");
    }
    std::memcpy(out, src->data + src->pos, length);
    src->pos += length;
}

struct PngWriteSink {
    std::string* bytes;
};

void png_write_callback(png_structp png, png_bytep data, png_size_t length)
{
    auto* sink = static_cast<PngWriteSink*>(png_get_io_ptr(png));
    sink->bytes->append(reinterpret_cast<const char*>(data), length);
}

void png_flush_callback(png_structp) {}

struct PngHeaderInfo {
    png_uint_32 width = 0;
    png_uint_32 height = 0;
    int bit_depth = 0;
    int color_type = 0;
    int interlace = 0;
};

// Returns 0 on success, 1 if libpng raised an error.
int png_read_header(png_structp png, png_infop info, PngErrorState& err, PngHeaderInfo& hdr)
{
    if (setjmp(err.jump))
        return 1;
    png_read_info(png, info);
    png_get_IHDR(png, info, &hdr.width, &hdr.height, &hdr.bit_depth, &hdr.color_type, &hdr.interlace,
                 nullptr, nullptr);
    return 0;
}

int png_read_rows(png_structp png, png_infop info, PngErrorState& err, png_bytepp rows)
{
    if (setjmp(err.jump))
        return 1;
    png_read_image(png, rows);
    png_read_end(png, info);
    return 0;
}

int png_write_all(png_structp png, png_infop info, PngErrorState& err, png_uint_32 width,
                  png_uint_32 height, int bit_depth, int color_type, png_bytepp rows)
{
    if (setjmp(err.jump))
        return 1;
    png_set_IHDR(png, info, width, height, bit_depth, color_type, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, rows);
    png_write_end(png, info);
    return 0;
}

class PngReadHandle {
public:
    explicit PngReadHandle(PngErrorState& err)
    {
        png_ = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, png_error_callback, png_warning_callback);
        if (png_)
            info_ = png_create_info_struct(png_);
        if (!png_ || !info_)
            throw std::bad_alloc();
    }
    ~PngReadHandle() { png_destroy_read_struct(&png_, &info_, nullptr); }
    PngReadHandle(const PngReadHandle&) = delete;
    PngReadHandle& operator=(const PngReadHandle&) = delete;

    png_structp png() const { return png_; }
    png_infop info() const { return info_; }

private:
    png_structp png_ = nullptr;
    png_infop info_ = nullptr;
};

class PngWriteHandle {
public:
    explicit PngWriteHandle(PngErrorState& err)
    {
        png_ = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, png_error_callback, png_warning_callback);
        if (png_)
            info_ = png_create_info_struct(png_);
        if (!png_ || !info_)
            throw std::bad_alloc();
    }
    ~PngWriteHandle() { png_destroy_write_struct(&png_, &info_); }
    PngWriteHandle(const PngWriteHandle&) = delete;
    PngWriteHandle& operator=(const PngWriteHandle&) = delete;

    png_structp png() const { return png_; }
    png_infop info() const { return info_; }

private:
    png_structp png_ = nullptr;
    png_infop info_ = nullptr;
};

std::string encode_png_rows(png_uint_32 width, png_uint_32 height, int bit_depth, int color_type,
                            std::vector<png_bytep>& rows)
{
    std::string bytes;
    PngErrorState err;
    PngWriteHandle handle(err);
    PngWriteSink sink{&bytes};
    png_set_write_fn(handle.png(), &sink, png_write_callback, png_flush_callback);
    if (png_write_all(handle.png(), handle.info(), err, width, height, bit_depth, color_type, rows.data()))
        throw ImageIoError(ImageIoErrorKind::Open, std::string("PNG encode failed: ") + err.message);
    return bytes;
}

} // namespace

GrayImage decode_png(const std::string& bytes)
{
    if (bytes.size() < 8 || png_sig_cmp(reinterpret_cast<png_const_bytep>(bytes.data()), 0, 8) != 0)
        throw ImageIoError(ImageIoErrorKind::UnsupportedFormat, "not a PNG stream");

    PngErrorState err;
    PngReadHandle handle(err);
    PngReadSource src{reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size(), 0};
    png_set_read_fn(handle.png(), &src, png_read_callback);

    PngHeaderInfo hdr;
    if (png_read_header(handle.png(), handle.info(), err, hdr))
        throw ImageIoError(err.truncated ? ImageIoErrorKind::Truncated : ImageIoErrorKind::Corrupt,
                           std::string("PNG header: ") + err.message);

    if (hdr.color_type != PNG_COLOR_TYPE_GRAY)
        throw ImageIoError(ImageIoErrorKind::UnsupportedFormat, "only single-channel grayscale PNG is supported");
    if (hdr.bit_depth > 16)
        throw ImageIoError(ImageIoErrorKind::DepthTooLarge, "PNG depth above 16 bits");
    if (hdr.bit_depth != 8 && hdr.bit_depth != 16)
        throw ImageIoError(ImageIoErrorKind::UnsupportedFormat, "only 8- and 16-bit grayscale PNG is supported");
    if (hdr.width == 0 || hdr.height == 0 || hdr.width > 1u << 20 || hdr.height > 1u << 20)
        throw ImageIoError(ImageIoErrorKind::Corrupt, "PNG: implausible dimensions");

    if (hdr.interlace != PNG_INTERLACE_NONE)
        png_set_interlace_handling(handle.png());
    png_read_update_info(handle.png(), handle.info());

    const std::size_t sample_bytes = hdr.bit_depth == 16 ? 2 : 1;
    const std::size_t stride = static_cast<std::size_t>(hdr.width) * sample_bytes;
    std::vector<unsigned char> raster(stride * hdr.height);
    std::vector<png_bytep> rows(hdr.height);
    for (png_uint_32 y = 0; y < hdr.height; ++y)
        rows[y] = raster.data() + y * stride;

    if (png_read_rows(handle.png(), handle.info(), err, rows.data()))
        throw ImageIoError(err.truncated ? ImageIoErrorKind::Truncated : ImageIoErrorKind::Corrupt,
                           std::string("PNG data: ") + err.message);

    std::vector<std::uint16_t> pixels(static_cast<std::size_t>(hdr.width) * hdr.height);
    for (std::size_t i = 0; i < pixels.size(); ++i) {
        pixels[i] = sample_bytes == 2
                        ? static_cast<std::uint16_t>((raster[2 * i] << 8) | raster[2 * i + 1])
                        : raster[i];
    }
    return GrayImage(static_cast<int>(hdr.width), static_cast<int>(hdr.height), hdr.bit_depth,
                     std::move(pixels));
}

std::string encode_png(const GrayImage& img)
{
    const std::size_t sample_bytes = img.bit_depth() == 16 ? 2 : 1;
    const std::size_t stride = static_cast<std::size_t>(img.width()) * sample_bytes;
    std::vector<unsigned char> raster(stride * img.height());
    for (std::size_t i = 0; i < img.size(); ++i) {
        if (sample_bytes == 2) {
            raster[2 * i] = static_cast<unsigned char>(img[i] >> 8);
            raster[2 * i + 1] = static_cast<unsigned char>(img[i] & 0xFF);
        } else {
            raster[i] = static_cast<unsigned char>(img[i]);
        }
    }
    std::vector<png_bytep> rows(img.height());
    for (int y = 0; y < img.height(); ++y)
        rows[y] = raster.data() + y * stride;
    return encode_png_rows(img.width(), img.height(), img.bit_depth(), PNG_COLOR_TYPE_GRAY, rows);
}

ImageFormat format_for_path(const std::filesystem::path& path)
{
    auto ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".png")
        return ImageFormat::Png;
    if (ext == ".pgm" || ext == ".pnm")
        return ImageFormat::PgmBinary;
    throw ImageIoError(ImageIoErrorKind::UnsupportedFormat, "no image format for extension '" + ext + "'");
}

GrayImage read_image(const std::filesystem::path& path)
{
    const std::string bytes = read_file(path);
    if (bytes.size() >= 8 && png_sig_cmp(reinterpret_cast<png_const_bytep>(bytes.data()), 0, 8) == 0)
        return decode_png(bytes);
    if (bytes.size() >= 2 && bytes[0] == 'P')
        return decode_pgm(bytes);
    throw ImageIoError(ImageIoErrorKind::UnsupportedFormat, "unrecognised image format: " + path.string());
}

void write_image(const GrayImage& img, const std::filesystem::path& path)
{
    write_image(img, path, format_for_path(path));
}

void write_image(const GrayImage& img, const std::filesystem::path& path, ImageFormat format)
{
    switch (format) {
    case ImageFormat::PgmBinary: write_file(path, encode_pgm(img, false)); break;
    case ImageFormat::PgmAscii: write_file(path, encode_pgm(img, true)); break;
    case ImageFormat::Png: write_file(path, encode_png(img)); break;
    }
}

void write_mask(const BinaryMask& mask, const std::filesystem::path& path)
{
    GrayImage img(mask.width(), mask.height(), 8);
    for (std::size_t i = 0; i < mask.size(); ++i)
        img[i] = mask[i] ? 255 : 0;
    write_image(img, path);
}

BinaryMask read_mask(const std::filesystem::path& path)
{
    const GrayImage img = read_image(path);
    BinaryMask mask(img.width(), img.height());
    for (std::size_t i = 0; i < img.size(); ++i)
        mask.set(i, img[i] != 0);
    return mask;
}

void write_rgb_png(const RgbImage& img, const std::filesystem::path& path)
{
    std::vector<unsigned char> raster(img.data.begin(), img.data.end());
    std::vector<png_bytep> rows(img.height);
    for (int y = 0; y < img.height; ++y)
        rows[y] = raster.data() + static_cast<std::size_t>(y) * img.width * 3;
    write_file(path, encode_png_rows(img.width, img.height, 8, PNG_COLOR_TYPE_RGB, rows));
}

} // namespace pectoral
