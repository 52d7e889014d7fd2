#include "macrofp/image_io.hpp"

#include <openssl/evp.h>
#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

namespace macrofp {

namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little, "raw sample files assume a little-endian host");

// --- Plain files -----------------------------------------------------------

std::string read_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad())
        throw IoError("failed reading " + path.string());
    return std::move(ss).str();
}

void write_file_atomic(const fs::path& path, const std::string& bytes)
{
    std::random_device rd;
    const fs::path tmp = path.string() + ".tmp" + std::to_string(rd());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw IoError("cannot create " + tmp.string());
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.flush();
        if (!out)
            throw IoError("failed writing " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw IoError("cannot move " + tmp.string() + " to " + path.string());
    }
}

std::string sha256_hex(const std::string& bytes)
{
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw IoError("SHA-256 computation failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

// --- Raw samples -----------------------------------------------------------

namespace {

template <class T>
std::string raw_bytes(const Image<T>& image)
{
    std::string bytes(image.size() * sizeof(T), '\0');
    if (!image.empty())
        std::memcpy(bytes.data(), image.pixels().data(), bytes.size());
    return bytes;
}

template <class T>
Image<T> raw_image(const fs::path& path, std::size_t width, std::size_t height)
{
    const std::string bytes = read_file(path);
    if (bytes.size() != width * height * sizeof(T))
        throw IoError(path.string() + ": expected " + std::to_string(width * height * sizeof(T)) +
                      " bytes, found " + std::to_string(bytes.size()));
    Image<T> image(width, height);
    if (!bytes.empty())
        std::memcpy(image.pixels().data(), bytes.data(), bytes.size());
    return image;
}

} // namespace

void write_raw_f32(const fs::path& path, const FloatImage& image) { write_file_atomic(path, raw_bytes(image)); }
void write_raw_f64(const fs::path& path, const RealImage& image) { write_file_atomic(path, raw_bytes(image)); }

FloatImage read_raw_f32(const fs::path& path, std::size_t width, std::size_t height)
{
    return raw_image<float>(path, width, height);
}

RealImage read_raw_f64(const fs::path& path, std::size_t width, std::size_t height)
{
    return raw_image<double>(path, width, height);
}

// --- PGM -------------------------------------------------------------------

namespace {

// Reads the next header token, skipping whitespace and '#' comments.
std::string pgm_token(const std::string& data, std::size_t& pos)
{
    while (pos < data.size()) {
        if (data[pos] == '#') {
            while (pos < data.size() && data[pos] != '\n')
                ++pos;
        } else if (std::isspace(static_cast<unsigned char>(data[pos]))) {
            ++pos;
        } else {
            break;
        }
    }
    const std::size_t start = pos;
    while (pos < data.size() && !std::isspace(static_cast<unsigned char>(data[pos])) && data[pos] != '#')
        ++pos;
    return data.substr(start, pos - start);
}

std::size_t pgm_number(const std::string& data, std::size_t& pos, const fs::path& path)
{
    const std::string tok = pgm_token(data, pos);
    if (tok.empty() || !std::all_of(tok.begin(), tok.end(), [](char c) { return c >= '0' && c <= '9'; }))
        throw IoError(path.string() + ": malformed PGM header");
    return std::stoul(tok);
}

} // namespace

RealImage read_pgm(const fs::path& path)
{
    const std::string data = read_file(path);
    std::size_t pos = 0;
    if (pgm_token(data, pos) != "P5")
        throw IoError(path.string() + ": only binary (P5) PGM files are supported");
    const std::size_t width = pgm_number(data, pos, path);
    const std::size_t height = pgm_number(data, pos, path);
    const std::size_t maxval = pgm_number(data, pos, path);
    if (maxval == 0 || maxval > 65535)
        throw IoError(path.string() + ": PGM maxval out of range");
    ++pos; // single whitespace byte before the raster
    const std::size_t bpp = maxval > 255 ? 2 : 1;
    if (data.size() < pos + width * height * bpp)
        throw IoError(path.string() + ": truncated PGM raster");
    RealImage image(width, height);
    const auto* p = reinterpret_cast<const unsigned char*>(data.data() + pos);
    for (std::size_t i = 0; i < width * height; ++i)
        image[i] = bpp == 1 ? p[i] : (p[2 * i] << 8) | p[2 * i + 1];
    return image;
}

void write_pgm(const fs::path& path, const RealImage& image, int bits)
{
    if (bits != 8 && bits != 16)
        throw IoError("PGM bit depth must be 8 or 16");
    const double maxval = bits == 8 ? 255.0 : 65535.0;
    std::string out = "P5\n" + std::to_string(image.width()) + " " + std::to_string(image.height()) + "\n" +
                      std::to_string(static_cast<int>(maxval)) + "\n";
    for (double v : image.pixels()) {
        const auto q = static_cast<unsigned>(std::clamp(std::round(v), 0.0, maxval));
        if (bits == 16)
            out.push_back(static_cast<char>(q >> 8));
        out.push_back(static_cast<char>(q & 0xff));
    }
    write_file_atomic(path, out);
}

// --- PNG -------------------------------------------------------------------

namespace {

struct MemoryReader
{
    const std::string* data;
    std::size_t pos;
};

void png_error_handler(png_structp, png_const_charp message) { throw IoError(std::string("PNG: ") + message); }
void png_warning_handler(png_structp, png_const_charp) {}

} // namespace

RealImage read_png(const fs::path& path)
{
    const std::string data = read_file(path);
    if (data.size() < 8 || png_sig_cmp(reinterpret_cast<png_const_bytep>(data.data()), 0, 8) != 0)
        throw IoError(path.string() + ": not a PNG file");

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_handler, png_warning_handler);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw IoError("cannot allocate PNG reader");
    }
    MemoryReader reader{&data, 0};
    png_set_read_fn(png, &reader, [](png_structp p, png_bytep out, png_size_t len) {
        auto* r = static_cast<MemoryReader*>(png_get_io_ptr(p));
        if (r->pos + len > r->data->size())
            png_error(p, "truncated file");
        std::memcpy(out, r->data->data() + r->pos, len);
        r->pos += len;
    });

    RealImage image;
    try {
        png_read_info(png, info);
        const auto color = png_get_color_type(png, info);
        if (color == PNG_COLOR_TYPE_PALETTE)
            png_set_palette_to_rgb(png);
        if (color == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8)
            png_set_expand_gray_1_2_4_to_8(png);
        if (color & PNG_COLOR_MASK_ALPHA)
            png_set_strip_alpha(png);
        if (color == PNG_COLOR_TYPE_RGB || color == PNG_COLOR_TYPE_RGB_ALPHA || color == PNG_COLOR_TYPE_PALETTE)
            png_set_rgb_to_gray_fixed(png, 1, -1, -1);
        png_read_update_info(png, info);

        const std::size_t width = png_get_image_width(png, info);
        const std::size_t height = png_get_image_height(png, info);
        const int depth = png_get_bit_depth(png, info);
        const std::size_t rowbytes = png_get_rowbytes(png, info);
        std::vector<unsigned char> raster(rowbytes * height);
        std::vector<png_bytep> rows(height);
        for (std::size_t y = 0; y < height; ++y)
            rows[y] = raster.data() + y * rowbytes;
        png_read_image(png, rows.data());

        image = RealImage(width, height);
        for (std::size_t y = 0; y < height; ++y)
            for (std::size_t x = 0; x < width; ++x)
                image(x, y) = depth == 16 ? (rows[y][2 * x] << 8) | rows[y][2 * x + 1] : rows[y][x];
    } catch (const IoError& e) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError(path.string() + ": " + e.what());
    }
    png_destroy_read_struct(&png, &info, nullptr);
    return image;
}

void write_png16(const fs::path& path, const RealImage& image, double lo, double hi)
{
    if (image.empty())
        throw IoError("cannot write an empty PNG");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_handler, png_warning_handler);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError("cannot allocate PNG writer");
    }
    std::string out;
    png_set_write_fn(
        png, &out,
        [](png_structp p, png_bytep data, png_size_t len) {
            static_cast<std::string*>(png_get_io_ptr(p))->append(reinterpret_cast<const char*>(data), len);
        },
        [](png_structp) {});

    const std::size_t width = image.width();
    const std::size_t height = image.height();
    const double span = hi > lo ? hi - lo : 1.0;
    std::vector<unsigned char> row(2 * width);
    try {
        png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 16,
                     PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
        png_write_info(png, info);
        for (std::size_t y = 0; y < height; ++y) {
            for (std::size_t x = 0; x < width; ++x) {
                const double t = std::isfinite(image(x, y)) ? (image(x, y) - lo) / span : 0.0;
                const auto q = static_cast<unsigned>(std::lround(std::clamp(t, 0.0, 1.0) * 65535.0));
                row[2 * x] = static_cast<unsigned char>(q >> 8);
                row[2 * x + 1] = static_cast<unsigned char>(q & 0xff);
            }
            png_write_row(png, row.data());
        }
        png_write_end(png, nullptr);
    } catch (const IoError& e) {
        png_destroy_write_struct(&png, &info);
        throw IoError(path.string() + ": " + e.what());
    }
    png_destroy_write_struct(&png, &info);
    write_file_atomic(path, out);
}

void write_png16(const fs::path& path, const RealImage& image)
{
    if (image.empty())
        throw IoError("cannot write an empty PNG");
    const auto [lo, hi] = std::minmax_element(image.pixels().begin(), image.pixels().end());
    write_png16(path, image, *lo, *hi);
}

RealImage read_grayscale(const fs::path& path)
{
    const std::string head = read_file(path).substr(0, 8);
    if (head.size() >= 2 && head[0] == 'P' && head[1] == '5')
        return read_pgm(path);
    return read_png(path);
}

} // namespace macrofp
