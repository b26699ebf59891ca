// PNG (libpng) and JPEG (libjpeg) codecs for frames and annotations.

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <csetjmp>
#include <memory>

#include <jpeglib.h>

#include "partvos/dataset_io.hpp"
#include "partvos/errors.hpp"

namespace partvos {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const noexcept {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
    FilePtr f(std::fopen(path.c_str(), mode));
    if (!f) throw IoError("cannot open " + path.string());
    return f;
}

[[noreturn]] void png_error_handler(png_structp png, png_const_charp msg) {
    auto* text = static_cast<std::string*>(png_get_error_ptr(png));
    if (text) *text = msg;
    png_longjmp(png, 1);
}

void png_warning_handler(png_structp, png_const_charp) {}

bool has_extension(const std::filesystem::path& p, std::initializer_list<const char*> exts) {
    auto ext = p.extension().string();
    for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    for (const char* e : exts) {
        if (ext == e) return true;
    }
    return false;
}

// Decoded 8-bit PNG: either palette indices/grey (channels = 1) or RGB.
struct PngPixels {
    int width = 0;
    int height = 0;
    int channels = 0;
    bool palette = false;
    std::vector<std::uint8_t> data;
};

PngPixels read_png(const std::filesystem::path& path, bool want_rgb) {
    auto file = open_file(path, "rb");
    std::string error;
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &error, png_error_handler, png_warning_handler);
    if (!png) throw IoError("libpng: cannot allocate reader");
    png_infop info = png_create_info_struct(png);
    PngPixels out;
    std::vector<png_bytep> rows;

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("cannot decode " + path.string() + ": " + error);
    }

    png_init_io(png, file.get());
    png_read_info(png, info);
    const auto color = png_get_color_type(png, info);
    const auto depth = png_get_bit_depth(png, info);

    if (depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) {
        if (want_rgb) {
            png_set_palette_to_rgb(png);
        } else {
            out.palette = true;
            if (depth < 8) png_set_packing(png);
        }
    }
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    if (want_rgb && (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA)) png_set_gray_to_rgb(png);
    if (want_rgb && png_get_valid(png, info, PNG_INFO_tRNS)) png_set_strip_alpha(png);
    png_read_update_info(png, info);

    out.width = static_cast<int>(png_get_image_width(png, info));
    out.height = static_cast<int>(png_get_image_height(png, info));
    out.channels = png_get_channels(png, info);
    const auto rowbytes = png_get_rowbytes(png, info);
    out.data.resize(rowbytes * static_cast<std::size_t>(out.height));
    rows.resize(static_cast<std::size_t>(out.height));
    for (int y = 0; y < out.height; ++y) rows[static_cast<std::size_t>(y)] = out.data.data() + rowbytes * y;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    if (!want_rgb && out.channels != 1) {
        // Colour annotation without a palette: not a label image.
        throw IoError(path.string() + ": annotation must be palette or greyscale");
    }
    if (want_rgb && out.channels != 3) throw IoError(path.string() + ": unsupported PNG layout");
    return out;
}

void write_png(const std::filesystem::path& path, int width, int height, int color_type,
               std::span<const std::uint8_t> data, int channels, bool with_palette) {
    auto file = open_file(path, "wb");
    std::string error;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &error, png_error_handler, png_warning_handler);
    if (!png) throw IoError("libpng: cannot allocate writer");
    png_infop info = png_create_info_struct(png);
    std::vector<png_color> palette;
    std::vector<png_bytep> rows(static_cast<std::size_t>(height));

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("cannot encode " + path.string() + ": " + error);
    }

    png_init_io(png, file.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8, color_type,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    if (with_palette) {
        for (const auto& c : davis_palette()) palette.push_back(png_color{c[0], c[1], c[2]});
        png_set_PLTE(png, info, palette.data(), static_cast<int>(palette.size()));
    }
    png_write_info(png, info);
    const std::size_t stride = static_cast<std::size_t>(width) * channels;
    for (int y = 0; y < height; ++y) {
        rows[static_cast<std::size_t>(y)] = const_cast<png_bytep>(data.data() + stride * y);
    }
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

struct JpegErrorManager {
    jpeg_error_mgr base;
    std::jmp_buf jump;
    char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
    auto* mgr = reinterpret_cast<JpegErrorManager*>(cinfo->err);
    (*cinfo->err->format_message)(cinfo, mgr->message);
    std::longjmp(mgr->jump, 1);
}

RgbImage read_jpeg(const std::filesystem::path& path) {
    auto file = open_file(path, "rb");
    jpeg_decompress_struct cinfo{};
    JpegErrorManager err{};
    cinfo.err = jpeg_std_error(&err.base);
    err.base.error_exit = jpeg_error_exit;
    std::vector<std::uint8_t> data;

    if (setjmp(err.jump)) {
        jpeg_destroy_decompress(&cinfo);
        throw IoError("cannot decode " + path.string() + ": " + err.message);
    }
    jpeg_create_decompress(&cinfo);
    jpeg_stdio_src(&cinfo, file.get());
    jpeg_read_header(&cinfo, TRUE);
    cinfo.out_color_space = JCS_RGB;
    jpeg_start_decompress(&cinfo);
    const int w = static_cast<int>(cinfo.output_width);
    const int h = static_cast<int>(cinfo.output_height);
    data.resize(static_cast<std::size_t>(w) * h * 3);
    while (cinfo.output_scanline < cinfo.output_height) {
        JSAMPROW row = data.data() + static_cast<std::size_t>(cinfo.output_scanline) * w * 3;
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    return RgbImage(w, h, std::move(data));
}

}  // namespace

const std::array<std::array<std::uint8_t, 3>, 256>& davis_palette() {
    static const auto palette = [] {
        std::array<std::array<std::uint8_t, 3>, 256> p{};
        for (int i = 0; i < 256; ++i) {
            int r = 0, g = 0, b = 0, c = i;
            for (int j = 0; j < 8; ++j) {
                r |= ((c >> 0) & 1) << (7 - j);
                g |= ((c >> 1) & 1) << (7 - j);
                b |= ((c >> 2) & 1) << (7 - j);
                c >>= 3;
            }
            p[static_cast<std::size_t>(i)] = {static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g),
                                              static_cast<std::uint8_t>(b)};
        }
        return p;
    }();
    return palette;
}

RgbImage read_rgb(const std::filesystem::path& path) {
    if (has_extension(path, {".jpg", ".jpeg"})) return read_jpeg(path);
    if (has_extension(path, {".png"})) {
        auto px = read_png(path, true);
        return RgbImage(px.width, px.height, std::move(px.data));
    }
    throw IoError("unsupported image type: " + path.string());
}

void write_rgb_png(const std::filesystem::path& path, const RgbImage& image) {
    write_png(path, image.width(), image.height(), PNG_COLOR_TYPE_RGB, image.data(), 3, false);
}

InstanceMask read_instance_png(const std::filesystem::path& path) {
    auto px = read_png(path, false);
    if (!px.palette) {
        const bool binary = std::all_of(px.data.begin(), px.data.end(), [](std::uint8_t v) { return v == 0 || v == 255; });
        if (binary) {
            for (auto& v : px.data) v = v ? 1 : 0;
        }
    }
    return InstanceMask(px.width, px.height, std::move(px.data));
}

void write_instance_png(const std::filesystem::path& path, const InstanceMask& mask) {
    write_png(path, mask.width(), mask.height(), PNG_COLOR_TYPE_PALETTE, mask.labels(), 1, true);
}

}  // namespace partvos
