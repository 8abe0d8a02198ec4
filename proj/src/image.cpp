#include "wm/image.hpp"

#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>

#include <jpeglib.h>
#include <png.h>

#include "wm/error.hpp"

namespace wm {
namespace {

constexpr double kLumaR = 0.299;
constexpr double kLumaG = 0.587;
constexpr double kLumaB = 0.114;

bool looks_like_png(const std::vector<uint8_t>& bytes) {
    static const uint8_t magic[8] = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
    return bytes.size() >= 8 && std::memcmp(bytes.data(), magic, 8) == 0;
}

bool looks_like_jpeg(const std::vector<uint8_t>& bytes) {
    return bytes.size() >= 3 && bytes[0] == 0xff && bytes[1] == 0xd8 && bytes[2] == 0xff;
}

struct PngReadState {
    const uint8_t* data;
    size_t size;
    size_t offset;
};

void png_read_from_memory(png_structp png, png_bytep out, png_size_t count) {
    auto* state = static_cast<PngReadState*>(png_get_io_ptr(png));
    if (state->offset + count > state->size) {
        png_error(png, "read past end of buffer");
    }
    std::memcpy(out, state->data + state->offset, count);
    state->offset += count;
}

void png_write_to_memory(png_structp png, png_bytep data, png_size_t count) {
    auto* out = static_cast<std::vector<uint8_t>*>(png_get_io_ptr(png));
    out->insert(out->end(), data, data + count);
}

void png_flush_noop(png_structp) {}

RgbImage decode_png(const std::vector<uint8_t>& bytes) {
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) raise(ErrorCode::IoError, "png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        raise(ErrorCode::IoError, "png_create_info_struct failed");
    }
    std::vector<png_bytep> rows;
    std::vector<uint8_t> raster;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        raise(ErrorCode::MalformedFile, "undecodable PNG stream");
    }
    PngReadState state{bytes.data(), bytes.size(), 0};
    png_set_read_fn(png, &state, png_read_from_memory);
    png_read_info(png, info);

    png_uint_32 width = png_get_image_width(png, info);
    png_uint_32 height = png_get_image_height(png, info);
    int bit_depth = png_get_bit_depth(png, info);
    int color_type = png_get_color_type(png, info);

    if (bit_depth == 16) png_set_strip_16(png);
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA) {
        png_set_gray_to_rgb(png);
    }
    png_set_strip_alpha(png);
    png_read_update_info(png, info);

    size_t row_bytes = png_get_rowbytes(png, info);
    raster.resize(row_bytes * height);
    rows.resize(height);
    for (png_uint_32 y = 0; y < height; ++y) rows[y] = raster.data() + y * row_bytes;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    RgbImage img(static_cast<int>(width), static_cast<int>(height));
    for (png_uint_32 y = 0; y < height; ++y) {
        const uint8_t* row = raster.data() + y * row_bytes;
        for (png_uint_32 x = 0; x < width; ++x) {
            for (int c = 0; c < 3; ++c) {
                img.at(static_cast<int>(x), static_cast<int>(y), c) = row[x * 3 + c] / 255.0f;
            }
        }
    }
    return img;
}

struct JpegErrorMgr {
    jpeg_error_mgr pub;
    jmp_buf setjmp_buffer;
};

void jpeg_error_exit(j_common_ptr cinfo) {
    auto* err = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
    longjmp(err->setjmp_buffer, 1);
}

RgbImage decode_jpeg(const std::vector<uint8_t>& bytes) {
    jpeg_decompress_struct cinfo;
    JpegErrorMgr jerr;
    cinfo.err = jpeg_std_error(&jerr.pub);
    jerr.pub.error_exit = jpeg_error_exit;
    if (setjmp(jerr.setjmp_buffer)) {
        jpeg_destroy_decompress(&cinfo);
        raise(ErrorCode::MalformedFile, "undecodable JPEG stream");
    }
    jpeg_create_decompress(&cinfo);
    jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
    jpeg_read_header(&cinfo, TRUE);
    cinfo.out_color_space = JCS_RGB;
    jpeg_start_decompress(&cinfo);

    RgbImage img(static_cast<int>(cinfo.output_width), static_cast<int>(cinfo.output_height));
    std::vector<uint8_t> row(static_cast<size_t>(cinfo.output_width) * cinfo.output_components);
    uint8_t* rowp = row.data();
    while (cinfo.output_scanline < cinfo.output_height) {
        int y = static_cast<int>(cinfo.output_scanline);
        jpeg_read_scanlines(&cinfo, &rowp, 1);
        for (int x = 0; x < img.width; ++x) {
            for (int c = 0; c < 3; ++c) img.at(x, y, c) = row[x * 3 + c] / 255.0f;
        }
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    return img;
}

uint8_t quantize8(float v) {
    float clamped = clamp01(v);
    int q = static_cast<int>(clamped * 255.0f + 0.5f);
    return static_cast<uint8_t>(q < 0 ? 0 : (q > 255 ? 255 : q));
}

} // namespace

RgbImage load_image(const std::vector<uint8_t>& bytes) {
    if (looks_like_png(bytes)) return decode_png(bytes);
    if (looks_like_jpeg(bytes)) return decode_jpeg(bytes);
    raise(ErrorCode::UnsupportedFormat, "expected a PNG or JPEG stream");
}

RgbImage load_image_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorCode::IoError, "cannot open " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                               std::istreambuf_iterator<char>());
    return load_image(bytes);
}

std::vector<uint8_t> save_png(const RgbImage& img) {
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) raise(ErrorCode::IoError, "png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        raise(ErrorCode::IoError, "png_create_info_struct failed");
    }
    std::vector<uint8_t> out;
    std::vector<uint8_t> raster(static_cast<size_t>(img.width) * img.height * 3);
    std::vector<png_bytep> rows(img.height);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        raise(ErrorCode::IoError, "PNG encode failed");
    }
    png_set_write_fn(png, &out, png_write_to_memory, png_flush_noop);
    png_set_IHDR(png, info, img.width, img.height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < img.height; ++y) {
        uint8_t* row = raster.data() + static_cast<size_t>(y) * img.width * 3;
        for (int x = 0; x < img.width; ++x) {
            for (int c = 0; c < 3; ++c) row[x * 3 + c] = quantize8(img.at(x, y, c));
        }
        rows[y] = row;
    }
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return out;
}

void save_png_file(const RgbImage& img, const std::string& path) {
    auto bytes = save_png(img);
    std::ofstream out(path, std::ios::binary);
    if (!out) raise(ErrorCode::IoError, "cannot write " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::vector<uint8_t> save_jpeg(const RgbImage& img, int quality) {
    if (quality < 1) quality = 1;
    if (quality > 100) quality = 100;
    jpeg_compress_struct cinfo;
    JpegErrorMgr jerr;
    cinfo.err = jpeg_std_error(&jerr.pub);
    jerr.pub.error_exit = jpeg_error_exit;

    unsigned char* buffer = nullptr;
    unsigned long buffer_size = 0;
    if (setjmp(jerr.setjmp_buffer)) {
        jpeg_destroy_compress(&cinfo);
        if (buffer) free(buffer);
        raise(ErrorCode::IoError, "JPEG encode failed");
    }
    jpeg_create_compress(&cinfo);
    jpeg_mem_dest(&cinfo, &buffer, &buffer_size);
    cinfo.image_width = static_cast<JDIMENSION>(img.width);
    cinfo.image_height = static_cast<JDIMENSION>(img.height);
    cinfo.input_components = 3;
    cinfo.in_color_space = JCS_RGB;
    jpeg_set_defaults(&cinfo);
    jpeg_set_quality(&cinfo, quality, TRUE); // baseline
    jpeg_start_compress(&cinfo, TRUE);

    std::vector<uint8_t> row(static_cast<size_t>(img.width) * 3);
    uint8_t* rowp = row.data();
    while (cinfo.next_scanline < cinfo.image_height) {
        int y = static_cast<int>(cinfo.next_scanline);
        for (int x = 0; x < img.width; ++x) {
            for (int c = 0; c < 3; ++c) row[x * 3 + c] = quantize8(img.at(x, y, c));
        }
        jpeg_write_scanlines(&cinfo, &rowp, 1);
    }
    jpeg_finish_compress(&cinfo);
    std::vector<uint8_t> out(buffer, buffer + buffer_size);
    jpeg_destroy_compress(&cinfo);
    free(buffer);
    return out;
}

void save_jpeg_file(const RgbImage& img, const std::string& path, int quality) {
    auto bytes = save_jpeg(img, quality);
    std::ofstream out(path, std::ios::binary);
    if (!out) raise(ErrorCode::IoError, "cannot write " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

ImagePlane to_luma(const RgbImage& img) {
    ImagePlane plane(img.width, img.height);
    const float* src = img.samples.data();
    for (size_t i = 0; i < plane.size(); ++i) {
        plane.samples[i] = static_cast<float>(kLumaR * src[i * 3] + kLumaG * src[i * 3 + 1] +
                                              kLumaB * src[i * 3 + 2]);
    }
    return plane;
}

RgbImage from_luma(const ImagePlane& luma, const RgbImage& original) {
    if (luma.width != original.width || luma.height != original.height) {
        raise(ErrorCode::DimensionMismatch, "luma plane does not match image");
    }
    RgbImage out = original;
    for (size_t i = 0; i < luma.size(); ++i) {
        const float* src = &original.samples[i * 3];
        float old_luma = static_cast<float>(kLumaR * src[0] + kLumaG * src[1] + kLumaB * src[2]);
        float delta = luma.samples[i] - old_luma;
        for (int c = 0; c < 3; ++c) out.samples[i * 3 + c] = clamp01(src[c] + delta);
    }
    return out;
}

} // namespace wm
