#include "octwarp/image_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace octwarp {

ImageGray enface_mean(const VolumeGrid& vol, int repeat)
{
    ImageGray img;
    img.w = vol.fast_axis == FastAxis::X ? vol.w : vol.h;
    img.h = vol.fast_axis == FastAxis::X ? vol.h : vol.w;
    img.px.assign(static_cast<size_t>(img.w) * img.h, 0.0);
    for (int slow = 0; slow < vol.h; ++slow) {
        for (int fast = 0; fast < vol.w; ++fast) {
            const float* src = vol.ascan(vol.ascan_index(slow, repeat, fast));
            double sum = 0.0;
            for (int k = 0; k < vol.d; ++k) sum += src[k];
            const int x = vol.fast_axis == FastAxis::X ? fast : slow;
            const int y = vol.fast_axis == FastAxis::X ? slow : fast;
            img.px[static_cast<size_t>(y) * img.w + x] = sum / vol.d;
        }
    }
    return img;
}

ImageGray enface_mean(const WarpedTarget& tgt)
{
    ImageGray img;
    img.w = tgt.spec.nx;
    img.h = tgt.spec.ny;
    img.px.assign(static_cast<size_t>(img.w) * img.h, 0.0);
    for (int iy = 0; iy < tgt.spec.ny; ++iy) {
        for (int ix = 0; ix < tgt.spec.nx; ++ix) {
            const int64_t base = tgt.spec.index(ix, iy, 0);
            double sum = 0.0;
            int n = 0;
            for (int iz = 0; iz < tgt.spec.nz; ++iz) {
                if (tgt.valid[base + iz]) {
                    sum += tgt.values[base + iz];
                    ++n;
                }
            }
            img.px[static_cast<size_t>(iy) * img.w + ix] = n > 0 ? sum / n : 0.0;
        }
    }
    return img;
}

std::vector<uint8_t> to_gray8(const ImageGray& img)
{
    double lo = 0.0, hi = 0.0;
    if (!img.px.empty()) {
        lo = *std::min_element(img.px.begin(), img.px.end());
        hi = *std::max_element(img.px.begin(), img.px.end());
    }
    std::vector<uint8_t> out(img.px.size(), 0);
    if (hi > lo) {
        const double scale = 255.0 / (hi - lo);
        for (size_t i = 0; i < img.px.size(); ++i)
            out[i] = static_cast<uint8_t>(std::clamp((img.px[i] - lo) * scale, 0.0, 255.0));
    }
    return out;
}

namespace {

void put_u32_be(std::vector<uint8_t>& v, uint32_t x)
{
    v.push_back(static_cast<uint8_t>(x >> 24));
    v.push_back(static_cast<uint8_t>(x >> 16));
    v.push_back(static_cast<uint8_t>(x >> 8));
    v.push_back(static_cast<uint8_t>(x));
}

void write_chunk(std::ofstream& f, const char type[4], const std::vector<uint8_t>& data)
{
    std::vector<uint8_t> head;
    put_u32_be(head, static_cast<uint32_t>(data.size()));
    f.write(reinterpret_cast<const char*>(head.data()), 4);
    f.write(type, 4);
    if (!data.empty()) f.write(reinterpret_cast<const char*>(data.data()), data.size());
    uLong crc = crc32(0L, reinterpret_cast<const Bytef*>(type), 4);
    if (!data.empty()) crc = crc32(crc, data.data(), static_cast<uInt>(data.size()));
    std::vector<uint8_t> tail;
    put_u32_be(tail, static_cast<uint32_t>(crc));
    f.write(reinterpret_cast<const char*>(tail.data()), 4);
}

void write_png(const std::string& path, const std::vector<uint8_t>& pixels, int w, int h,
               int channels)
{
    if (w < 1 || h < 1 || pixels.size() != static_cast<size_t>(w) * h * channels)
        throw std::invalid_argument("write_png: size mismatch");

    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    const uint8_t sig[8] = {137, 'P', 'N', 'G', 13, 10, 26, 10};
    f.write(reinterpret_cast<const char*>(sig), 8);

    std::vector<uint8_t> ihdr;
    put_u32_be(ihdr, static_cast<uint32_t>(w));
    put_u32_be(ihdr, static_cast<uint32_t>(h));
    ihdr.push_back(8);                                      // bit depth
    ihdr.push_back(channels == 1 ? 0 : 2);                  // gray / rgb
    ihdr.push_back(0);
    ihdr.push_back(0);
    ihdr.push_back(0);
    write_chunk(f, "IHDR", ihdr);

    // Filter byte 0 per scanline, then one zlib stream.
    const size_t stride = static_cast<size_t>(w) * channels;
    std::vector<uint8_t> raw;
    raw.reserve((stride + 1) * h);
    for (int y = 0; y < h; ++y) {
        raw.push_back(0);
        raw.insert(raw.end(), pixels.begin() + y * stride, pixels.begin() + (y + 1) * stride);
    }
    uLongf bound = compressBound(static_cast<uLong>(raw.size()));
    std::vector<uint8_t> idat(bound);
    if (compress2(idat.data(), &bound, raw.data(), static_cast<uLong>(raw.size()), 6) != Z_OK)
        throw std::runtime_error("png deflate failed");
    idat.resize(bound);
    write_chunk(f, "IDAT", idat);
    write_chunk(f, "IEND", {});
    f.close();
    if (!f) throw std::runtime_error("write failed: " + path);
}

} // namespace

void write_png_gray8(const std::string& path, const std::vector<uint8_t>& pixels, int w, int h)
{
    write_png(path, pixels, w, h, 1);
}

void write_png_rgb8(const std::string& path, const std::vector<uint8_t>& pixels, int w, int h)
{
    write_png(path, pixels, w, h, 3);
}

void write_composite_png(const std::string& path, const ImageGray& red, const ImageGray& cyan)
{
    const int w = std::min(red.w, cyan.w);
    const int h = std::min(red.h, cyan.h);
    if (w < 1 || h < 1) throw std::invalid_argument("write_composite_png: empty images");
    ImageGray rc{w, h, std::vector<double>(static_cast<size_t>(w) * h)};
    ImageGray cc = rc;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            rc.px[static_cast<size_t>(y) * w + x] = red.px[static_cast<size_t>(y) * red.w + x];
            cc.px[static_cast<size_t>(y) * w + x] = cyan.px[static_cast<size_t>(y) * cyan.w + x];
        }
    }
    const std::vector<uint8_t> r8 = to_gray8(rc);
    const std::vector<uint8_t> c8 = to_gray8(cc);
    std::vector<uint8_t> rgb(static_cast<size_t>(w) * h * 3);
    for (size_t i = 0; i < r8.size(); ++i) {
        rgb[3 * i] = r8[i];
        rgb[3 * i + 1] = c8[i];
        rgb[3 * i + 2] = c8[i];
    }
    write_png_rgb8(path, rgb, w, h);
}

} // namespace octwarp
