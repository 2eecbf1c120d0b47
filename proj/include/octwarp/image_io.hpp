// image_io.hpp — en face projections and PNG output.

#pragma once

#include "octwarp/forward_warp.hpp"
#include "octwarp/geometry.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace octwarp {

struct ImageGray {
    int w = 0, h = 0;
    std::vector<double> px; // row-major [y*w + x]
};

/// Mean over depth per A-scan, oriented in spatial axes (x right, y down).
ImageGray enface_mean(const VolumeGrid& vol, int repeat = 0);

/// Mean over valid voxels per grid column; columns without any valid voxel
/// are zero.
ImageGray enface_mean(const WarpedTarget& tgt);

/// Min-max normalization to 8 bit (constant images map to 0).
std::vector<uint8_t> to_gray8(const ImageGray& img);

void write_png_gray8(const std::string& path, const std::vector<uint8_t>& pixels, int w, int h);
void write_png_rgb8(const std::string& path, const std::vector<uint8_t>& pixels, int w, int h);

/// Red/cyan composite: first image in the red channel, second in green and
/// blue. Images are cropped to the common size.
void write_composite_png(const std::string& path, const ImageGray& red, const ImageGray& cyan);

} // namespace octwarp
