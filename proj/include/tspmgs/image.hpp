#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

namespace tspmgs {

/// An 8-bit, 3-channel RGB raster plus an opaque identifier.
struct ImageInput {
  cv::Mat pixels;  // CV_8UC3, RGB channel order
  std::string id;

  int width() const { return pixels.cols; }
  int height() const { return pixels.rows; }
};

/// Top-left corner of a crop in the coordinates of the image it was cut from.
struct CropOffset {
  int x = 0;
  int y = 0;

  friend bool operator==(const CropOffset&, const CropOffset&) = default;
};

/// Decodes an image file to RGB. Throws InputError when the file is missing
/// or cannot be decoded.
ImageInput load_image(const std::filesystem::path& path);

/// Wraps an RGB matrix. Throws InputError unless it is a non-empty CV_8UC3.
ImageInput make_image(cv::Mat rgb, std::string id);

/// Resizes to side x side. An image already at that size is returned as is.
ImageInput resize_square(const ImageInput& img, int side);

/// Scales so the shorter side equals `side`, preserving aspect ratio.
ImageInput resize_shorter_side(const ImageInput& img, int side);

/// Crop positions for n crops of crop x crop inside a width x height image.
/// n == 5: four corners then the center. Otherwise an evenly spaced grid of
/// floor(sqrt(n)) rows, read row-major and truncated to n; a single position
/// on an axis sits at the center.
std::vector<CropOffset> crop_offsets(int width, int height, int n, int crop);

/// Deterministic patches: resize so the shorter side is 2 * crop (upscaling
/// if needed), then cut n crops of crop x crop at crop_offsets().
std::vector<ImageInput> crop_patches(const ImageInput& img, int n, int crop = 224);

}  // namespace tspmgs
