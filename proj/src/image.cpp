#include "tspmgs/image.hpp"

#include <algorithm>
#include <cmath>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "tspmgs/errors.hpp"

namespace tspmgs {
namespace {

ImageInput resized(const ImageInput& img, int width, int height) {
  if (img.width() == width && img.height() == height) return img;
  const bool shrinking = width <= img.width() && height <= img.height();
  cv::Mat out;
  cv::resize(img.pixels, out, cv::Size(width, height), 0, 0,
             shrinking ? cv::INTER_AREA : cv::INTER_LINEAR);
  return {out, img.id};
}

// n evenly spaced positions in [0, span], centered when n == 1.
std::vector<int> spaced(int count, int span) {
  std::vector<int> out;
  if (count == 1) {
    out.push_back(span / 2);
    return out;
  }
  for (int i = 0; i < count; ++i) {
    out.push_back(static_cast<int>(std::lround(static_cast<double>(i) * span / (count - 1))));
  }
  return out;
}

}  // namespace

ImageInput make_image(cv::Mat rgb, std::string id) {
  if (rgb.empty() || rgb.type() != CV_8UC3) {
    throw InputError("image '" + id + "' is not a non-empty 8-bit RGB raster");
  }
  return {std::move(rgb), std::move(id)};
}

ImageInput load_image(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) {
    throw InputError("image not found: " + path.string());
  }
  cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (bgr.empty()) throw InputError("cannot decode image: " + path.string());
  cv::Mat rgb;
  cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
  return make_image(std::move(rgb), path.filename().string());
}

ImageInput resize_square(const ImageInput& img, int side) {
  if (side <= 0) throw ConfigError("resize target must be positive");
  return resized(img, side, side);
}

ImageInput resize_shorter_side(const ImageInput& img, int side) {
  if (side <= 0) throw ConfigError("resize target must be positive");
  const int shorter = std::min(img.width(), img.height());
  if (shorter == side) return img;
  const double scale = static_cast<double>(side) / shorter;
  const int w = img.width() == shorter ? side : static_cast<int>(std::lround(img.width() * scale));
  const int h = img.height() == shorter ? side : static_cast<int>(std::lround(img.height() * scale));
  return resized(img, w, h);
}

std::vector<CropOffset> crop_offsets(int width, int height, int n, int crop) {
  if (n < 1) throw ConfigError("patch count must be at least 1");
  if (width < crop || height < crop) throw InputError("image smaller than the crop size");
  const int span_x = width - crop;
  const int span_y = height - crop;
  std::vector<CropOffset> out;
  if (n == 5) {
    out = {{0, 0}, {span_x, 0}, {0, span_y}, {span_x, span_y}, {span_x / 2, span_y / 2}};
    return out;
  }
  const int rows = std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(n)))));
  const int cols = (n + rows - 1) / rows;
  const auto ys = spaced(rows, span_y);
  const auto xs = spaced(cols, span_x);
  for (int r = 0; r < rows && static_cast<int>(out.size()) < n; ++r) {
    for (int c = 0; c < cols && static_cast<int>(out.size()) < n; ++c) out.push_back({xs[c], ys[r]});
  }
  return out;
}

std::vector<ImageInput> crop_patches(const ImageInput& img, int n, int crop) {
  if (n < 1) throw ConfigError("patch count must be at least 1");
  const ImageInput base = resize_shorter_side(img, 2 * crop);
  std::vector<ImageInput> out;
  int index = 0;
  for (const auto& o : crop_offsets(base.width(), base.height(), n, crop)) {
    // clone so each patch owns contiguous memory
    out.push_back({base.pixels(cv::Rect(o.x, o.y, crop, crop)).clone(),
                   img.id + "#p" + std::to_string(index++)});
  }
  return out;
}

}  // namespace tspmgs
