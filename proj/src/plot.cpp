#include "tspmgs/plot.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "tspmgs/errors.hpp"

namespace tspmgs {
namespace {

constexpr int kWidth = 640;
constexpr int kHeight = 480;
constexpr int kMargin = 60;

std::pair<double, double> padded_range(std::span<const double> v) {
  auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  double a = *lo;
  double b = *hi;
  if (a == b) {
    a -= 0.5;
    b += 0.5;
  }
  const double pad = 0.05 * (b - a);
  return {a - pad, b + pad};
}

}  // namespace

void write_scatter_png(const std::filesystem::path& path, std::span<const double> mos,
                       std::span<const double> predictions, const std::string& title) {
  if (mos.size() != predictions.size() || mos.empty()) throw InputError("scatter plot needs paired, non-empty data");
  cv::Mat canvas(kHeight, kWidth, CV_8UC3, cv::Scalar(255, 255, 255));
  const auto [x0, x1] = padded_range(mos);
  const auto [y0, y1] = padded_range(predictions);
  auto to_px = [&](double x, double y) {
    const double u = (x - x0) / (x1 - x0);
    const double v = (y - y0) / (y1 - y0);
    return cv::Point(kMargin + static_cast<int>(u * (kWidth - 2 * kMargin)),
                     kHeight - kMargin - static_cast<int>(v * (kHeight - 2 * kMargin)));
  };

  const cv::Scalar black(0, 0, 0);
  const cv::Scalar grey(160, 160, 160);
  cv::rectangle(canvas, cv::Point(kMargin, kMargin), cv::Point(kWidth - kMargin, kHeight - kMargin), black, 1);
  for (int i = 0; i <= 4; ++i) {
    const double fx = x0 + (x1 - x0) * i / 4.0;
    const double fy = y0 + (y1 - y0) * i / 4.0;
    const auto px = to_px(fx, y0);
    const auto py = to_px(x0, fy);
    cv::putText(canvas, fmt::format("{:.2f}", fx), cv::Point(px.x - 15, kHeight - kMargin + 18),
                cv::FONT_HERSHEY_SIMPLEX, 0.4, black, 1, cv::LINE_AA);
    cv::putText(canvas, fmt::format("{:.2f}", fy), cv::Point(8, py.y + 4), cv::FONT_HERSHEY_SIMPLEX, 0.4,
                black, 1, cv::LINE_AA);
  }

  // least-squares line
  const double n = static_cast<double>(mos.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < mos.size(); ++i) {
    mx += mos[i];
    my += predictions[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < mos.size(); ++i) {
    sxy += (mos[i] - mx) * (predictions[i] - my);
    sxx += (mos[i] - mx) * (mos[i] - mx);
  }
  if (sxx > 0.0) {
    const double slope = sxy / sxx;
    cv::line(canvas, to_px(x0, my + slope * (x0 - mx)), to_px(x1, my + slope * (x1 - mx)), grey, 1, cv::LINE_AA);
  }

  for (std::size_t i = 0; i < mos.size(); ++i) {
    cv::circle(canvas, to_px(mos[i], predictions[i]), 3, cv::Scalar(200, 80, 30), cv::FILLED, cv::LINE_AA);
  }
  cv::putText(canvas, title, cv::Point(kMargin, 30), cv::FONT_HERSHEY_SIMPLEX, 0.6, black, 1, cv::LINE_AA);
  cv::putText(canvas, "MOS", cv::Point(kWidth / 2 - 15, kHeight - 15), cv::FONT_HERSHEY_SIMPLEX, 0.5, black, 1,
              cv::LINE_AA);
  cv::putText(canvas, "predicted", cv::Point(4, kMargin - 10), cv::FONT_HERSHEY_SIMPLEX, 0.5, black, 1,
              cv::LINE_AA);
  if (!cv::imwrite(path.string(), canvas)) throw InputError("cannot write plot: " + path.string());
}

}  // namespace tspmgs
