#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include <opencv2/core.hpp>

#include "tspmgs/image.hpp"
#include "tspmgs/tensor.hpp"

namespace testing_support {

inline std::vector<double> random_vector(std::mt19937_64& gen, std::size_t n, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = d(gen);
  return v;
}

inline tspmgs::Vector to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const tspmgs::Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline tspmgs::Matrix to_matrix(const std::vector<std::vector<double>>& rows) {
  tspmgs::Matrix m(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c];
  return m;
}

inline std::vector<std::vector<double>> random_rows(std::mt19937_64& gen, std::size_t n, std::size_t d) {
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < n; ++i) rows.push_back(random_vector(gen, d));
  return rows;
}

inline tspmgs::Vector unit(tspmgs::Vector v) { return v / v.norm(); }

inline tspmgs::Matrix unit_rows(tspmgs::Matrix m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) m.row(r).normalize();
  return m;
}

// Smooth colour gradient plus a few stripes so every frontend feature is non-trivial.
inline tspmgs::ImageInput test_image(int w, int h, int variant = 0, const std::string& id = "test") {
  cv::Mat m(h, w, CV_8UC3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int stripe = ((x + variant * 7) / 16 + y / 24) % 2;
      m.at<cv::Vec3b>(y, x) = cv::Vec3b(static_cast<uchar>((x * 255) / std::max(1, w - 1)),
                                        static_cast<uchar>((y * 255) / std::max(1, h - 1)),
                                        static_cast<uchar>(stripe ? 40 + variant * 30 % 200 : 220));
    }
  }
  return tspmgs::make_image(m, id);
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("tspmgs_test_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing_support
