#include "tspmgs/synthetic.hpp"

#include <array>
#include <fstream>

#include <fmt/format.h>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "tspmgs/csv.hpp"
#include "tspmgs/errors.hpp"
#include "tspmgs/random.hpp"
#include "tspmgs/training.hpp"

namespace tspmgs {
namespace {

struct Colour {
  const char* name;
  cv::Vec3b rgb;
};

const std::array<Colour, 6> kColours{{{"red", {220, 40, 40}},
                                          {"green", {40, 180, 60}},
                                          {"blue", {40, 70, 220}},
                                          {"yellow", {230, 210, 40}},
                                          {"purple", {150, 60, 190}},
                                          {"orange", {240, 140, 30}}}};
constexpr std::array<const char*, 3> kShapes{"circle", "square", "ring"};
constexpr std::array<const char*, 4> kScenes{"on a bright background", "in a dark room", "at dawn",
                                             "under the sea"};

cv::Scalar scalar(const cv::Vec3b& c) { return cv::Scalar(c[0], c[1], c[2]); }

}  // namespace

std::vector<SyntheticItem> generate_synthetic(const SyntheticOptions& options) {
  if (options.count < 1 || options.size < 16) throw ConfigError("synthetic corpus needs count >= 1 and size >= 16");
  Rng rng{options.seed, 0x73796e7468ULL};
  std::vector<SyntheticItem> items;
  for (int i = 0; i < options.count; ++i) {
    SyntheticItem item;
    const int s = options.size;
    cv::Mat img(s, s, CV_8UC3);
    const cv::Vec3b top(static_cast<uchar>(rng.below(256)), static_cast<uchar>(rng.below(256)),
                        static_cast<uchar>(rng.below(256)));
    const cv::Vec3b bottom(static_cast<uchar>(rng.below(256)), static_cast<uchar>(rng.below(256)),
                           static_cast<uchar>(rng.below(256)));
    for (int y = 0; y < s; ++y) {
      const double t = static_cast<double>(y) / (s - 1);
      cv::Vec3b row;
      for (int c = 0; c < 3; ++c) row[c] = static_cast<uchar>((1.0 - t) * top[c] + t * bottom[c]);
      img.row(y).setTo(scalar(row));
    }

    const auto& colour = kColours[rng.below(kColours.size())];
    const auto shape = static_cast<std::size_t>(rng.below(kShapes.size()));
    const int objects = 1 + static_cast<int>(rng.below(3));
    for (int k = 0; k < objects; ++k) {
      const cv::Point centre(static_cast<int>(s / 4 + rng.below(static_cast<std::uint64_t>(s / 2))),
                             static_cast<int>(s / 4 + rng.below(static_cast<std::uint64_t>(s / 2))));
      const int radius = s / 10 + static_cast<int>(rng.below(static_cast<std::uint64_t>(s / 8)));
      switch (shape) {
        case 0:
          cv::circle(img, centre, radius, scalar(colour.rgb), cv::FILLED);
          break;
        case 1:
          cv::rectangle(img, centre - cv::Point(radius, radius), centre + cv::Point(radius, radius),
                        scalar(colour.rgb), cv::FILLED);
          break;
        default:
          cv::circle(img, centre, radius, scalar(colour.rgb), std::max(2, radius / 4));
      }
    }

    item.degradation = rng.uniform();
    const double sigma = 0.2 + 4.0 * item.degradation;
    cv::GaussianBlur(img, img, cv::Size(0, 0), sigma, sigma, cv::BORDER_REFLECT_101);
    const double noise = 40.0 * item.degradation;
    for (int y = 0; y < s; ++y) {
      auto* px = img.ptr<cv::Vec3b>(y);
      for (int x = 0; x < s; ++x) {
        for (int c = 0; c < 3; ++c) px[x][c] = cv::saturate_cast<uchar>(px[x][c] + noise * rng.normal());
      }
    }

    item.prompt = fmt::format("{} {} {}{}", objects > 1 ? "several" : "a", colour.name, kShapes[shape],
                              objects > 1 ? "s" : "");
    item.prompt += std::string(" ") + kScenes[rng.below(kScenes.size())];
    item.image = make_image(img, fmt::format("synthetic_{:03d}.png", i));
    items.push_back(std::move(item));
  }
  return items;
}

std::filesystem::path write_synthetic_dataset(const std::filesystem::path& dir, const SyntheticOptions& options,
                                              const BackendConfig& backend) {
  const auto items = generate_synthetic(options);
  std::filesystem::create_directories(dir / "images");

  TrainConfig perception;
  perception.task = TaskKind::perception;
  perception.scheme = PromptScheme::adjective;
  TrainConfig alignment;
  alignment.task = TaskKind::alignment;
  alignment.scheme = PromptScheme::adverb;
  const QualityModel perception_model = initial_checkpoint(backend, perception).model();
  const QualityModel alignment_model = initial_checkpoint(backend, alignment).model();

  const auto manifest = dir / "manifest.csv";
  std::ofstream out(manifest);
  if (!out) throw InputError("cannot write manifest: " + manifest.string());
  write_csv_row(out, {"name", "prompt", "mos_quality", "mos_align", "generator", "degradation"});
  for (const auto& item : items) {
    cv::Mat bgr;
    cv::cvtColor(item.image.pixels, bgr, cv::COLOR_RGB2BGR);
    if (!cv::imwrite((dir / "images" / item.image.id).string(), bgr)) {
      throw InputError("cannot write image " + item.image.id);
    }
    const auto p = prepare_sample(perception_model.encoder(), item.image, item.prompt, 0.0, perception);
    const auto a = prepare_sample(alignment_model.encoder(), item.image, item.prompt, 0.0, alignment);
    write_csv_row(out, {item.image.id, item.prompt, fmt::format("{}", perception_model.score(p).score.q_final),
                        fmt::format("{}", alignment_model.score(a).score.q_final), "synthetic",
                        fmt::format("{}", item.degradation)});
  }
  return manifest;
}

}  // namespace tspmgs
