#include "tspmgs/compact_encoder.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include <opencv2/imgproc.hpp>

#include "tspmgs/errors.hpp"
#include "tspmgs/random.hpp"

namespace tspmgs {
namespace {

constexpr int kGrid = 7;
constexpr int kCellFeatures = 6;
constexpr char kWeightsMagic[8] = {'T', 'S', 'P', 'M', 'G', 'S', 'W', '1'};

Vector normalized(const Vector& raw, double& norm) {
  norm = raw.norm();
  if (norm == 0.0) throw NumericError("encoder produced a zero embedding");
  return raw / norm;
}

// Gradient of u = x / |x| pulled back from d/du to d/dx.
Vector unnormalize_grad(const Vector& unit, double norm, const Vector& grad_unit) {
  return (grad_unit - unit * unit.dot(grad_unit)) / norm;
}

}  // namespace

CompactDualEncoder::CompactDualEncoder(BackendConfig cfg)
    : cfg_(std::move(cfg)), tokenizer_(cfg_.vocab_size, cfg_.context_length) {
  cfg_.validate();
  feature_dim_ = kGrid * kGrid * kCellFeatures;

  Eigen::Index offset = 0;
  auto block = [&offset](Eigen::Index rows, Eigen::Index cols) {
    Block b{offset, rows, cols};
    offset += rows * cols;
    return b;
  };
  const Eigen::Index d = cfg_.joint_dim;
  const Eigen::Index h = cfg_.image_hidden;
  const Eigen::Index w = cfg_.text_width;
  img_w1_ = block(h, feature_dim_);
  img_b1_ = block(h, 1);
  img_w2_ = block(d, h);
  image_end_ = offset;
  tok_emb_ = block(cfg_.vocab_size, w);
  pos_emb_ = block(cfg_.context_length, w);
  ctx_self_ = block(w, w);
  ctx_mean_ = block(w, w);
  ctx_bias_ = block(w, 1);
  txt_proj_ = block(d, w);
  params_ = Vector::Zero(offset);
  initialize();
}

void CompactDualEncoder::initialize() {
  Rng rng{cfg_.init_seed, 0x656e636f646572ULL};
  auto fill = [&](const Block& b, double scale) {
    auto m = view(params_, b);
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = scale * rng.normal();
    }
  };
  auto fan_in = [](const Block& b) { return 1.0 / std::sqrt(static_cast<double>(b.cols)); };
  fill(img_w1_, fan_in(img_w1_));
  fill(img_w2_, fan_in(img_w2_));
  fill(tok_emb_, 1.0);
  fill(pos_emb_, 0.1);
  fill(ctx_self_, fan_in(ctx_self_));
  fill(ctx_mean_, fan_in(ctx_mean_));
  fill(txt_proj_, fan_in(txt_proj_));
}

CompactDualEncoder::ConstMatrixMap CompactDualEncoder::view(const Block& b) const {
  return ConstMatrixMap(params_.data() + b.offset, b.rows, b.cols);
}

CompactDualEncoder::MatrixMap CompactDualEncoder::view(Vector& buffer, const Block& b) {
  return MatrixMap(buffer.data() + b.offset, b.rows, b.cols);
}

ImageFeatures CompactDualEncoder::image_features(const ImageInput& img) const {
  const ImageInput prepared = resize_square(img, cfg_.input_size);
  cv::Mat rgb;
  prepared.pixels.convertTo(rgb, CV_64FC3, 1.0 / 255.0);
  cv::Mat lum(rgb.size(), CV_64F);
  for (int y = 0; y < rgb.rows; ++y) {
    const auto* src = rgb.ptr<cv::Vec3d>(y);
    auto* dst = lum.ptr<double>(y);
    for (int x = 0; x < rgb.cols; ++x) dst[x] = 0.299 * src[x][0] + 0.587 * src[x][1] + 0.114 * src[x][2];
  }
  cv::Mat gx, gy, lap;
  cv::Sobel(lum, gx, CV_64F, 1, 0, 3, 1.0 / 8.0);
  cv::Sobel(lum, gy, CV_64F, 0, 1, 3, 1.0 / 8.0);
  cv::Laplacian(lum, lap, CV_64F, 1);

  ImageFeatures out;
  out.values = Vector::Zero(feature_dim_);
  const int side = cfg_.input_size;
  Eigen::Index k = 0;
  for (int gyi = 0; gyi < kGrid; ++gyi) {
    const int y0 = gyi * side / kGrid;
    const int y1 = (gyi + 1) * side / kGrid;
    for (int gxi = 0; gxi < kGrid; ++gxi) {
      const int x0 = gxi * side / kGrid;
      const int x1 = (gxi + 1) * side / kGrid;
      double r = 0, g = 0, b = 0, l = 0, l2 = 0, grad = 0, lap_abs = 0;
      for (int y = y0; y < y1; ++y) {
        const auto* px = rgb.ptr<cv::Vec3d>(y);
        const auto* lp = lum.ptr<double>(y);
        const auto* gxp = gx.ptr<double>(y);
        const auto* gyp = gy.ptr<double>(y);
        const auto* lapp = lap.ptr<double>(y);
        for (int x = x0; x < x1; ++x) {
          r += px[x][0];
          g += px[x][1];
          b += px[x][2];
          l += lp[x];
          l2 += lp[x] * lp[x];
          grad += std::hypot(gxp[x], gyp[x]);
          lap_abs += std::abs(lapp[x]);
        }
      }
      const double n = static_cast<double>((y1 - y0) * (x1 - x0));
      const double mean_l = l / n;
      const double sd = std::sqrt(std::max(0.0, l2 / n - mean_l * mean_l));
      out.values[k++] = 2.0 * (r / n - 0.5);
      out.values[k++] = 2.0 * (g / n - 0.5);
      out.values[k++] = 2.0 * (b / n - 0.5);
      out.values[k++] = 4.0 * sd;
      out.values[k++] = 8.0 * grad / n;
      out.values[k++] = 4.0 * lap_abs / n;
    }
  }
  return out;
}

ImageTrace CompactDualEncoder::forward_image(const ImageFeatures& features) const {
  if (features.values.size() != feature_dim_) throw InputError("image feature size mismatch");
  ImageTrace t;
  t.features = features.values;
  t.hidden = (view(img_w1_) * t.features + view(img_b1_).col(0)).array().tanh().matrix();
  t.raw = view(img_w2_) * t.hidden;
  double norm = 0.0;
  t.unit = normalized(t.raw, norm);
  return t;
}

void CompactDualEncoder::backward_image(const ImageTrace& trace, const Vector& grad_unit,
                                        Vector& grad) const {
  const Vector g_raw = unnormalize_grad(trace.unit, trace.raw.norm(), grad_unit);
  view(grad, img_w2_).noalias() += g_raw * trace.hidden.transpose();
  const Vector g_hidden = view(img_w2_).transpose() * g_raw;
  const Vector g_pre = g_hidden.array() * (1.0 - trace.hidden.array().square());
  view(grad, img_w1_).noalias() += g_pre * trace.features.transpose();
  view(grad, img_b1_).col(0) += g_pre;
}

Vector CompactDualEncoder::encode_image(const ImageInput& img) const {
  return forward_image(image_features(img)).unit;
}

TextTrace CompactDualEncoder::forward_text(const TokenSequence& tokens,
                                           std::vector<std::size_t> outputs) const {
  const auto n = static_cast<Eigen::Index>(tokens.size());
  if (n > cfg_.context_length) throw InputError("token sequence exceeds the context length");
  const auto emb = view(tok_emb_);
  const auto pos = view(pos_emb_);
  TextTrace t;
  t.tokens = tokens;
  t.inputs.resize(n, cfg_.text_width);
  for (Eigen::Index i = 0; i < n; ++i) t.inputs.row(i) = emb.row(tokens.ids[static_cast<std::size_t>(i)]) + pos.row(i);
  t.context = t.inputs.colwise().mean().transpose();
  const Vector shared = view(ctx_mean_) * t.context + view(ctx_bias_).col(0);
  const Matrix pre = (t.inputs * view(ctx_self_).transpose()).rowwise() + shared.transpose();
  t.hidden = pre.array().tanh().matrix();

  t.outputs = std::move(outputs);
  const auto m = static_cast<Eigen::Index>(t.outputs.size());
  t.raw.resize(m, cfg_.joint_dim);
  t.unit.resize(m, cfg_.joint_dim);
  const auto proj = view(txt_proj_);
  for (Eigen::Index r = 0; r < m; ++r) {
    const Vector raw = proj * t.hidden.row(static_cast<Eigen::Index>(t.outputs[static_cast<std::size_t>(r)])).transpose();
    double norm = 0.0;
    t.unit.row(r) = normalized(raw, norm).transpose();
    t.raw.row(r) = raw.transpose();
  }
  return t;
}

TextTrace CompactDualEncoder::forward_sentence(const TokenSequence& tokens) const {
  return forward_text(tokens, {tokens.eot_index()});
}

TextTrace CompactDualEncoder::forward_words(const TokenSequence& tokens) const {
  auto positions = tokens.word_positions();
  if (positions.empty()) throw InputError("prompt contains no words");
  return forward_text(tokens, std::move(positions));
}

void CompactDualEncoder::backward_text(const TextTrace& trace, const Matrix& grad_unit,
                                       Vector& grad) const {
  const auto n = trace.inputs.rows();
  const auto w = trace.inputs.cols();
  if (grad_unit.rows() != static_cast<Eigen::Index>(trace.outputs.size())) {
    throw InputError("text gradient rows do not match the traced outputs");
  }
  const auto proj = view(txt_proj_);
  auto d_proj = view(grad, txt_proj_);
  Matrix g_hidden = Matrix::Zero(n, w);
  for (Eigen::Index r = 0; r < grad_unit.rows(); ++r) {
    const Vector raw = trace.raw.row(r).transpose();
    const Vector unit = trace.unit.row(r).transpose();
    const Vector g_raw = unnormalize_grad(unit, raw.norm(), grad_unit.row(r).transpose());
    const auto pos = static_cast<Eigen::Index>(trace.outputs[static_cast<std::size_t>(r)]);
    d_proj.noalias() += g_raw * trace.hidden.row(pos);
    g_hidden.row(pos) += (proj.transpose() * g_raw).transpose();
  }
  const Matrix g_pre = g_hidden.array() * (1.0 - trace.hidden.array().square());
  view(grad, ctx_self_).noalias() += g_pre.transpose() * trace.inputs;
  const Vector g_pre_sum = g_pre.colwise().sum().transpose();
  view(grad, ctx_mean_).noalias() += g_pre_sum * trace.context.transpose();
  view(grad, ctx_bias_).col(0) += g_pre_sum;

  const Vector g_context = view(ctx_mean_).transpose() * g_pre_sum;
  Matrix g_inputs = g_pre * view(ctx_self_);
  g_inputs.rowwise() += (g_context / static_cast<double>(n)).transpose();

  auto d_emb = view(grad, tok_emb_);
  auto d_pos = view(grad, pos_emb_);
  for (Eigen::Index i = 0; i < n; ++i) {
    d_emb.row(trace.tokens.ids[static_cast<std::size_t>(i)]) += g_inputs.row(i);
    d_pos.row(i) += g_inputs.row(i);
  }
}

Matrix CompactDualEncoder::encode_sentences(std::span<const std::string> sentences) const {
  Matrix out(static_cast<Eigen::Index>(sentences.size()), cfg_.joint_dim);
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    if (sentences[i].empty()) throw InputError("empty sentence");
    out.row(static_cast<Eigen::Index>(i)) = forward_sentence(tokenizer_.encode(sentences[i])).unit.row(0);
  }
  return out;
}

Matrix CompactDualEncoder::encode_words(std::string_view initial_prompt) const {
  const auto tokens = tokenizer_.encode(initial_prompt);
  if (tokens.word_positions().empty()) throw InputError("initial prompt contains no words");
  if (cfg_.word_mode == WordMode::contextual) return forward_words(tokens).unit;

  const auto positions = tokens.word_positions();
  Matrix out(static_cast<Eigen::Index>(positions.size()), cfg_.joint_dim);
  for (std::size_t i = 0; i < positions.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) =
        forward_sentence(tokenizer_.encode(tokens.pieces[positions[i]])).unit.row(0);
  }
  return out;
}

Vector CompactDualEncoder::update_mask(const TrainableMask& mask) const {
  Vector m = Vector::Zero(params_.size());
  if (mask.image_tower) m.head(image_end_).setOnes();
  if (mask.text_tower) m.tail(params_.size() - image_end_).setOnes();
  return m;
}

void CompactDualEncoder::save_weights(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write weights: " + path.string());
  const auto count = static_cast<std::uint64_t>(params_.size());
  out.write(kWeightsMagic, sizeof(kWeightsMagic));
  out.write(reinterpret_cast<const char*>(&count), sizeof(count));
  out.write(reinterpret_cast<const char*>(params_.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
  if (!out) throw InputError("failed writing weights: " + path.string());
}

void CompactDualEncoder::load_weights(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw BackendError("cannot open weights: " + path.string());
  char magic[sizeof(kWeightsMagic)] = {};
  std::uint64_t count = 0;
  in.read(magic, sizeof(magic));
  in.read(reinterpret_cast<char*>(&count), sizeof(count));
  if (!in || std::memcmp(magic, kWeightsMagic, sizeof(magic)) != 0) {
    throw BackendError("not a weights blob: " + path.string());
  }
  if (count != static_cast<std::uint64_t>(params_.size())) {
    throw BackendError("weights blob holds " + std::to_string(count) + " values, model expects " +
                       std::to_string(params_.size()));
  }
  Vector loaded(params_.size());
  in.read(reinterpret_cast<char*>(loaded.data()), static_cast<std::streamsize>(count * sizeof(double)));
  if (!in) throw BackendError("truncated weights blob: " + path.string());
  params_ = std::move(loaded);
}

}  // namespace tspmgs
