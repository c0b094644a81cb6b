#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "cilp/common.hpp"
#include "cilp/mask.hpp"
#include "cilp/mask_analysis.hpp"

namespace cilp {

/// Linear concept embedding: zero set of d(v) = (v - bias * normal) . normal.
/// A latent vector shows the concept when d(v) > threshold.
struct Hyperplane {
  std::vector<double> normal;
  double bias = 0.0;
  double threshold = 0.0;

  std::size_t dim() const { return normal.size(); }
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline double distance(const Hyperplane& h, std::span<const double> v) {
  if (v.size() != h.normal.size())
    throw std::invalid_argument("dimension mismatch: " + std::to_string(v.size()) + " vs " + std::to_string(h.dim()));
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) s += (v[i] - h.bias * h.normal[i]) * h.normal[i];
  return s;
}

/// Unit normal, bias rescaled so the zero set is unchanged.
inline Hyperplane normalize(const Hyperplane& h) {
  const double n = norm(h.normal);
  if (!(n > 0.0) || !std::isfinite(n)) throw Error("cannot normalize hyperplane with zero normal");
  Hyperplane out{h.normal, h.bias * n, h.threshold / n};
  for (auto& x : out.normal) x /= n;
  return out;
}

/// Hyperplane whose distance function is the mean of the normalized inputs'
/// distance functions.
inline Hyperplane ensemble(std::span<const Hyperplane> hs) {
  if (hs.empty()) throw std::invalid_argument("ensemble of no hyperplanes");
  const std::size_t dim = hs.front().dim();
  const double count = static_cast<double>(hs.size());
  std::vector<double> mean_normal(dim, 0.0);
  double weighted_bias = 0.0;
  double threshold = 0.0;
  for (const auto& h : hs) {
    if (h.dim() != dim) throw std::invalid_argument("ensemble: dimension mismatch");
    const Hyperplane u = normalize(h);
    for (std::size_t i = 0; i < dim; ++i) mean_normal[i] += u.normal[i] / count;
    weighted_bias += u.bias * dot(u.normal, u.normal) / count;
    threshold += u.threshold / count;
  }
  const double sq = dot(mean_normal, mean_normal);
  if (!(sq > 1e-24)) throw Error("degenerate ensemble: normals cancel");
  return {std::move(mean_normal), weighted_bias / sq, threshold};
}

inline double cosine_distance(std::span<const double> a, std::span<const double> b) {
  const double na = norm(a), nb = norm(b);
  if (na == 0.0 || nb == 0.0) throw std::invalid_argument("cosine distance of zero vector");
  return 1.0 - dot(a, b) / (na * nb);
}

struct Window {
  int height = 1;
  int width = 1;
};

struct EncodedMask {
  BinaryMask mask;
  Window window;
  int stride = 1;
  double threshold = 1.0;
};

/// Output pixel (i, j) looks at the window centred on input pixel
/// (j * stride, i * stride), rows [cy - kh/2, cy - kh/2 + kh) and likewise for
/// columns, zero-padded at the border. It is set iff some concept instance
/// (8-connected cluster) has at least `threshold` of its area inside the window.
inline EncodedMask intersection_encode(const BinaryMask& segmask, Window window, int stride, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) throw std::invalid_argument("threshold must be in (0, 1]");
  if (stride < 1) throw std::invalid_argument("stride must be >= 1");
  if (window.height < 1 || window.width < 1 || window.height > segmask.height() || window.width > segmask.width())
    throw std::invalid_argument("window must be non-empty and fit inside the mask");
  const int w = segmask.width(), h = segmask.height();
  const int out_w = (w - 1) / stride + 1, out_h = (h - 1) / stride + 1;
  EncodedMask out{BinaryMask(out_w, out_h), window, stride, threshold};
  const auto instances = connected_components(segmask);
  // Summed-area table per instance, restricted to the instance's bounding box.
  for (const auto& inst : instances) {
    const int bw = inst.max_x - inst.min_x + 1, bh = inst.max_y - inst.min_y + 1;
    std::vector<std::int64_t> sat(static_cast<std::size_t>((bw + 1) * (bh + 1)), 0);
    auto at = [&](int x, int y) -> std::int64_t& { return sat[static_cast<std::size_t>(y * (bw + 1) + x)]; };
    for (const auto& p : inst.pixels) at(p.x - inst.min_x + 1, p.y - inst.min_y + 1) += 1;
    for (int y = 1; y <= bh; ++y)
      for (int x = 1; x <= bw; ++x) at(x, y) += at(x - 1, y) + at(x, y - 1) - at(x - 1, y - 1);
    auto rect = [&](int x0, int y0, int x1, int y1) -> std::int64_t {  // inclusive, image coords
      x0 = std::max(x0, inst.min_x) - inst.min_x;
      y0 = std::max(y0, inst.min_y) - inst.min_y;
      x1 = std::min(x1, inst.max_x) - inst.min_x;
      y1 = std::min(y1, inst.max_y) - inst.min_y;
      if (x0 > x1 || y0 > y1) return 0;
      return at(x1 + 1, y1 + 1) - at(x0, y1 + 1) - at(x1 + 1, y0) + at(x0, y0);
    };
    const double area = static_cast<double>(inst.area());
    for (int i = 0; i < out_h; ++i) {
      const int y0 = i * stride - window.height / 2, y1 = y0 + window.height - 1;
      if (y1 < inst.min_y || y0 > inst.max_y) continue;
      for (int j = 0; j < out_w; ++j) {
        if (out.mask.at(j, i)) continue;
        const int x0 = j * stride - window.width / 2, x1 = x0 + window.width - 1;
        if (x1 < inst.min_x || x0 > inst.max_x) continue;
        if (static_cast<double>(rect(x0, y0, x1, y1)) / area >= threshold - 1e-12) out.mask.set(j, i);
      }
    }
  }
  return out;
}

/// Dataset-level IoU: total intersection over total union; 1 when both are empty.
inline double siou(std::span<const BinaryMask> pred, std::span<const BinaryMask> gt) {
  if (pred.size() != gt.size()) throw std::invalid_argument("siou: mask counts differ");
  std::size_t inter = 0, uni = 0;
  for (std::size_t k = 0; k < pred.size(); ++k) {
    if (pred[k].width() != gt[k].width() || pred[k].height() != gt[k].height())
      throw std::invalid_argument("siou: shape mismatch");
    const auto a = pred[k].pixels(), b = gt[k].pixels();
    for (std::size_t i = 0; i < a.size(); ++i) {
      inter += a[i] & b[i];
      uni += a[i] | b[i];
    }
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

constexpr double kLossEpsilon = 1e-7;

struct LossValue {
  double loss = 0.0;
  double dice = 0.0;
  double bbce = 0.0;
  std::vector<double> gradient;  // d loss / d pred
};

/// dice_weight * (1 - 2 sum(pg) / (sum p + sum g + eps)) + balanced BCE, where
/// the BCE weights each pixel by n / (classes present * pixels of its class).
inline LossValue dice_bbce_loss_with_gradient(std::span<const double> pred, std::span<const std::uint8_t> gt,
                                              double dice_weight = 5.0) {
  if (pred.size() != gt.size()) throw std::invalid_argument("loss: shape mismatch");
  const std::size_t n = pred.size();
  LossValue out;
  out.gradient.assign(n, 0.0);
  if (n == 0) return out;
  double inter = 0.0, sum_p = 0.0, sum_g = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < n; ++i) {
    inter += pred[i] * gt[i];
    sum_p += pred[i];
    sum_g += gt[i];
    n_pos += gt[i] ? 1 : 0;
  }
  const std::size_t n_neg = n - n_pos;
  const double denom = sum_p + sum_g + kLossEpsilon;
  out.dice = 1.0 - 2.0 * inter / denom;
  const double classes = (n_pos > 0 ? 1.0 : 0.0) + (n_neg > 0 ? 1.0 : 0.0);
  const double w_pos = n_pos ? static_cast<double>(n) / (classes * static_cast<double>(n_pos)) : 0.0;
  const double w_neg = n_neg ? static_cast<double>(n) / (classes * static_cast<double>(n_neg)) : 0.0;
  const double inv_n = 1.0 / static_cast<double>(n);
  double bce = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double p = std::clamp(pred[i], kLossEpsilon, 1.0 - kLossEpsilon);
    const bool clamped = p != pred[i];
    double g_bce;
    if (gt[i]) {
      bce -= w_pos * std::log(p);
      g_bce = clamped ? 0.0 : -w_pos / p;
    } else {
      bce -= w_neg * std::log(1.0 - p);
      g_bce = clamped ? 0.0 : w_neg / (1.0 - p);
    }
    const double g_dice = -2.0 * (gt[i] * denom - inter) / (denom * denom);
    out.gradient[i] = dice_weight * g_dice + inv_n * g_bce;
  }
  out.bbce = bce * inv_n;
  out.loss = dice_weight * out.dice + out.bbce;
  return out;
}

inline double dice_bbce_loss(std::span<const double> pred, std::span<const std::uint8_t> gt, double dice_weight = 5.0) {
  return dice_bbce_loss_with_gradient(pred, gt, dice_weight).loss;
}

/// Channels x height x width activations.
struct FeatureMap {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> values;

  FeatureMap() = default;
  FeatureMap(int c, int h, int w)
      : channels(c), height(h), width(w), values(static_cast<std::size_t>(c) * static_cast<std::size_t>(h) * static_cast<std::size_t>(w), 0.0) {}

  double& at(int c, int y, int x) { return values[offset(c, y, x)]; }
  double at(int c, int y, int x) const { return values[offset(c, y, x)]; }

  std::vector<double> pixel(int y, int x) const {
    std::vector<double> v(static_cast<std::size_t>(channels));
    for (int c = 0; c < channels; ++c) v[static_cast<std::size_t>(c)] = at(c, y, x);
    return v;
  }

 private:
  std::size_t offset(int c, int y, int x) const {
    return (static_cast<std::size_t>(c) * static_cast<std::size_t>(height) + static_cast<std::size_t>(y)) *
               static_cast<std::size_t>(width) +
           static_cast<std::size_t>(x);
  }
};

inline double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

/// Per-pixel concept prediction: distance above the hyperplane's threshold.
inline BinaryMask predict_mask(const Hyperplane& h, const FeatureMap& f) {
  if (static_cast<std::size_t>(f.channels) != h.dim()) throw std::invalid_argument("dimension mismatch");
  BinaryMask out(f.width, f.height);
  for (int y = 0; y < f.height; ++y)
    for (int x = 0; x < f.width; ++x)
      if (distance(h, f.pixel(y, x)) > h.threshold) out.set(x, y);
  return out;
}

enum class Optimizer { sgd_momentum, adam };

struct TrainConfig {
  double learning_rate = 0.05;
  int epochs = 20;
  int batch = 8;
  std::uint64_t seed = 0;
  Optimizer optimizer = Optimizer::sgd_momentum;
  double momentum = 0.9;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double dice_weight = 5.0;
};

/// Logistic concept model on per-pixel channel vectors (a 1x1 convolution):
/// p = sigmoid(w . v - c), trained on the Dice + balanced BCE loss.
/// Returns the hyperplane with normal w and bias c / |w|^2.
inline Hyperplane train_concept_model(std::span<const FeatureMap> features, std::span<const BinaryMask> encodings,
                                      const TrainConfig& config = {}) {
  if (features.size() != encodings.size()) throw std::invalid_argument("feature/encoding count mismatch");
  if (features.empty()) throw std::invalid_argument("no training data");
  if (config.batch < 1 || config.epochs < 0) throw std::invalid_argument("invalid training config");
  const int dim = features.front().channels;
  for (std::size_t k = 0; k < features.size(); ++k) {
    if (features[k].channels != dim) throw std::invalid_argument("feature maps differ in channel count");
    if (features[k].width != encodings[k].width() || features[k].height != encodings[k].height())
      throw std::invalid_argument("feature map and encoding sizes differ");
  }
  const std::size_t d = static_cast<std::size_t>(dim);
  Rng rng(config.seed);
  std::vector<double> params(d + 1, 0.0);  // w..., c
  for (std::size_t i = 0; i < d; ++i) params[i] = 0.01 * rng.normal();
  std::vector<double> m1(d + 1, 0.0), m2(d + 1, 0.0);
  std::size_t step = 0;

  std::vector<std::size_t> order(features.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> probs;
  std::vector<std::uint8_t> labels;
  std::vector<const double*> rows;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(config.batch));
      probs.clear();
      labels.clear();
      std::vector<std::vector<double>> pixels;
      for (std::size_t s = start; s < stop; ++s) {
        const auto& f = features[order[s]];
        const auto& g = encodings[order[s]];
        for (int y = 0; y < f.height; ++y) {
          for (int x = 0; x < f.width; ++x) {
            auto v = f.pixel(y, x);
            double z = -params[d];
            for (std::size_t i = 0; i < d; ++i) z += params[i] * v[i];
            // Sigmoid first; any upsampling would act on probabilities.
            probs.push_back(sigmoid(z));
            labels.push_back(g.at(x, y));
            pixels.push_back(std::move(v));
          }
        }
      }
      const LossValue lv = dice_bbce_loss_with_gradient(probs, labels, config.dice_weight);
      if (!std::isfinite(lv.loss))
        throw Error("non-finite loss in epoch " + std::to_string(epoch) + ", batch at sample " + std::to_string(start) +
                    " (dice " + std::to_string(lv.dice) + ", bbce " + std::to_string(lv.bbce) + ")");
      std::vector<double> grad(d + 1, 0.0);
      for (std::size_t k = 0; k < probs.size(); ++k) {
        const double dz = lv.gradient[k] * probs[k] * (1.0 - probs[k]);
        for (std::size_t i = 0; i < d; ++i) grad[i] += dz * pixels[k][i];
        grad[d] -= dz;
      }
      ++step;
      for (std::size_t i = 0; i <= d; ++i) {
        if (config.optimizer == Optimizer::sgd_momentum) {
          m1[i] = config.momentum * m1[i] + grad[i];
          params[i] -= config.learning_rate * m1[i];
        } else {
          m1[i] = config.beta1 * m1[i] + (1 - config.beta1) * grad[i];
          m2[i] = config.beta2 * m2[i] + (1 - config.beta2) * grad[i] * grad[i];
          const double mh = m1[i] / (1 - std::pow(config.beta1, static_cast<double>(step)));
          const double vh = m2[i] / (1 - std::pow(config.beta2, static_cast<double>(step)));
          params[i] -= config.learning_rate * mh / (std::sqrt(vh) + 1e-8);
        }
      }
    }
  }
  Hyperplane h{std::vector<double>(params.begin(), params.begin() + static_cast<std::ptrdiff_t>(d)), 0.0, 0.0};
  const double sq = dot(h.normal, h.normal);
  if (!(sq > 0.0) || !std::isfinite(sq)) throw Error("training produced a zero normal");
  h.bias = params[d] / sq;
  return h;
}

struct EnsembleReport {
  std::vector<Hyperplane> runs;
  std::vector<double> run_siou;
  Hyperplane ensemble;
  double ensemble_siou = 0.0;
  double mean_run_siou = 0.0;
  /// Mean cosine distance of each run's normal to the ensemble normal.
  double mean_cosine_distance = 0.0;
};

inline double evaluate_siou(const Hyperplane& h, std::span<const FeatureMap> features, std::span<const BinaryMask> truth) {
  std::vector<BinaryMask> pred;
  pred.reserve(features.size());
  for (const auto& f : features) pred.push_back(predict_mask(h, f));
  return siou(pred, truth);
}

/// `repeats` shuffled k-fold runs on the training data (each run fits on the
/// other folds), scored and ensembled on the test data.
inline EnsembleReport cross_validated_ensemble(std::span<const FeatureMap> train_x, std::span<const BinaryMask> train_y,
                                               std::span<const FeatureMap> test_x, std::span<const BinaryMask> test_y,
                                               const TrainConfig& config = {}, int repeats = 3, int folds = 5) {
  if (repeats < 1 || folds < 2) throw std::invalid_argument("need repeats >= 1 and folds >= 2");
  if (train_x.size() < static_cast<std::size_t>(folds)) throw std::invalid_argument("fewer samples than folds");
  EnsembleReport report;
  for (int r = 0; r < repeats; ++r) {
    std::vector<std::size_t> idx(train_x.size());
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(r)));
    rng.shuffle(idx);
    for (int k = 0; k < folds; ++k) {
      std::vector<FeatureMap> xs;
      std::vector<BinaryMask> ys;
      for (std::size_t i = 0; i < idx.size(); ++i) {
        if (static_cast<int>(i % static_cast<std::size_t>(folds)) == k) continue;
        xs.push_back(train_x[idx[i]]);
        ys.push_back(train_y[idx[i]]);
      }
      TrainConfig run_config = config;
      run_config.seed = derive_seed(config.seed, static_cast<std::uint64_t>(1000 + r * folds + k));
      report.runs.push_back(train_concept_model(xs, ys, run_config));
      report.run_siou.push_back(evaluate_siou(report.runs.back(), test_x, test_y));
    }
  }
  report.ensemble = ensemble(report.runs);
  report.ensemble_siou = evaluate_siou(report.ensemble, test_x, test_y);
  report.mean_run_siou = std::accumulate(report.run_siou.begin(), report.run_siou.end(), 0.0) /
                         static_cast<double>(report.run_siou.size());
  double cos = 0.0;
  for (const auto& h : report.runs) cos += cosine_distance(h.normal, report.ensemble.normal);
  report.mean_cosine_distance = cos / static_cast<double>(report.runs.size());
  return report;
}

}  // namespace cilp
