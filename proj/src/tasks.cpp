#include "flowadmm/tasks.hpp"

#include <algorithm>
#include <cmath>

namespace flowadmm {

Tensor degrade(const Tensor& x, const TaskSpec& task, const DiagonalizableOp& op, SeededRng& rng) {
  if (!(task.noise_sigma >= 0.0) || !std::isfinite(task.noise_sigma)) {
    throw ParameterError("degrade: noise_sigma must be finite and >= 0");
  }
  Tensor y = op.apply(x);
  if (task.noise_sigma > 0.0) {
    Tensor nu = rng.standard_normal(y.shape());
    nu *= task.noise_sigma;
    if (task.noise_on_observed_only()) nu = op.apply(nu);
    y += nu;
  }
  return y;
}

double psnr(const Tensor& x, const Tensor& ref, double peak) {
  const double m = mse(x, ref);
  if (m == 0.0) return 99.0;
  const double value = 10.0 * std::log10(peak * peak / m);
  return std::min(value, 99.0);
}

namespace {

std::vector<double> ssim_window() {
  constexpr std::size_t kSize = 11;
  constexpr double kSigma = 1.5;
  std::vector<double> w(kSize * kSize);
  double sum = 0.0;
  for (std::size_t r = 0; r < kSize; ++r) {
    for (std::size_t c = 0; c < kSize; ++c) {
      const double dr = static_cast<double>(r) - 5.0;
      const double dc = static_cast<double>(c) - 5.0;
      const double v = std::exp(-(dr * dr + dc * dc) / (2.0 * kSigma * kSigma));
      w[r * kSize + c] = v;
      sum += v;
    }
  }
  for (double& v : w) v /= sum;
  return w;
}

double ssim_plane(const double* x, const double* ref, std::size_t h, std::size_t wdt, double peak) {
  constexpr std::size_t kSize = 11;
  static const std::vector<double> window = ssim_window();
  const double c1 = (0.01 * peak) * (0.01 * peak);
  const double c2 = (0.03 * peak) * (0.03 * peak);

  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t r0 = 0; r0 + kSize <= h; ++r0) {
    for (std::size_t c0 = 0; c0 + kSize <= wdt; ++c0) {
      double mx = 0.0, my = 0.0, sxx = 0.0, syy = 0.0, sxy = 0.0;
      for (std::size_t r = 0; r < kSize; ++r) {
        for (std::size_t c = 0; c < kSize; ++c) {
          const double wgt = window[r * kSize + c];
          const double a = x[(r0 + r) * wdt + (c0 + c)];
          const double b = ref[(r0 + r) * wdt + (c0 + c)];
          mx += wgt * a;
          my += wgt * b;
          sxx += wgt * a * a;
          syy += wgt * b * b;
          sxy += wgt * a * b;
        }
      }
      const double vx = sxx - mx * mx;
      const double vy = syy - my * my;
      const double cov = sxy - mx * my;
      const double value =
          ((2.0 * mx * my + c1) * (2.0 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
      total += value;
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

}  // namespace

double ssim(const Tensor& x, const Tensor& ref, double peak) {
  require_same_shape(x, ref, "ssim");
  const ImageDims d = image_dims(x.shape());
  if (d.height < 11 || d.width < 11) throw InvalidShapeError("ssim: image smaller than the 11x11 window");
  const std::size_t plane = d.height * d.width;
  double total = 0.0;
  for (std::size_t c = 0; c < d.channels; ++c) {
    total += ssim_plane(x.data() + c * plane, ref.data() + c * plane, d.height, d.width, peak);
  }
  return total / static_cast<double>(d.channels);
}

namespace {

// Separable 5-point box blur with wrap-around, repeated to smooth a noise
// field into soft blobs.
void box_smooth(std::vector<double>& img, std::size_t h, std::size_t w, std::size_t passes) {
  std::vector<double> tmp(img.size());
  for (std::size_t pass = 0; pass < passes; ++pass) {
    for (std::size_t r = 0; r < h; ++r) {
      for (std::size_t c = 0; c < w; ++c) {
        double acc = 0.0;
        for (int d = -2; d <= 2; ++d) acc += img[r * w + (c + w + static_cast<std::size_t>(d + 2) - 2) % w];
        tmp[r * w + c] = acc / 5.0;
      }
    }
    for (std::size_t c = 0; c < w; ++c) {
      for (std::size_t r = 0; r < h; ++r) {
        double acc = 0.0;
        for (int d = -2; d <= 2; ++d) acc += tmp[((r + h + static_cast<std::size_t>(d + 2) - 2) % h) * w + c];
        img[r * w + c] = acc / 5.0;
      }
    }
  }
}

}  // namespace

std::vector<Tensor> make_template_images(const CorpusSpec& spec) {
  if (spec.n_templates == 0) throw ParameterError("CorpusSpec: n_templates must be >= 1");
  std::vector<Tensor> templates;
  templates.reserve(spec.n_templates);
  const std::size_t h = spec.height;
  const std::size_t w = spec.width;
  for (std::size_t idx = 0; idx < spec.n_templates; ++idx) {
    SeededRng rng(mix_seed(spec.seed, 0x7E000000ULL + idx));
    std::vector<double> img(h * w);
    for (double& v : img) v = rng.next_uniform();
    box_smooth(img, h, w, 3);

    // Normalize the field into [0.2, 0.8].
    auto [mn_it, mx_it] = std::minmax_element(img.begin(), img.end());
    const double mn = *mn_it;
    const double range = std::max(*mx_it - mn, 1e-12);
    for (double& v : img) v = 0.2 + 0.6 * (v - mn) / range;

    // One geometric shape: a disk or an axis-aligned rectangle.
    const bool disk = rng.next_uniform() < 0.5;
    const double delta = (rng.next_uniform() < 0.5 ? -0.25 : 0.25);
    const double cy = (0.25 + 0.5 * rng.next_uniform()) * static_cast<double>(h);
    const double cx = (0.25 + 0.5 * rng.next_uniform()) * static_cast<double>(w);
    const double radius = (0.1 + 0.15 * rng.next_uniform()) * static_cast<double>(std::min(h, w));
    for (std::size_t r = 0; r < h; ++r) {
      for (std::size_t c = 0; c < w; ++c) {
        const double dy = static_cast<double>(r) - cy;
        const double dx = static_cast<double>(c) - cx;
        const bool inside = disk ? (dy * dy + dx * dx <= radius * radius)
                                 : (std::fabs(dy) <= radius && std::fabs(dx) <= radius);
        if (inside) img[r * w + c] = std::clamp(img[r * w + c] + delta, 0.05, 0.95);
      }
    }
    templates.push_back(Tensor({h, w}, std::move(img)));
  }
  return templates;
}

Tensor make_corpus_image(const CorpusSpec& spec, const std::vector<Tensor>& templates, std::size_t index) {
  const Tensor& base = templates[index % templates.size()];
  SeededRng rng(mix_seed(spec.seed, 0x10000000ULL + index));
  Tensor jitter = rng.standard_normal(base.shape());
  jitter *= spec.jitter_sigma;
  return base + jitter;
}

std::vector<Tensor> make_corpus(const CorpusSpec& spec, std::size_t count) {
  const std::vector<Tensor> templates = make_template_images(spec);
  std::vector<Tensor> images;
  images.reserve(count);
  for (std::size_t i = 0; i < count; ++i) images.push_back(make_corpus_image(spec, templates, i));
  return images;
}

Tensor degraded_display(const Tensor& y, const DiagonalizableOp& op) {
  if (y.shape() == op.input_shape()) return clip01(y);
  return clip01(op.adjoint(y));
}

GmmPrior corpus_gmm_prior(const CorpusSpec& spec) {
  const std::vector<Tensor> templates = make_template_images(spec);
  std::vector<double> weights(templates.size(), 1.0 / static_cast<double>(templates.size()));
  // Make the weights sum to 1 exactly.
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < weights.size(); ++i) acc += weights[i];
  weights.back() = 1.0 - acc;
  std::vector<GmmPrior::Component> components;
  components.reserve(templates.size());
  for (const Tensor& t : templates) {
    components.push_back(GmmPrior::Component{t, {spec.jitter_sigma * spec.jitter_sigma}});
  }
  return GmmPrior(std::move(weights), std::move(components));
}

}  // namespace flowadmm
