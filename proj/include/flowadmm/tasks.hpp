#pragma once

#include <cstdint>
#include <vector>

#include "flowadmm/flow_prior.hpp"
#include "flowadmm/linops.hpp"
#include "flowadmm/rng.hpp"
#include "flowadmm/tensor.hpp"

namespace flowadmm {

// One degradation pipeline: forward operator plus measurement noise.
struct TaskSpec {
  TaskOpSpec op;
  double noise_sigma = 0.0;
  std::uint64_t degradation_seed = 0;

  // Mask operators add noise only where pixels are observed (the holes are
  // structurally zero), matching the measurement model for inpainting.
  bool noise_on_observed_only() const {
    return op.kind == OpKind::box_mask || op.kind == OpKind::bernoulli_mask;
  }
};

// y = A x + nu with nu ~ N(0, sigma^2 I) in measurement space, deterministic
// given the rng state.
Tensor degrade(const Tensor& x, const TaskSpec& task, const DiagonalizableOp& op, SeededRng& rng);

// 10 log10(peak^2 / mse), capped at 99 dB when mse == 0.
double psnr(const Tensor& x, const Tensor& ref, double peak = 1.0);

// Mean local SSIM with the canonical 11x11 Gaussian window (sigma 1.5),
// C1 = (0.01 peak)^2, C2 = (0.03 peak)^2, valid-mode windows; multi-channel
// inputs are averaged over channels.
double ssim(const Tensor& x, const Tensor& ref, double peak = 1.0);

// ---- Synthetic desk-scale corpus ----
//
// Template images are smoothed random fields plus one random geometric shape
// (disk or rectangle); corpus images perturb a template with i.i.d. Gaussian
// jitter. The matching mixture prior below is then the exact data prior of
// the corpus, which is what makes desk-scale restoration claims checkable.

struct CorpusSpec {
  std::uint64_t seed = 2024;
  std::size_t n_templates = 8;
  std::size_t height = 32;
  std::size_t width = 32;
  double jitter_sigma = 0.05;
};

std::vector<Tensor> make_template_images(const CorpusSpec& spec);
// Image i = template[i % n_templates] + jitter; deterministic per (spec, i).
Tensor make_corpus_image(const CorpusSpec& spec, const std::vector<Tensor>& templates, std::size_t index);
std::vector<Tensor> make_corpus(const CorpusSpec& spec, std::size_t count);

// Degraded-input metric convention: measurements are lifted back to image
// space with Aᵀ when shapes differ (zero-filled upsampling for
// super-resolution), then clipped.
Tensor degraded_display(const Tensor& y, const DiagonalizableOp& op);

// Exact mixture prior of the corpus distribution: templates as component
// means, uniform weights, isotropic variance jitter_sigma^2.
GmmPrior corpus_gmm_prior(const CorpusSpec& spec);

}  // namespace flowadmm
