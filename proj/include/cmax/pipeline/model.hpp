#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cmax/encoders/encoders.hpp"
#include "cmax/objective/objective.hpp"
#include "cmax/postproc/postproc.hpp"

namespace cmax {

// Trainable state for one objective variant: the GRU encoder(s), the linear
// encoder(s), and the temperature. Only the encoders the variant needs are
// present.
struct ModelParams {
  ObjectiveVariant variant = ObjectiveVariant::MultiViewFG;
  std::vector<GruParams> grus;
  std::vector<LinearParams> linears;
  Temperature temperature;

  std::size_t slot_count() const { return variant_slots(variant).count; }
  // Kind and index (into grus or linears) of the encoder feeding a slot.
  std::pair<EncoderKind, std::size_t> slot_encoder(std::size_t slot) const;
  // Short labels for the slots: "f"/"g", or "f1"/"f2", "g1"/"g2".
  std::string slot_label(std::size_t slot) const;

  // All parameter matrices in checkpoint order, excluding the temperature.
  std::vector<Matrix*> matrices();
  std::vector<const Matrix*> matrices() const;
  std::vector<std::string> matrix_names() const;
};

// Encoder parameters are drawn from streams keyed by encoder role, so
// variants sharing an encoder role start from identical weights.
ModelParams init_model(ObjectiveVariant variant, std::size_t dim, std::size_t hidden,
                       std::uint64_t seed);

// Same shapes, all zeros.
ModelParams zeros_like(const ModelParams& params);

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

struct BatchOptions {
  std::size_t context = 2;
  bool average = false;
  std::size_t power_iters = 5;
  double power_tol = 1e-8;
  std::uint64_t power_seed = 0;
};

struct BatchResult {
  double loss = 0.0;
  LossResult detail;
  std::vector<Matrix> slot_reps;                  // N x 2·hidden, before postprocessing
  std::vector<PrincipalComponent> components;     // one per slot
  ModelParams grads;                              // valid when requested
};

// One forward (and optionally backward) pass of the training objective over
// a batch of embedded sentences: training-time representations, per-slot
// postprocessing, agreement matrix, contrastive loss. When `frozen` is given
// those components replace power iteration.
BatchResult evaluate_batch(const ModelParams& params, const std::vector<const Matrix*>& sentences,
                           const BatchOptions& options, bool with_grads,
                           const std::vector<PrincipalComponent>* frozen = nullptr);

}  // namespace cmax
