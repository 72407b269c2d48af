#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "cmax/encoders/encoders.hpp"
#include "cmax/pipeline/checkpoint.hpp"
#include "cmax/pipeline/model.hpp"
#include "cmax/postproc/postproc.hpp"
#include "cmax/textio/textio.hpp"

namespace cmax {

struct EncodedCorpus {
  Regime regime = Regime::Unsupervised;
  std::vector<std::string> view_labels;  // one per slot, e.g. "f", "g"
  std::vector<Matrix> views;             // postprocessed, one row per sentence
  // Unsupervised: mean of the views. Supervised: concatenation. A
  // single-view model's ensemble is its only view.
  Matrix ensemble;
};

// Fills `ensemble` from `views` according to the regime.
void combine_views(EncodedCorpus& encoded);

// Seed used for the test-time power iteration of one encoder. It depends on
// the encoder's role, not its slot, so variants sharing an encoder agree.
std::uint64_t view_postproc_seed(std::uint64_t seed, EncoderKind kind, std::size_t index);

// Test-time representations of every sentence; the whole set is one batch for
// postprocessing.
EncodedCorpus encode_sentences(const ModelParams& params, const std::vector<Matrix>& embedded,
                               Regime regime, std::size_t power_iters, double power_tol,
                               std::uint64_t seed);

EncodedCorpus encode_corpus(const Checkpoint& ckpt, const std::vector<Tokens>& sentences,
                            const EmbeddingTable& table, Regime regime);

// Training-time representations (bi-GRU last state, linear mean) postprocessed
// over the whole set, one matrix per slot.
std::vector<Matrix> training_representations(const ModelParams& params,
                                             const std::vector<Matrix>& embedded,
                                             std::size_t power_iters, double power_tol,
                                             std::uint64_t seed);

// One line per row, space-separated shortest round-trip decimals, with an
// optional "<count> <dim>" header.
void save_vectors(const Matrix& rows, const std::filesystem::path& path, bool with_header = true);

}  // namespace cmax
