#pragma once

#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cmax/evalsuite/probe.hpp"
#include "cmax/pipeline/config.hpp"
#include "cmax/pipeline/encode.hpp"
#include "cmax/pipeline/model.hpp"
#include "cmax/pipeline/trainer.hpp"
#include "cmax/textio/textio.hpp"

namespace cmax {

// Sample Pearson correlation. Throws DataError on zero variance and
// std::invalid_argument on mismatched or too short inputs.
double pearson(std::span<const double> x, std::span<const double> y);

struct StsPair {
  Tokens sentence_a;
  Tokens sentence_b;
  double gold = 0.0;
};

// "sentence_a<TAB>sentence_b<TAB>score" per line. Scores outside
// [gold_min, gold_max] raise DataError.
std::vector<StsPair> parse_sts_pairs(std::string_view text, const std::string& source = "<memory>",
                                     double gold_min = 0.0, double gold_max = 5.0);
std::vector<StsPair> load_sts_pairs(const std::filesystem::path& path, double gold_min = 0.0,
                                    double gold_max = 5.0);

struct LabeledSet {
  std::vector<Tokens> sentences;
  std::vector<std::size_t> labels;       // 0..K-1
  std::vector<std::string> label_names;  // id -> original label
};

// "label<TAB>sentence" per line; labels get ids in first-seen order. Pass a
// non-empty `label_names` to reuse an existing mapping (new labels extend it).
LabeledSet parse_labeled(std::string_view text, const std::string& source = "<memory>",
                         std::vector<std::string> label_names = {});
LabeledSet load_labeled(const std::filesystem::path& path,
                        std::vector<std::string> label_names = {});

// Produces test-time representations of a set of embedded sentences.
using ViewEncoder = std::function<EncodedCorpus(const std::vector<Matrix>&, Regime)>;

// Encodes with a model's own encoders (power iteration settings from config).
ViewEncoder model_encoder(const ModelParams& params, const TrainConfig& config);
// Concatenates the views of several encoders into one multi-view encoder
// whose ensemble combines all of them.
ViewEncoder merged_encoder(std::vector<ViewEncoder> parts);

// Scores of the views of an encoding; missing second view stays NaN.
using ViewScoreFn = std::function<double(const Matrix&)>;
ViewScores score_views(const EncodedCorpus& encoded, const ViewScoreFn& score);

// Pearson r between gold scores and cosines of unsupervised representations.
// Postprocessing is fitted on the deduplicated union of all pair sentences.
ViewScores eval_sts(const ViewEncoder& encoder, const std::vector<StsPair>& pairs,
                    const EmbeddingTable& table);

// Fraction of sentences whose cosine nearest neighbour (excluding itself) is
// an adjacent sentence of the same document.
double adjacent_retrieval_recall(const Matrix& reps, const std::vector<std::size_t>& doc_ids);
ViewScores eval_retrieval(const ViewEncoder& encoder, const Corpus& corpus,
                          const EmbeddingTable& table);

// Probe accuracy on `test` after training on `train`, with supervised
// representations. Postprocessing is fitted on train and test together.
ViewScores eval_cls(const ViewEncoder& encoder, const LabeledSet& train, const LabeledSet& test,
                    const EmbeddingTable& table, const ProbeConfig& probe = {});

std::vector<Matrix> embed_all(const std::vector<Tokens>& sentences, const EmbeddingTable& table);

}  // namespace cmax
