#pragma once

#include <cstdint>
#include <vector>

#include "cmax/evalsuite/metrics.hpp"
#include "cmax/textio/textio.hpp"

namespace cmax {

// Templated topic model. Every document draws a topic and a chain of topic
// entities; sentence k mentions entities k and k+1, so neighbours share an
// entity as well as the topic. Word vectors are random and fixed.
struct SyntheticConfig {
  std::size_t topics = 10;
  std::size_t sentences_per_doc = 20;
  std::size_t train_docs = 250;
  std::size_t heldout_docs = 25;
  std::size_t dim = 50;
  // Share of content words drawn from another topic.
  double noise = 0.15;
  // Scale of a per-topic centroid added to the vectors of topic nouns, verbs
  // and adjectives (entities stay plain), so related words lie close together.
  double topic_strength = 0.0;
  // Probability that a sentence starts a new topic segment within its
  // document; the entity chain restarts in the new topic.
  double topic_switch = 0.0;
  std::uint64_t seed = 1;
};

struct SyntheticData {
  Corpus train;
  Corpus heldout;
  std::vector<std::size_t> train_topics;    // per sentence
  std::vector<std::size_t> heldout_topics;  // per sentence
  EmbeddingTable table;
};

SyntheticData generate_synthetic(const SyntheticConfig& config);

// STS-style pairs over a corpus: adjacent sentences of one document score 4,
// other same-topic pairs 2, cross-topic pairs 0.
std::vector<StsPair> synthetic_sts_pairs(const Corpus& corpus,
                                         const std::vector<std::size_t>& topics,
                                         std::size_t count, std::uint64_t seed);

// Topic classification set over a corpus; label id = topic id.
LabeledSet synthetic_labeled(const Corpus& corpus, const std::vector<std::size_t>& topics);

}  // namespace cmax
