#include "cmax/evalsuite/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace cmax {

namespace {

constexpr std::size_t kNouns = 30, kVerbs = 15, kAdjectives = 15, kEntities = 25;
constexpr std::size_t kFunctionWords = 40, kGenericNouns = 110;

struct Lexicon {
  std::vector<std::vector<std::string>> nouns, verbs, adjectives, entities;  // per topic
  std::vector<std::string> function_words, generic_nouns;
  std::vector<std::string> all;
  std::vector<std::size_t> topic_of;  // parallel to `all`; kShared for topic-free words
};

constexpr std::size_t kShared = static_cast<std::size_t>(-1);

Lexicon build_lexicon(std::size_t topics) {
  Lexicon lex;
  auto make = [&](const std::string& prefix, std::size_t count, std::size_t topic = kShared) {
    std::vector<std::string> words;
    for (std::size_t i = 0; i < count; ++i) {
      words.push_back(prefix + std::to_string(i));
      lex.all.push_back(words.back());
      lex.topic_of.push_back(topic);
    }
    return words;
  };
  for (std::size_t t = 0; t < topics; ++t) {
    const std::string tag = "t" + std::to_string(t);
    lex.nouns.push_back(make(tag + "n", kNouns, t));
    lex.verbs.push_back(make(tag + "v", kVerbs, t));
    lex.adjectives.push_back(make(tag + "a", kAdjectives, t));
    lex.entities.push_back(make(tag + "e", kEntities));
  }
  lex.function_words = make("w", kFunctionWords);
  lex.generic_nouns = make("g", kGenericNouns);
  return lex;
}

class SentenceMaker {
 public:
  SentenceMaker(const Lexicon& lex, double noise, std::mt19937_64& rng)
      : lex_(lex), noise_(noise), rng_(rng) {}

  Tokens make(std::size_t topic, const std::string& e1, const std::string& e2) {
    Tokens s;
    auto fw = [&] { s.push_back(pick(lex_.function_words)); };
    auto noun = [&] { s.push_back(pick(content_topic(topic, lex_.nouns))); };
    auto verb = [&] { s.push_back(pick(content_topic(topic, lex_.verbs))); };
    auto adj = [&] { s.push_back(pick(content_topic(topic, lex_.adjectives))); };
    auto generic = [&] { s.push_back(pick(lex_.generic_nouns)); };
    switch (uniform(4)) {
      case 0:
        fw(); adj(); s.push_back(e1); verb(); fw(); noun(); fw(); s.push_back(e2);
        break;
      case 1:
        s.push_back(e1); fw(); s.push_back(e2); verb(); fw(); adj(); noun(); fw(); generic();
        break;
      case 2:
        fw(); noun(); fw(); s.push_back(e2); verb(); s.push_back(e1); fw(); adj(); generic();
        break;
      default:
        fw(); generic(); verb(); fw(); s.push_back(e1); fw(); adj(); noun(); s.push_back(e2);
        break;
    }
    if (uniform(2) == 0) {
      fw();
      noun();
    }
    return s;
  }

  std::size_t uniform(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_);
  }

 private:
  const std::vector<std::string>& content_topic(std::size_t topic,
                                                const std::vector<std::vector<std::string>>& by_topic) {
    if (std::bernoulli_distribution(noise_)(rng_)) return by_topic[uniform(by_topic.size())];
    return by_topic[topic];
  }

  const std::string& pick(const std::vector<std::string>& words) { return words[uniform(words.size())]; }

  const Lexicon& lex_;
  double noise_;
  std::mt19937_64& rng_;
};

void append_documents(Corpus& corpus, std::vector<std::size_t>& topics, const Lexicon& lex,
                      const SyntheticConfig& config, std::size_t docs, std::mt19937_64& rng) {
  SentenceMaker maker(lex, config.noise, rng);
  std::bernoulli_distribution switch_topic(config.topic_switch);
  auto other = [&](std::size_t not_this, std::size_t n) {
    const std::size_t e = maker.uniform(n - 1);
    return e >= not_this ? e + 1 : e;
  };
  for (std::size_t d = 0; d < docs; ++d) {
    std::size_t topic = maker.uniform(config.topics);
    // Entity chain: a random walk over the topic's entities without immediate repeats.
    std::vector<std::size_t> chain{maker.uniform(kEntities)};
    while (chain.size() < config.sentences_per_doc + 1) chain.push_back(other(chain.back(), kEntities));
    if (!corpus.sentences.empty()) corpus.document_break_after.insert(corpus.sentences.size() - 1);
    for (std::size_t k = 0; k < config.sentences_per_doc; ++k) {
      if (k > 0 && config.topic_switch > 0.0 && switch_topic(rng)) {
        // New segment: another topic, and the chain restarts there.
        topic = other(topic, config.topics);
        chain[k] = maker.uniform(kEntities);
        if (chain[k + 1] == chain[k]) chain[k + 1] = other(chain[k], kEntities);
      }
      corpus.sentences.push_back(
          maker.make(topic, lex.entities[topic][chain[k]], lex.entities[topic][chain[k + 1]]));
      topics.push_back(topic);
    }
  }
}

}  // namespace

SyntheticData generate_synthetic(const SyntheticConfig& config) {
  if (config.topics < 2 || config.sentences_per_doc < 2 || config.dim == 0) {
    throw std::invalid_argument("generate_synthetic: degenerate configuration");
  }
  const Lexicon lex = build_lexicon(config.topics);

  std::mt19937_64 vec_rng(config.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double scale = 1.0 / std::sqrt(static_cast<double>(config.dim));
  // A shared offset gives every word vector a common direction, as trained
  // embeddings tend to have.
  Vector common(config.dim);
  for (double& v : common) v = 0.5 * gauss(vec_rng) * scale;
  std::vector<Vector> centroids(config.topics, Vector(config.dim, 0.0));
  if (config.topic_strength != 0.0) {
    for (auto& c : centroids) {
      for (double& v : c) v = config.topic_strength * gauss(vec_rng) * scale;
    }
  }
  std::vector<std::pair<std::string, Vector>> entries;
  for (std::size_t w = 0; w < lex.all.size(); ++w) {
    Vector v(config.dim);
    for (std::size_t k = 0; k < config.dim; ++k) v[k] = gauss(vec_rng) * scale + common[k];
    if (lex.topic_of[w] != kShared) {
      for (std::size_t k = 0; k < config.dim; ++k) v[k] += centroids[lex.topic_of[w]][k];
    }
    entries.emplace_back(lex.all[w], std::move(v));
  }

  SyntheticData data;
  data.table = EmbeddingTable(config.dim, std::move(entries));
  std::mt19937_64 train_rng(config.seed * 2 + 1);
  append_documents(data.train, data.train_topics, lex, config, config.train_docs, train_rng);
  std::mt19937_64 held_rng(config.seed * 2 + 2);
  append_documents(data.heldout, data.heldout_topics, lex, config, config.heldout_docs, held_rng);
  return data;
}

std::vector<StsPair> synthetic_sts_pairs(const Corpus& corpus,
                                         const std::vector<std::size_t>& topics,
                                         std::size_t count, std::uint64_t seed) {
  if (corpus.size() < 3) throw std::invalid_argument("synthetic_sts_pairs: corpus too small");
  const auto docs = corpus.document_ids();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> any(0, corpus.size() - 1);
  std::vector<StsPair> out;
  while (out.size() < count) {
    const std::size_t i = any(rng);
    std::size_t j = any(rng);
    // A third of the pairs are adjacent so every score level is represented.
    if (out.size() % 3 == 0 && i + 1 < corpus.size() && docs[i + 1] == docs[i]) j = i + 1;
    if (i == j) continue;
    double gold = 0.0;
    const std::size_t gap = i > j ? i - j : j - i;
    if (docs[i] == docs[j] && gap == 1) {
      gold = 4.0;
    } else if (topics[i] == topics[j]) {
      gold = 2.0;
    }
    out.push_back({corpus.sentences[i], corpus.sentences[j], gold});
  }
  return out;
}

LabeledSet synthetic_labeled(const Corpus& corpus, const std::vector<std::size_t>& topics) {
  if (topics.size() != corpus.size()) throw std::invalid_argument("synthetic_labeled: size mismatch");
  LabeledSet out;
  const std::size_t k = topics.empty() ? 0 : *std::max_element(topics.begin(), topics.end()) + 1;
  for (std::size_t t = 0; t < k; ++t) out.label_names.push_back("topic" + std::to_string(t));
  out.labels = topics;
  out.sentences = corpus.sentences;
  return out;
}

}  // namespace cmax
