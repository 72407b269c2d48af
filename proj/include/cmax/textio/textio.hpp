#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cmax/numcore/matrix.hpp"

namespace cmax {

using Tokens = std::vector<std::string>;

// Lowercases ASCII letters and splits on whitespace.
Tokens tokenize(std::string_view line);

// Token -> fixed word vector. Immutable once constructed.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  // Throws DataError on a duplicate token or a vector of the wrong length.
  EmbeddingTable(std::size_t dim, std::vector<std::pair<std::string, Vector>> entries);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return tokens_.size(); }

  // Null when the token is out of vocabulary.
  const double* find(std::string_view token) const;
  std::span<const double> vector(std::size_t index) const;
  const std::string& token(std::size_t index) const { return tokens_[index]; }

  bool operator==(const EmbeddingTable& other) const;

 private:
  std::size_t dim_ = 0;
  std::vector<std::string> tokens_;
  std::vector<double> values_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Text format: optional "<count> <dim>" header, then "<token> v1 ... v_dim".
EmbeddingTable load_word_vectors(const std::filesystem::path& path);
EmbeddingTable parse_word_vectors(std::string_view text, const std::string& source = "<memory>");
// Writes shortest round-trip decimal representations.
void save_word_vectors(const EmbeddingTable& table, const std::filesystem::path& path,
                       bool with_header = true);

struct Corpus {
  std::vector<Tokens> sentences;
  // Indices i such that a document ends after sentence i (the final sentence
  // is implicitly a document end and is not listed).
  std::set<std::size_t> document_break_after;

  std::size_t size() const { return sentences.size(); }
  // Half-open [begin, end) sentence ranges, one per document.
  std::vector<std::pair<std::size_t, std::size_t>> documents() const;
  // Document id of every sentence.
  std::vector<std::size_t> document_ids() const;
};

// One sentence per line; a blank line ends the current document.
Corpus parse_corpus(std::string_view text);
Corpus load_corpus(const std::filesystem::path& path);
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);

// M x dim; out-of-vocabulary tokens map to zero rows.
Matrix embed_sentence(const Tokens& tokens, const EmbeddingTable& table);

struct SentenceBatch {
  std::size_t start = 0;
  std::vector<Tokens> sentences;
  std::vector<Matrix> embedded;  // filled by embed_batch
};

// Start indices of all non-overlapping windows of n contiguous sentences that
// stay inside one document, in corpus order.
std::vector<std::size_t> batch_windows(const Corpus& corpus, std::size_t n);

// Window starts shuffled deterministically by seed.
std::vector<std::size_t> shuffled_windows(const Corpus& corpus, std::size_t n, std::uint64_t seed);

std::vector<SentenceBatch> make_batches(const Corpus& corpus, std::size_t n, std::uint64_t seed);
void embed_batch(SentenceBatch& batch, const EmbeddingTable& table);

}  // namespace cmax
