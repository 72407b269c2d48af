#include "cmax/textio/textio.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "cmax/errors.hpp"

namespace cmax {

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && is_space(line[i])) ++i;
    std::size_t j = i;
    while (j < line.size() && !is_space(line[j])) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::optional<double> parse_double(std::string_view s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<std::size_t> parse_count(std::string_view s) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) {
      if (start < text.size()) lines.push_back(text.substr(start));
      break;
    }
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  return lines;
}

}  // namespace

Tokens tokenize(std::string_view line) {
  Tokens out;
  for (std::string_view f : split_fields(line)) {
    std::string tok(f);
    for (char& c : tok) {
      if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    out.push_back(std::move(tok));
  }
  return out;
}

EmbeddingTable::EmbeddingTable(std::size_t dim,
                               std::vector<std::pair<std::string, Vector>> entries)
    : dim_(dim) {
  tokens_.reserve(entries.size());
  values_.reserve(entries.size() * dim);
  for (auto& [token, vec] : entries) {
    if (vec.size() != dim) {
      throw DataError("word vector for '" + token + "' has length " + std::to_string(vec.size()) +
                      ", expected " + std::to_string(dim));
    }
    if (!index_.emplace(token, tokens_.size()).second) {
      throw DataError("duplicate token '" + token + "'");
    }
    tokens_.push_back(std::move(token));
    values_.insert(values_.end(), vec.begin(), vec.end());
  }
}

const double* EmbeddingTable::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return nullptr;
  return values_.data() + it->second * dim_;
}

std::span<const double> EmbeddingTable::vector(std::size_t index) const {
  return {values_.data() + index * dim_, dim_};
}

bool EmbeddingTable::operator==(const EmbeddingTable& other) const {
  return dim_ == other.dim_ && tokens_ == other.tokens_ && values_ == other.values_;
}

EmbeddingTable parse_word_vectors(std::string_view text, const std::string& source) {
  const auto lines = split_lines(text);
  std::vector<std::pair<std::string, Vector>> entries;
  std::optional<std::size_t> dim;
  std::optional<std::size_t> declared_count;
  std::size_t first = 0;

  // A header is exactly two integer fields.
  if (!lines.empty()) {
    const auto fields = split_fields(lines.front());
    if (fields.size() == 2) {
      auto count = parse_count(fields[0]);
      auto d = parse_count(fields[1]);
      if (count && d) {
        declared_count = *count;
        dim = *d;
        first = 1;
      }
    }
  }

  for (std::size_t li = first; li < lines.size(); ++li) {
    const std::size_t line_no = li + 1;
    const auto fields = split_fields(lines[li]);
    if (fields.empty()) continue;
    const std::size_t width = fields.size() - 1;
    if (!dim) dim = width;
    if (width != *dim || width == 0) {
      throw DataError(source + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(*dim) + " values, found " + std::to_string(width));
    }
    Vector vec(width);
    for (std::size_t k = 0; k < width; ++k) {
      auto v = parse_double(fields[k + 1]);
      if (!v) {
        throw DataError(source + ":" + std::to_string(line_no) + ": unparseable float '" +
                        std::string(fields[k + 1]) + "'");
      }
      vec[k] = *v;
    }
    entries.emplace_back(std::string(fields[0]), std::move(vec));
  }

  if (!dim || entries.empty()) throw DataError(source + ": no word vectors");
  if (declared_count && *declared_count != entries.size()) {
    throw DataError(source + ": header declares " + std::to_string(*declared_count) +
                    " vectors, found " + std::to_string(entries.size()));
  }
  try {
    return EmbeddingTable(*dim, std::move(entries));
  } catch (const DataError& e) {
    throw DataError(source + ": " + e.what());
  }
}

EmbeddingTable load_word_vectors(const std::filesystem::path& path) {
  return parse_word_vectors(read_file(path), path.string());
}

void save_word_vectors(const EmbeddingTable& table, const std::filesystem::path& path,
                       bool with_header) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  if (with_header) out << table.size() << ' ' << table.dim() << '\n';
  char buf[64];
  for (std::size_t i = 0; i < table.size(); ++i) {
    out << table.token(i);
    for (double v : table.vector(i)) {
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
      out << ' ' << std::string_view(buf, ptr - buf);
    }
    out << '\n';
  }
  if (!out) throw DataError("write failed: " + path.string());
}

std::vector<std::pair<std::size_t, std::size_t>> Corpus::documents() const {
  std::vector<std::pair<std::size_t, std::size_t>> docs;
  std::size_t begin = 0;
  for (std::size_t b : document_break_after) {
    if (b + 1 > begin && b < sentences.size()) {
      docs.emplace_back(begin, b + 1);
      begin = b + 1;
    }
  }
  if (begin < sentences.size()) docs.emplace_back(begin, sentences.size());
  return docs;
}

std::vector<std::size_t> Corpus::document_ids() const {
  std::vector<std::size_t> ids(sentences.size());
  const auto docs = documents();
  for (std::size_t d = 0; d < docs.size(); ++d)
    for (std::size_t i = docs[d].first; i < docs[d].second; ++i) ids[i] = d;
  return ids;
}

Corpus parse_corpus(std::string_view text) {
  Corpus corpus;
  bool pending_break = false;
  for (std::string_view line : split_lines(text)) {
    Tokens toks = tokenize(line);
    if (toks.empty()) {
      pending_break = true;
      continue;
    }
    if (pending_break && !corpus.sentences.empty()) {
      corpus.document_break_after.insert(corpus.sentences.size() - 1);
    }
    pending_break = false;
    corpus.sentences.push_back(std::move(toks));
  }
  return corpus;
}

Corpus load_corpus(const std::filesystem::path& path) { return parse_corpus(read_file(path)); }

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  for (std::size_t i = 0; i < corpus.sentences.size(); ++i) {
    const auto& s = corpus.sentences[i];
    for (std::size_t k = 0; k < s.size(); ++k) out << (k ? " " : "") << s[k];
    out << '\n';
    if (corpus.document_break_after.count(i) && i + 1 < corpus.sentences.size()) out << '\n';
  }
}

Matrix embed_sentence(const Tokens& tokens, const EmbeddingTable& table) {
  if (tokens.empty()) throw DataError("embed_sentence: empty sentence");
  Matrix x(tokens.size(), table.dim());
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    if (const double* v = table.find(tokens[t])) std::copy(v, v + table.dim(), x.row(t).begin());
  }
  return x;
}

std::vector<std::size_t> batch_windows(const Corpus& corpus, std::size_t n) {
  if (n < 2) throw std::invalid_argument("batch size must be >= 2");
  std::vector<std::size_t> starts;
  for (auto [begin, end] : corpus.documents()) {
    for (std::size_t s = begin; s + n <= end; s += n) starts.push_back(s);
  }
  if (starts.empty()) {
    throw DataError("no document holds " + std::to_string(n) + " contiguous sentences");
  }
  return starts;
}

std::vector<std::size_t> shuffled_windows(const Corpus& corpus, std::size_t n,
                                          std::uint64_t seed) {
  auto starts = batch_windows(corpus, n);
  std::mt19937_64 rng(seed);
  std::shuffle(starts.begin(), starts.end(), rng);
  return starts;
}

std::vector<SentenceBatch> make_batches(const Corpus& corpus, std::size_t n, std::uint64_t seed) {
  std::vector<SentenceBatch> batches;
  for (std::size_t start : shuffled_windows(corpus, n, seed)) {
    SentenceBatch b;
    b.start = start;
    b.sentences.assign(corpus.sentences.begin() + static_cast<std::ptrdiff_t>(start),
                       corpus.sentences.begin() + static_cast<std::ptrdiff_t>(start + n));
    batches.push_back(std::move(b));
  }
  return batches;
}

void embed_batch(SentenceBatch& batch, const EmbeddingTable& table) {
  batch.embedded.clear();
  for (const auto& s : batch.sentences) batch.embedded.push_back(embed_sentence(s, table));
}

}  // namespace cmax
