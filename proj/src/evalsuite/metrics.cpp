#include "cmax/evalsuite/metrics.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "cmax/errors.hpp"

namespace cmax {

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Splits text into lines, dropping a trailing '\r' and skipping blank lines.
template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t start = 0, line_no = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    fn(line, line_no);
  }
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto tab = line.find('\t', start);
    out.push_back(line.substr(start, tab == std::string_view::npos ? tab : tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return out;
}

std::string key_of(const Tokens& tokens) {
  std::string key;
  for (const auto& t : tokens) {
    key += t;
    key += ' ';
  }
  return key;
}

double cosine_or_zero(std::span<const double> a, std::span<const double> b) {
  const double na = norm(a), nb = norm(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot(a, b) / (na * nb);
}

}  // namespace

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("pearson: lengths differ");
  if (x.size() < 2) throw std::invalid_argument("pearson: need at least 2 values");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0, ax = 0.0, ay = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
    ax = std::max(ax, std::abs(x[i]));
    ay = std::max(ay, std::abs(y[i]));
  }
  // Spread at the level of rounding error counts as constant.
  const double eps = 64.0 * std::numeric_limits<double>::epsilon();
  if (sxx <= n * (eps * ax) * (eps * ax) || syy <= n * (eps * ay) * (eps * ay)) {
    throw DataError("pearson: zero variance");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<StsPair> parse_sts_pairs(std::string_view text, const std::string& source,
                                     double gold_min, double gold_max) {
  std::vector<StsPair> out;
  for_each_line(text, [&](std::string_view line, std::size_t line_no) {
    const std::string where = source + ":" + std::to_string(line_no);
    const auto fields = split_tabs(line);
    if (fields.size() != 3) throw DataError(where + ": expected 3 tab-separated fields");
    double gold = 0.0;
    const auto f = fields[2];
    auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), gold);
    if (ec != std::errc() || ptr != f.data() + f.size()) {
      throw DataError(where + ": bad score '" + std::string(f) + "'");
    }
    if (!(gold >= gold_min && gold <= gold_max)) {
      throw DataError(where + ": score " + std::string(f) + " outside [" +
                      format_double(gold_min) + ", " + format_double(gold_max) + "]");
    }
    out.push_back({tokenize(fields[0]), tokenize(fields[1]), gold});
  });
  return out;
}

std::vector<StsPair> load_sts_pairs(const std::filesystem::path& path, double gold_min,
                                    double gold_max) {
  return parse_sts_pairs(read_file(path), path.string(), gold_min, gold_max);
}

LabeledSet parse_labeled(std::string_view text, const std::string& source,
                         std::vector<std::string> label_names) {
  LabeledSet out;
  out.label_names = std::move(label_names);
  std::unordered_map<std::string, std::size_t> ids;
  for (std::size_t k = 0; k < out.label_names.size(); ++k) ids.emplace(out.label_names[k], k);
  for_each_line(text, [&](std::string_view line, std::size_t line_no) {
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos) {
      throw DataError(source + ":" + std::to_string(line_no) + ": expected label<TAB>sentence");
    }
    const std::string label(line.substr(0, tab));
    auto [it, inserted] = ids.emplace(label, out.label_names.size());
    if (inserted) out.label_names.push_back(label);
    out.labels.push_back(it->second);
    out.sentences.push_back(tokenize(line.substr(tab + 1)));
  });
  return out;
}

LabeledSet load_labeled(const std::filesystem::path& path, std::vector<std::string> label_names) {
  return parse_labeled(read_file(path), path.string(), std::move(label_names));
}

std::vector<Matrix> embed_all(const std::vector<Tokens>& sentences, const EmbeddingTable& table) {
  std::vector<Matrix> out;
  out.reserve(sentences.size());
  for (const auto& s : sentences) out.push_back(embed_sentence(s, table));
  return out;
}

ViewEncoder model_encoder(const ModelParams& params, const TrainConfig& config) {
  return [params, iters = config.test_power_iters, tol = config.power_tol, seed = config.seed](
             const std::vector<Matrix>& embedded, Regime regime) {
    return encode_sentences(params, embedded, regime, iters, tol, seed);
  };
}

ViewEncoder merged_encoder(std::vector<ViewEncoder> parts) {
  return [parts = std::move(parts)](const std::vector<Matrix>& embedded, Regime regime) {
    EncodedCorpus out;
    out.regime = regime;
    for (const auto& part : parts) {
      EncodedCorpus e = part(embedded, regime);
      for (std::size_t v = 0; v < e.views.size(); ++v) {
        out.views.push_back(std::move(e.views[v]));
        out.view_labels.push_back(e.view_labels[v]);
      }
    }
    combine_views(out);
    return out;
  };
}

ViewScores score_views(const EncodedCorpus& encoded, const ViewScoreFn& score) {
  ViewScores s;
  s.first = score(encoded.views.at(0));
  if (encoded.views.size() > 1) s.second = score(encoded.views[1]);
  s.ensemble = encoded.views.size() > 1 ? score(encoded.ensemble) : s.first;
  return s;
}

ViewScores eval_sts(const ViewEncoder& encoder, const std::vector<StsPair>& pairs,
                    const EmbeddingTable& table) {
  if (pairs.empty()) throw DataError("eval_sts: no pairs");
  std::unordered_map<std::string, std::size_t> index;
  std::vector<Tokens> unique;
  std::vector<std::pair<std::size_t, std::size_t>> rows;
  auto id = [&](const Tokens& t) {
    auto [it, inserted] = index.emplace(key_of(t), unique.size());
    if (inserted) unique.push_back(t);
    return it->second;
  };
  std::vector<double> gold;
  for (const auto& p : pairs) {
    const std::size_t a = id(p.sentence_a);
    rows.emplace_back(a, id(p.sentence_b));
    gold.push_back(p.gold);
  }
  const EncodedCorpus enc = encoder(embed_all(unique, table), Regime::Unsupervised);
  return score_views(enc, [&](const Matrix& reps) {
    std::vector<double> predicted;
    for (const auto& [a, b] : rows) predicted.push_back(cosine_or_zero(reps.row(a), reps.row(b)));
    return pearson(predicted, gold);
  });
}

double adjacent_retrieval_recall(const Matrix& reps, const std::vector<std::size_t>& doc_ids) {
  const std::size_t n = reps.rows();
  if (n != doc_ids.size()) throw std::invalid_argument("retrieval: rows and doc ids differ");
  if (n < 2) throw std::invalid_argument("retrieval: need at least 2 sentences");
  Matrix unit = reps;
  for (std::size_t i = 0; i < n; ++i) {
    auto r = unit.row(i);
    const double nr = norm(r);
    if (nr > 0.0) {
      for (double& v : r) v /= nr;
    }
  }
  const Matrix sims = matmul_a_bt(unit, unit);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = i == 0 ? 1 : 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i && sims(i, j) > sims(i, best)) best = j;
    }
    const std::size_t gap = best > i ? best - i : i - best;
    hits += gap == 1 && doc_ids[best] == doc_ids[i];
  }
  return static_cast<double>(hits) / static_cast<double>(n);
}

ViewScores eval_retrieval(const ViewEncoder& encoder, const Corpus& corpus,
                          const EmbeddingTable& table) {
  const auto doc_ids = corpus.document_ids();
  const EncodedCorpus enc = encoder(embed_all(corpus.sentences, table), Regime::Unsupervised);
  return score_views(enc, [&](const Matrix& reps) { return adjacent_retrieval_recall(reps, doc_ids); });
}

ViewScores eval_cls(const ViewEncoder& encoder, const LabeledSet& train, const LabeledSet& test,
                    const EmbeddingTable& table, const ProbeConfig& probe) {
  if (train.sentences.empty() || test.sentences.empty()) {
    throw DataError("eval_cls: empty train or test set");
  }
  std::vector<Tokens> all = train.sentences;
  all.insert(all.end(), test.sentences.begin(), test.sentences.end());
  const EncodedCorpus enc = encoder(embed_all(all, table), Regime::Supervised);
  const std::size_t n_train = train.sentences.size();
  return score_views(enc, [&](const Matrix& reps) {
    Matrix x_train(n_train, reps.cols()), x_test(test.sentences.size(), reps.cols());
    std::copy(reps.flat().begin(), reps.flat().begin() + x_train.size(), x_train.flat().begin());
    std::copy(reps.flat().begin() + x_train.size(), reps.flat().end(), x_test.flat().begin());
    const ProbeModel model = train_probe(x_train, train.labels, probe);
    std::vector<std::size_t> test_labels = test.labels;
    for (std::size_t& l : test_labels) {
      if (l >= model.classes()) l = model.classes();  // unseen in training: never predicted
    }
    return eval_probe(model, x_test, test_labels);
  });
}

}  // namespace cmax
