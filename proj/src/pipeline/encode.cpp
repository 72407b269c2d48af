#include "cmax/pipeline/encode.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

#include "cmax/errors.hpp"
#include "cmax/pipeline/config.hpp"

namespace cmax {

namespace {

void check_input(const std::vector<Matrix>& embedded) {
  if (embedded.empty()) throw DataError("cannot encode an empty corpus");
  if (embedded.size() < 2) throw DataError("encoding needs at least 2 sentences");
}

}  // namespace

void combine_views(EncodedCorpus& encoded) {
  auto& views = encoded.views;
  if (views.empty()) throw std::invalid_argument("combine_views: no views");
  if (views.size() == 1) {
    encoded.ensemble = views[0];
    return;
  }
  const std::size_t n = views[0].rows();
  if (encoded.regime == Regime::Unsupervised) {
    encoded.ensemble = Matrix(n, views[0].cols());
    for (const Matrix& v : views) {
      if (v.rows() != n || v.cols() != views[0].cols()) {
        throw std::invalid_argument("combine_views: views differ in shape");
      }
      encoded.ensemble += v;
    }
    encoded.ensemble *= 1.0 / static_cast<double>(views.size());
    return;
  }
  std::size_t width = 0;
  for (const Matrix& v : views) width += v.cols();
  encoded.ensemble = Matrix(n, width);
  for (std::size_t i = 0; i < n; ++i) {
    auto dst = encoded.ensemble.row(i).begin();
    for (const Matrix& v : views) dst = std::copy(v.row(i).begin(), v.row(i).end(), dst);
  }
}

std::uint64_t view_postproc_seed(std::uint64_t seed, EncoderKind kind, std::size_t index) {
  return mix_seed(seed, (kind == EncoderKind::Gru ? 100 : 200) + index);
}

EncodedCorpus encode_sentences(const ModelParams& params, const std::vector<Matrix>& embedded,
                               Regime regime, std::size_t power_iters, double power_tol,
                               std::uint64_t seed) {
  check_input(embedded);
  EncodedCorpus out;
  out.regime = regime;
  for (std::size_t s = 0; s < params.slot_count(); ++s) {
    const auto [kind, index] = params.slot_encoder(s);
    std::vector<Vector> rows;
    rows.reserve(embedded.size());
    for (const Matrix& x : embedded) {
      if (kind == EncoderKind::Gru) {
        rows.push_back(
            compose_test_representation(encode_f(x, params.grus[index]), ViewKind::F, regime));
      } else {
        rows.push_back(compose_test_representation(encode_g(x, params.linears[index]),
                                                   ViewKind::G, regime));
      }
    }
    const PostprocConfig pc{power_iters, power_tol, view_postproc_seed(seed, kind, index)};
    out.views.push_back(postprocess_batch(Matrix::stack_rows(rows), pc).output);
    out.view_labels.push_back(params.slot_label(s));
  }

  combine_views(out);
  return out;
}

EncodedCorpus encode_corpus(const Checkpoint& ckpt, const std::vector<Tokens>& sentences,
                            const EmbeddingTable& table, Regime regime) {
  if (table.dim() != ckpt.config.dim) {
    throw DataError("word vector dim " + std::to_string(table.dim()) +
                    " does not match checkpoint dim " + std::to_string(ckpt.config.dim));
  }
  std::vector<Matrix> embedded;
  embedded.reserve(sentences.size());
  for (const auto& s : sentences) embedded.push_back(embed_sentence(s, table));
  return encode_sentences(ckpt.params, embedded, regime, ckpt.config.test_power_iters,
                          ckpt.config.power_tol, ckpt.config.seed);
}

std::vector<Matrix> training_representations(const ModelParams& params,
                                             const std::vector<Matrix>& embedded,
                                             std::size_t power_iters, double power_tol,
                                             std::uint64_t seed) {
  check_input(embedded);
  std::vector<Matrix> out;
  for (std::size_t s = 0; s < params.slot_count(); ++s) {
    const auto [kind, index] = params.slot_encoder(s);
    std::vector<Vector> rows;
    for (const Matrix& x : embedded) {
      rows.push_back(kind == EncoderKind::Gru ? encode_f(x, params.grus[index]).zf_train
                                              : encode_g(x, params.linears[index]).zg_train);
    }
    const PostprocConfig pc{power_iters, power_tol, view_postproc_seed(seed, kind, index)};
    out.push_back(postprocess_batch(Matrix::stack_rows(rows), pc).output);
  }
  return out;
}

void save_vectors(const Matrix& rows, const std::filesystem::path& path, bool with_header) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  if (with_header) out << rows.rows() << ' ' << rows.cols() << '\n';
  for (std::size_t i = 0; i < rows.rows(); ++i) {
    const auto r = rows.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) {
      if (j) out << ' ';
      out << format_double(r[j]);
    }
    out << '\n';
  }
  if (!out) throw DataError("failed writing " + path.string());
}

}  // namespace cmax
