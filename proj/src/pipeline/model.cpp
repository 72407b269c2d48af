#include "cmax/pipeline/model.hpp"

#include <random>
#include <stdexcept>

namespace cmax {

namespace {

// Stream identifiers for encoder initialization.
constexpr std::uint64_t kStreamGru1 = 1;
constexpr std::uint64_t kStreamGru2 = 2;
constexpr std::uint64_t kStreamLinear1 = 3;
constexpr std::uint64_t kStreamLinear2 = 4;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

void zero(Matrix& m) { m = Matrix(m.rows(), m.cols()); }

}  // namespace

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  return splitmix64(splitmix64(a) ^ (b + 0x632BE59BD9B4E019ull));
}

std::pair<EncoderKind, std::size_t> ModelParams::slot_encoder(std::size_t slot) const {
  const VariantSlots s = variant_slots(variant);
  if (slot >= s.count) throw std::out_of_range("slot_encoder: slot out of range");
  if (slot == 0) return {s.first, 0};
  return {s.second, s.first == s.second ? 1 : 0};
}

std::string ModelParams::slot_label(std::size_t slot) const {
  const VariantSlots s = variant_slots(variant);
  const auto [kind, index] = slot_encoder(slot);
  std::string base = kind == EncoderKind::Gru ? "f" : "g";
  if (s.count == 2 && s.first == s.second) base += std::to_string(index + 1);
  return base;
}

std::vector<Matrix*> ModelParams::matrices() {
  std::vector<Matrix*> out;
  for (auto& g : grus) {
    auto m = g.matrices();
    out.insert(out.end(), m.begin(), m.end());
  }
  for (auto& l : linears) out.push_back(&l.w);
  return out;
}

std::vector<const Matrix*> ModelParams::matrices() const {
  std::vector<const Matrix*> out;
  for (const auto& g : grus) {
    auto m = g.matrices();
    out.insert(out.end(), m.begin(), m.end());
  }
  for (const auto& l : linears) out.push_back(&l.w);
  return out;
}

std::vector<std::string> ModelParams::matrix_names() const {
  static const char* kCell[] = {"w_z", "w_r", "w_h", "u_z", "u_r", "u_h", "b_z", "b_r", "b_h"};
  std::vector<std::string> out;
  for (std::size_t k = 0; k < grus.size(); ++k) {
    for (const char* dir : {"fwd", "bwd"}) {
      for (const char* name : kCell) {
        out.push_back("f" + std::to_string(k + 1) + "/" + dir + "/" + name);
      }
    }
  }
  for (std::size_t k = 0; k < linears.size(); ++k) {
    out.push_back("g" + std::to_string(k + 1) + "/w");
  }
  return out;
}

ModelParams init_model(ObjectiveVariant variant, std::size_t dim, std::size_t hidden,
                       std::uint64_t seed) {
  ModelParams p;
  p.variant = variant;
  const VariantSlots s = variant_slots(variant);
  const std::size_t n_gru = (s.first == EncoderKind::Gru) + (s.count == 2 && s.second == EncoderKind::Gru);
  const std::size_t n_lin =
      (s.first == EncoderKind::Linear) + (s.count == 2 && s.second == EncoderKind::Linear);
  for (std::size_t k = 0; k < n_gru; ++k) {
    std::mt19937_64 rng(mix_seed(seed, k == 0 ? kStreamGru1 : kStreamGru2));
    p.grus.push_back(init_gru(dim, hidden, rng));
  }
  for (std::size_t k = 0; k < n_lin; ++k) {
    std::mt19937_64 rng(mix_seed(seed, k == 0 ? kStreamLinear1 : kStreamLinear2));
    p.linears.push_back(init_linear(dim, 2 * hidden, rng));
  }
  p.temperature.log_tau = 0.0;
  return p;
}

ModelParams zeros_like(const ModelParams& params) {
  ModelParams z = params;
  for (Matrix* m : z.matrices()) zero(*m);
  z.temperature.log_tau = 0.0;
  return z;
}

BatchResult evaluate_batch(const ModelParams& params, const std::vector<const Matrix*>& sentences,
                           const BatchOptions& options, bool with_grads,
                           const std::vector<PrincipalComponent>* frozen) {
  const std::size_t n = sentences.size();
  const std::size_t slots = params.slot_count();
  if (frozen && frozen->size() != slots) {
    throw std::invalid_argument("evaluate_batch: frozen components do not match slots");
  }

  BatchResult out;
  std::vector<std::vector<BiGruResult>> gru_fwd(params.grus.size());

  for (std::size_t s = 0; s < slots; ++s) {
    const auto [kind, index] = params.slot_encoder(s);
    const std::size_t width =
        kind == EncoderKind::Gru ? params.grus[index].output_dim() : params.linears[index].output_dim();
    Matrix reps(n, width);
    for (std::size_t i = 0; i < n; ++i) {
      if (kind == EncoderKind::Gru) {
        BiGruResult r = bigru_forward(*sentences[i], params.grus[index]);
        std::copy(r.last.begin(), r.last.end(), reps.row(i).begin());
        if (with_grads) gru_fwd[index].push_back(std::move(r));
      } else {
        const Vector x_mean = column_mean(*sentences[i]);
        const Matrix m = matmul(Matrix::row_vector(x_mean), params.linears[index].w);
        std::copy(m.flat().begin(), m.flat().end(), reps.row(i).begin());
      }
    }
    out.slot_reps.push_back(std::move(reps));
  }

  std::vector<PostprocResult> pp;
  for (std::size_t s = 0; s < slots; ++s) {
    if (frozen) {
      pp.push_back(postprocess_with_component(out.slot_reps[s], (*frozen)[s]));
    } else {
      pp.push_back(postprocess_batch(out.slot_reps[s],
                                     {options.power_iters, options.power_tol,
                                      mix_seed(options.power_seed, s)}));
    }
    out.components.push_back(pp.back().pc);
  }

  static const Matrix kEmpty;
  const Matrix& second = slots == 2 ? pp[1].output : kEmpty;
  const Matrix a = agreement_matrix(params.variant, pp[0].output, second);
  out.detail = contrastive_loss(
      a, params.temperature,
      {options.context, includes_self_pair(params.variant), options.average});
  out.loss = out.detail.loss;
  if (!with_grads) return out;

  out.grads = zeros_like(params);
  out.grads.temperature.log_tau = out.detail.d_log_tau;
  AgreementGrads ag = agreement_matrix_backward(params.variant, pp[0].output, second,
                                                out.detail.d_agreement);
  for (std::size_t s = 0; s < slots; ++s) {
    const Matrix d_reps = postprocess_backward(pp[s], s == 0 ? ag.d_first : ag.d_second);
    const auto [kind, index] = params.slot_encoder(s);
    for (std::size_t i = 0; i < n; ++i) {
      if (kind == EncoderKind::Gru) {
        bigru_backward(*sentences[i], params.grus[index], gru_fwd[index][i], Matrix{},
                       d_reps.row(i), out.grads.grus[index], false);
      } else {
        linear_backward_mean(*sentences[i], d_reps.row(i), out.grads.linears[index]);
      }
    }
  }
  return out;
}

}  // namespace cmax
