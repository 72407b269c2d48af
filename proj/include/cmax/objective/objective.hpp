#pragma once

#include <array>
#include <span>
#include <string_view>

#include "cmax/numcore/matrix.hpp"

namespace cmax {

enum class ObjectiveVariant {
  MultiViewFG,
  MultiViewF1F2,
  MultiViewG1G2,
  SingleViewF,
  SingleViewG,
  MultiPlusSingle,
  SkipConnection,
};

inline constexpr std::array<ObjectiveVariant, 7> kAllVariants = {
    ObjectiveVariant::MultiViewFG,   ObjectiveVariant::MultiViewF1F2,
    ObjectiveVariant::MultiViewG1G2, ObjectiveVariant::SingleViewF,
    ObjectiveVariant::SingleViewG,   ObjectiveVariant::MultiPlusSingle,
    ObjectiveVariant::SkipConnection,
};

std::string_view to_string(ObjectiveVariant variant);
// Throws ConfigError on an unknown name.
ObjectiveVariant parse_variant(std::string_view name);

// Encoders feeding the two representation slots of a variant. A variant with
// one slot leaves `second` unused.
enum class EncoderKind { Gru, Linear };

struct VariantSlots {
  std::size_t count;  // 1 or 2
  EncoderKind first;
  EncoderKind second;
};

VariantSlots variant_slots(ObjectiveVariant variant);

// i = j counts as a positive pair for every variant except the single-view
// ones, where cos(z, z) = 1 is a constant.
bool includes_self_pair(ObjectiveVariant variant);

// Agreement between sentence i and sentence j given the slot representations
// (a = first slot, b = second slot; b is ignored for single-slot variants).
//   cross:       cos(a_i, b_j) + cos(b_i, a_j)
//   single:      cos(a_i, a_j)
//   plus-single: cross + cos(a_i, a_j) + cos(b_i, b_j)
//   skip:        cos(a_i + b_i, a_j + b_j)
double agreement(ObjectiveVariant variant, std::span<const double> a_i,
                 std::span<const double> b_i, std::span<const double> a_j,
                 std::span<const double> b_j);

// A[i][j] = agreement(variant, i, j) over all ordered pairs. `second` is empty
// for single-slot variants.
Matrix agreement_matrix(ObjectiveVariant variant, const Matrix& first, const Matrix& second);

struct AgreementGrads {
  Matrix d_first;
  Matrix d_second;
};

AgreementGrads agreement_matrix_backward(ObjectiveVariant variant, const Matrix& first,
                                         const Matrix& second, const Matrix& d_agreement);

struct Temperature {
  static constexpr double kMin = 0.01;
  static constexpr double kMax = 100.0;

  double log_tau = 0.0;

  double raw() const;
  double value() const;  // clamped to [kMin, kMax]
  bool clamped() const;
};

struct ContrastiveOptions {
  std::size_t context = 1;
  bool include_self = true;
  // Divide the summed loss by the number of positive pairs.
  bool average = false;
};

struct LossResult {
  double loss = 0.0;
  Matrix probabilities;   // row-wise softmax of A / τ
  Matrix d_agreement;     // dL/dA
  double d_log_tau = 0.0; // zero while τ is clamped
  std::size_t positive_pairs = 0;
};

// Row-wise softmax with max subtraction.
Matrix softmax_rows(const Matrix& logits);

// L = -Σ_{|i-j| ≤ c} log p_ij with p_ij = softmax_j(A_i· / τ) over all N
// in-batch sentences; positives are clipped at batch edges.
LossResult contrastive_loss(const Matrix& agreement, const Temperature& tau,
                            const ContrastiveOptions& options);

}  // namespace cmax
