#include "cmax/objective/objective.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "cmax/errors.hpp"

namespace cmax {

namespace {

struct VariantName {
  ObjectiveVariant variant;
  std::string_view name;
};

constexpr std::array<VariantName, 7> kNames = {{
    {ObjectiveVariant::MultiViewFG, "MultiViewFG"},
    {ObjectiveVariant::MultiViewF1F2, "MultiViewF1F2"},
    {ObjectiveVariant::MultiViewG1G2, "MultiViewG1G2"},
    {ObjectiveVariant::SingleViewF, "SingleViewF"},
    {ObjectiveVariant::SingleViewG, "SingleViewG"},
    {ObjectiveVariant::MultiPlusSingle, "MultiPlusSingle"},
    {ObjectiveVariant::SkipConnection, "SkipConnection"},
}};

enum class Form { Cross, Single, PlusSingle, Skip };

Form form_of(ObjectiveVariant v) {
  switch (v) {
    case ObjectiveVariant::MultiViewFG:
    case ObjectiveVariant::MultiViewF1F2:
    case ObjectiveVariant::MultiViewG1G2:
      return Form::Cross;
    case ObjectiveVariant::SingleViewF:
    case ObjectiveVariant::SingleViewG:
      return Form::Single;
    case ObjectiveVariant::MultiPlusSingle:
      return Form::PlusSingle;
    case ObjectiveVariant::SkipConnection:
      return Form::Skip;
  }
  throw std::invalid_argument("unknown objective variant");
}

Vector add(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("agreement: slot dimension mismatch");
  Vector s(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) s[k] = a[k] + b[k];
  return s;
}

void check_slots(ObjectiveVariant variant, const Matrix& first, const Matrix& second) {
  if (variant_slots(variant).count == 2) {
    if (first.rows() != second.rows() || first.cols() != second.cols()) {
      throw std::invalid_argument("agreement_matrix: slot shapes differ " + first.shape_string() +
                                  " vs " + second.shape_string());
    }
  }
}

}  // namespace

std::string_view to_string(ObjectiveVariant variant) {
  for (const auto& n : kNames)
    if (n.variant == variant) return n.name;
  return "unknown";
}

ObjectiveVariant parse_variant(std::string_view name) {
  for (const auto& n : kNames)
    if (n.name == name) return n.variant;
  throw ConfigError("unknown objective variant '" + std::string(name) + "'");
}

VariantSlots variant_slots(ObjectiveVariant variant) {
  switch (variant) {
    case ObjectiveVariant::MultiViewFG:
    case ObjectiveVariant::MultiPlusSingle:
    case ObjectiveVariant::SkipConnection:
      return {2, EncoderKind::Gru, EncoderKind::Linear};
    case ObjectiveVariant::MultiViewF1F2:
      return {2, EncoderKind::Gru, EncoderKind::Gru};
    case ObjectiveVariant::MultiViewG1G2:
      return {2, EncoderKind::Linear, EncoderKind::Linear};
    case ObjectiveVariant::SingleViewF:
      return {1, EncoderKind::Gru, EncoderKind::Gru};
    case ObjectiveVariant::SingleViewG:
      return {1, EncoderKind::Linear, EncoderKind::Linear};
  }
  throw std::invalid_argument("unknown objective variant");
}

bool includes_self_pair(ObjectiveVariant variant) { return form_of(variant) != Form::Single; }

double agreement(ObjectiveVariant variant, std::span<const double> a_i,
                 std::span<const double> b_i, std::span<const double> a_j,
                 std::span<const double> b_j) {
  switch (form_of(variant)) {
    case Form::Cross:
      return cosine(a_i, b_j) + cosine(b_i, a_j);
    case Form::Single:
      return cosine(a_i, a_j);
    case Form::PlusSingle:
      return cosine(a_i, b_j) + cosine(b_i, a_j) + cosine(a_i, a_j) + cosine(b_i, b_j);
    case Form::Skip: {
      const Vector s_i = add(a_i, b_i);
      const Vector s_j = add(a_j, b_j);
      return cosine(s_i, s_j);
    }
  }
  return 0.0;
}

Matrix agreement_matrix(ObjectiveVariant variant, const Matrix& first, const Matrix& second) {
  check_slots(variant, first, second);
  const std::size_t n = first.rows();
  if (n < 2) throw std::invalid_argument("agreement_matrix: need at least 2 sentences");
  const Form form = form_of(variant);
  Matrix a(n, n);

  if (form == Form::Skip) {
    Matrix sum = first + second;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) a(i, j) = cosine(sum.row(i), sum.row(j));
    return a;
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (form == Form::Single) {
        a(i, j) = cosine(first.row(i), first.row(j));
      } else {
        a(i, j) = agreement(variant, first.row(i), second.row(i), first.row(j), second.row(j));
      }
    }
  }
  return a;
}

AgreementGrads agreement_matrix_backward(ObjectiveVariant variant, const Matrix& first,
                                         const Matrix& second, const Matrix& d_agreement) {
  check_slots(variant, first, second);
  const std::size_t n = first.rows();
  if (d_agreement.rows() != n || d_agreement.cols() != n) {
    throw std::invalid_argument("agreement_matrix_backward: upstream " +
                                d_agreement.shape_string());
  }
  const Form form = form_of(variant);
  AgreementGrads g;
  g.d_first = Matrix(first.rows(), first.cols());
  if (variant_slots(variant).count == 2) g.d_second = Matrix(second.rows(), second.cols());

  if (form == Form::Skip) {
    const Matrix sum = first + second;
    Matrix d_sum(n, sum.cols());
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        cosine_backward(sum.row(i), sum.row(j), d_agreement(i, j), d_sum.row(i), d_sum.row(j));
    g.d_first += d_sum;
    g.d_second += d_sum;
    return g;
  }

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double up = d_agreement(i, j);
      if (up == 0.0) continue;
      if (form == Form::Single) {
        cosine_backward(first.row(i), first.row(j), up, g.d_first.row(i), g.d_first.row(j));
        continue;
      }
      cosine_backward(first.row(i), second.row(j), up, g.d_first.row(i), g.d_second.row(j));
      cosine_backward(second.row(i), first.row(j), up, g.d_second.row(i), g.d_first.row(j));
      if (form == Form::PlusSingle) {
        cosine_backward(first.row(i), first.row(j), up, g.d_first.row(i), g.d_first.row(j));
        cosine_backward(second.row(i), second.row(j), up, g.d_second.row(i), g.d_second.row(j));
      }
    }
  }
  return g;
}

double Temperature::raw() const { return std::exp(log_tau); }

double Temperature::value() const { return std::clamp(raw(), kMin, kMax); }

bool Temperature::clamped() const {
  const double t = raw();
  return t < kMin || t > kMax;
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix p(logits.rows(), logits.cols());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    auto row = logits.row(i);
    const double mx = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) {
      p(i, j) = std::exp(row[j] - mx);
      z += p(i, j);
    }
    for (double& v : p.row(i)) v /= z;
  }
  return p;
}

LossResult contrastive_loss(const Matrix& agreement, const Temperature& tau,
                            const ContrastiveOptions& options) {
  const std::size_t n = agreement.rows();
  if (agreement.cols() != n) {
    throw std::invalid_argument("contrastive_loss: agreement must be square, got " +
                                agreement.shape_string());
  }
  if (n < 2) throw std::invalid_argument("contrastive_loss: need N >= 2");
  if (options.context < 1 || options.context >= n) {
    throw std::invalid_argument("contrastive_loss: context " + std::to_string(options.context) +
                                " outside [1, " + std::to_string(n - 1) + "]");
  }
  if (!all_finite(agreement.flat())) {
    throw NumericalError("contrastive_loss: non-finite agreement entry");
  }

  const double t = tau.value();
  Matrix logits = agreement * (1.0 / t);

  LossResult out;
  out.probabilities = softmax_rows(logits);
  Matrix d_logits(n, n);

  for (std::size_t i = 0; i < n; ++i) {
    auto row = logits.row(i);
    const double mx = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (double v : row) z += std::exp(v - mx);
    const double log_z = mx + std::log(z);

    const std::size_t lo = i >= options.context ? i - options.context : 0;
    const std::size_t hi = std::min(n - 1, i + options.context);
    std::size_t k = 0;
    for (std::size_t j = lo; j <= hi; ++j) {
      if (j == i && !options.include_self) continue;
      out.loss -= row[j] - log_z;
      d_logits(i, j) -= 1.0;
      ++k;
    }
    for (std::size_t j = 0; j < n; ++j) {
      d_logits(i, j) += static_cast<double>(k) * out.probabilities(i, j);
    }
    out.positive_pairs += k;
  }

  if (options.average && out.positive_pairs > 0) {
    const double scale = 1.0 / static_cast<double>(out.positive_pairs);
    out.loss *= scale;
    d_logits *= scale;
  }

  out.d_agreement = d_logits * (1.0 / t);
  if (!tau.clamped()) {
    double d = 0.0;
    for (std::size_t k = 0; k < logits.size(); ++k) d -= d_logits.flat()[k] * logits.flat()[k];
    out.d_log_tau = d;
  }
  return out;
}

}  // namespace cmax
