#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cmax/evalsuite/metrics.hpp"
#include "cmax/evalsuite/probe.hpp"
#include "cmax/objective/objective.hpp"
#include "cmax/pipeline/config.hpp"
#include "cmax/pipeline/trainer.hpp"

namespace cmax {

struct AblationAssets {
  std::optional<std::vector<StsPair>> sts;
  std::optional<Corpus> retrieval;  // held-out stream with document breaks
  std::optional<LabeledSet> cls_train;
  std::optional<LabeledSet> cls_test;
  ProbeConfig probe;
};

// Reads the evaluation files named in a config (empty paths are skipped).
AblationAssets load_ablation_assets(const TrainConfig& config);

struct AblationRow {
  std::string name;
  std::optional<ObjectiveVariant> variant;  // empty for combined rows
  std::uint64_t steps = 0;
  double seconds = 0.0;
  bool ok = true;
  std::string error;
  std::string views;               // e.g. "f+g"
  std::vector<ViewScores> scores;  // one per report metric
  std::optional<ModelParams> params;
  MetricsLog metrics;
};

struct AblationReport {
  std::vector<std::string> metrics;  // "sts", "retrieval", "probe" as available
  std::vector<AblationRow> rows;

  const AblationRow* find(const std::string& name) const;
  // Aligned text with scores x100 and arrows for the change relative to the
  // MultiViewFG row.
  std::string to_table() const;
  std::string to_csv() const;
};

inline constexpr const char* kSingleViewEnsembleRow = "SingleViewF+SingleViewG";

// Trains each variant with the same seed and budget, then evaluates every
// available metric per view and for the ensemble. A failing variant is
// recorded on its row and the run continues. When both single-view variants
// are present an extra row scores the ensemble of their two encoders.
AblationReport run_ablation(const TrainConfig& base, const Corpus& corpus,
                            const EmbeddingTable& table, const AblationAssets& assets,
                            const std::vector<ObjectiveVariant>& variants = {
                                kAllVariants.begin(), kAllVariants.end()});

// Evaluator for training-time learning curves: STS if available, otherwise
// retrieval. Returns an empty function when neither is available.
Evaluator curve_evaluator(const TrainConfig& config, const EmbeddingTable& table,
                          const AblationAssets& assets);

// step, then <run>_first, <run>_second, <run>_ensemble for every run.
std::string learning_curve_csv(const std::vector<std::pair<std::string, MetricsLog>>& runs);
void learning_curve_export(const std::vector<std::pair<std::string, MetricsLog>>& runs,
                           const std::filesystem::path& path);

}  // namespace cmax
