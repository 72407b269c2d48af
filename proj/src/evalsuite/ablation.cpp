#include "cmax/evalsuite/ablation.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "cmax/errors.hpp"

namespace cmax {

namespace {

std::string fixed(double v, int digits) {
  if (std::isnan(v)) return "-";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string delta_cell(double v, double ref) {
  if (std::isnan(v)) return "-";
  std::string cell = fixed(100.0 * v, 1);
  if (std::isnan(ref)) return cell;
  const double d = 100.0 * (v - ref);
  if (std::abs(d) < 0.05) return cell + " (=)";
  return cell + (d > 0 ? " (↑" : " (↓") + fixed(std::abs(d), 1) + ")";
}

// Display width counting each UTF-8 code point once.
std::size_t width(const std::string& s) {
  std::size_t w = 0;
  for (unsigned char c : s) w += (c & 0xC0) != 0x80;
  return w;
}

std::string pad(const std::string& s, std::size_t w) {
  return s + std::string(w > width(s) ? w - width(s) : 0, ' ');
}

std::string csv_value(double v) { return std::isnan(v) ? std::string() : format_double(v); }

std::vector<ViewScores> evaluate_all(const ViewEncoder& enc, const EmbeddingTable& table,
                                     const AblationAssets& assets) {
  std::vector<ViewScores> out;
  if (assets.sts) out.push_back(eval_sts(enc, *assets.sts, table));
  if (assets.retrieval) out.push_back(eval_retrieval(enc, *assets.retrieval, table));
  if (assets.cls_train && assets.cls_test) {
    out.push_back(eval_cls(enc, *assets.cls_train, *assets.cls_test, table, assets.probe));
  }
  return out;
}

std::string view_list(const ModelParams& p) {
  std::string s;
  for (std::size_t k = 0; k < p.slot_count(); ++k) s += (k ? "+" : "") + p.slot_label(k);
  return s;
}

}  // namespace

AblationAssets load_ablation_assets(const TrainConfig& config) {
  AblationAssets a;
  a.probe.seed = config.seed;
  if (!config.eval_pairs.empty()) a.sts = load_sts_pairs(config.eval_pairs);
  if (!config.eval_corpus.empty()) a.retrieval = load_corpus(config.eval_corpus);
  if (!config.eval_cls_train.empty() != !config.eval_cls_test.empty()) {
    throw ConfigError("eval_cls_train and eval_cls_test must be given together");
  }
  if (!config.eval_cls_train.empty()) {
    a.cls_train = load_labeled(config.eval_cls_train);
    a.cls_test = load_labeled(config.eval_cls_test, a.cls_train->label_names);
  }
  return a;
}

const AblationRow* AblationReport::find(const std::string& name) const {
  for (const auto& r : rows) {
    if (r.name == name) return &r;
  }
  return nullptr;
}

std::string AblationReport::to_table() const {
  std::vector<std::string> header{"variant", "views", "steps", "secs"};
  for (const auto& m : metrics) {
    header.push_back(m + " first");
    header.push_back(m + " second");
    header.push_back(m + " ensemble");
  }
  const AblationRow* ref = find(std::string(to_string(ObjectiveVariant::MultiViewFG)));
  const bool ref_ok = ref && ref->ok;

  std::vector<std::vector<std::string>> cells{header};
  for (const auto& r : rows) {
    std::vector<std::string> line{r.name, r.views, std::to_string(r.steps), fixed(r.seconds, 1)};
    if (!r.ok) {
      line.push_back("FAILED: " + r.error);
    } else {
      for (std::size_t m = 0; m < metrics.size(); ++m) {
        const ViewScores& s = r.scores[m];
        const ViewScores rs = ref_ok ? ref->scores[m] : ViewScores{};
        line.push_back(delta_cell(s.first, rs.first));
        line.push_back(delta_cell(s.second, rs.second));
        line.push_back(delta_cell(s.ensemble, rs.ensemble));
      }
    }
    cells.push_back(std::move(line));
  }
  std::vector<std::size_t> widths(header.size(), 0);
  for (const auto& line : cells) {
    for (std::size_t c = 0; c < line.size() && c < widths.size(); ++c) {
      widths[c] = std::max(widths[c], width(line[c]));
    }
  }
  std::ostringstream out;
  for (const auto& line : cells) {
    std::string text;
    for (std::size_t c = 0; c < line.size(); ++c) {
      text += c + 1 < line.size() ? pad(line[c], c < widths.size() ? widths[c] : 0) + "  " : line[c];
    }
    out << text << '\n';
  }
  return out.str();
}

std::string AblationReport::to_csv() const {
  std::ostringstream out;
  out << "variant,views,steps,seconds,ok,error";
  for (const auto& m : metrics) out << ',' << m << "_first," << m << "_second," << m << "_ensemble";
  out << '\n';
  for (const auto& r : rows) {
    std::string error = r.error;
    for (char& c : error) {
      if (c == ',' || c == '\n') c = ';';
    }
    out << r.name << ',' << r.views << ',' << r.steps << ',' << format_double(r.seconds) << ','
        << (r.ok ? "true" : "false") << ',' << error;
    for (std::size_t m = 0; m < metrics.size(); ++m) {
      const ViewScores s = r.ok ? r.scores[m] : ViewScores{};
      out << ',' << csv_value(s.first) << ',' << csv_value(s.second) << ','
          << csv_value(s.ensemble);
    }
    out << '\n';
  }
  return out.str();
}

Evaluator curve_evaluator(const TrainConfig& config, const EmbeddingTable& table,
                          const AblationAssets& assets) {
  if (assets.sts) {
    return [config, &table, &assets](const ModelParams& p) {
      return eval_sts(model_encoder(p, config), *assets.sts, table);
    };
  }
  if (assets.retrieval) {
    return [config, &table, &assets](const ModelParams& p) {
      return eval_retrieval(model_encoder(p, config), *assets.retrieval, table);
    };
  }
  return {};
}

AblationReport run_ablation(const TrainConfig& base, const Corpus& corpus,
                            const EmbeddingTable& table, const AblationAssets& assets,
                            const std::vector<ObjectiveVariant>& variants) {
  AblationReport report;
  if (assets.sts) report.metrics.push_back("sts");
  if (assets.retrieval) report.metrics.push_back("retrieval");
  if (assets.cls_train && assets.cls_test) report.metrics.push_back("probe");

  for (ObjectiveVariant v : variants) {
    AblationRow row;
    row.name = std::string(to_string(v));
    row.variant = v;
    TrainConfig config = base;
    config.variant = v;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      Trainer trainer(config, corpus, table);
      row.views = view_list(trainer.params());
      trainer.set_evaluator(curve_evaluator(config, table, assets));
      trainer.run_to_budget();
      row.steps = trainer.steps_done();
      row.params = trainer.params();
      row.metrics = trainer.metrics();
      row.scores = evaluate_all(model_encoder(*row.params, config), table, assets);
    } catch (const std::exception& e) {
      row.ok = false;
      row.error = e.what();
    }
    row.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report.rows.push_back(std::move(row));
  }

  const AblationRow* f = report.find(std::string(to_string(ObjectiveVariant::SingleViewF)));
  const AblationRow* g = report.find(std::string(to_string(ObjectiveVariant::SingleViewG)));
  if (f && g) {
    AblationRow row;
    row.name = kSingleViewEnsembleRow;
    row.views = "f+g";
    row.steps = f->steps + g->steps;
    row.seconds = f->seconds + g->seconds;
    if (!f->ok || !g->ok) {
      row.ok = false;
      row.error = "a single-view run failed";
    } else {
      TrainConfig cf = base, cg = base;
      cf.variant = ObjectiveVariant::SingleViewF;
      cg.variant = ObjectiveVariant::SingleViewG;
      try {
        row.scores = evaluate_all(
            merged_encoder({model_encoder(*f->params, cf), model_encoder(*g->params, cg)}), table,
            assets);
      } catch (const std::exception& e) {
        row.ok = false;
        row.error = e.what();
      }
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

std::string learning_curve_csv(const std::vector<std::pair<std::string, MetricsLog>>& runs) {
  if (runs.empty()) throw std::invalid_argument("learning_curve_export: no runs");
  std::map<std::uint64_t, std::vector<std::optional<ViewScores>>> table;
  for (std::size_t r = 0; r < runs.size(); ++r) {
    bool any = false;
    for (const auto& rec : runs[r].second.records()) {
      if (!rec.eval) continue;
      any = true;
      auto& slot = table[rec.step];
      slot.resize(runs.size());
      slot[r] = rec.eval;
    }
    if (!any) {
      throw DataError("learning_curve_export: run '" + runs[r].first +
                      "' has no eval records: no eval cadence configured");
    }
  }
  std::ostringstream out;
  out << "step";
  for (const auto& [name, log] : runs) {
    out << ',' << name << "_first," << name << "_second," << name << "_ensemble";
  }
  out << '\n';
  for (auto& [step, slots] : table) {
    slots.resize(runs.size());
    out << step;
    for (const auto& s : slots) {
      const ViewScores v = s.value_or(ViewScores{});
      out << ',' << csv_value(v.first) << ',' << csv_value(v.second) << ','
          << csv_value(v.ensemble);
    }
    out << '\n';
  }
  return out.str();
}

void learning_curve_export(const std::vector<std::pair<std::string, MetricsLog>>& runs,
                           const std::filesystem::path& path) {
  const std::string text = learning_curve_csv(runs);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("failed writing " + path.string());
}

}  // namespace cmax
