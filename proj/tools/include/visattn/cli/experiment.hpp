#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "visattn/error.hpp"
#include "visattn/intervention.hpp"
#include "visattn/metrics.hpp"
#include "visattn/referee.hpp"
#include "visattn/scene.hpp"

namespace visattn::cli {

/// Bad flag combination or unresolvable name. Exit code 2.
class UsageError : public Error {
 public:
  using Error::Error;
};

struct RunConfig {
  /// Controlled_Images_A, Controlled_Images_B or a path to a JSON file.
  std::string dataset = "Controlled_Images_A";
  /// scripted | seeded | path to an AIW1 weight file.
  std::string model_name = "scripted";
  /// baseline | scaling_vis | adapt_vis | additive.
  std::string method = "baseline";
  std::optional<double> weight1;
  std::optional<double> weight2;
  std::optional<double> threshold;
  std::optional<double> constant;
  /// first_token | geometric_mean (adapt_vis pass-1 confidence).
  std::string confidence = "first_token";
  std::filesystem::path output_dir = "visattn-out";
  std::uint64_t seed = 7;
  std::size_t n_pairs = 50;
  std::uint32_t patch_side = 24;
  double misplace_prob = 0.3;
  bool emit_heatmaps = false;
  bool emit_traces = false;
  std::size_t threads = 1;
  std::size_t timing_reps = 3;
  std::size_t max_new = 2;
};

/// Spec for cfg.method. Throws UsageError naming the missing flag.
InterventionSpec resolve_spec(const RunConfig& cfg);

std::vector<EvalItem> load_items(const RunConfig& cfg);

struct PreparedItem {
  EvalItem item;
  std::shared_ptr<const DecoderModel> model;
  TokenSequence seq;
  TokenId gold = 0;
};

RefereeParams referee_params(const RunConfig& cfg);
std::vector<PreparedItem> prepare_items(const RunConfig& cfg, const std::vector<EvalItem>& items);

struct Evaluation {
  std::vector<Prediction> predictions;
  std::vector<double> chosen_alpha;
  /// First-step traces (final prompt row), when capture was requested.
  std::vector<std::shared_ptr<const AttentionTrace>> traces;
  double seconds = 0.0;
};

/// Decodes every item; results are stored by item index so the thread
/// count does not change them.
Evaluation evaluate(const std::vector<PreparedItem>& items, const InterventionSpec& spec,
                    const DecodeOptions& options, std::size_t threads = 1);

std::vector<PreparedItem> select(const std::vector<PreparedItem>& items,
                                 const std::vector<std::size_t>& indices);
std::vector<EvalItem> items_of(const std::vector<PreparedItem>& items);
std::vector<ValidationCase> validation_cases(const std::vector<PreparedItem>& items);

struct RunOutcome {
  EvalReport report;
  InterventionSpec spec;
  Evaluation evaluation;
  double baseline_seconds = 0.0;
  double method_seconds = 0.0;
  double time_ratio() const { return baseline_seconds > 0.0 ? method_seconds / baseline_seconds : 1.0; }
};

/// Writes report.csv, predictions.csv, spec.txt and optional heatmaps/ and
/// traces/ under cfg.output_dir; prints the summary table to `log`.
RunOutcome run(const RunConfig& cfg, std::ostream& log);

struct TuneConfig {
  Method method = Method::adaptive;
  HyperGrid grid;
  double val_fraction = 0.2;
  bool threshold_from_confidence = false;
};

struct TuneOutcome {
  TuneResult tuned;
  Split split;
  EvalReport baseline_test;
  EvalReport tuned_test;
  /// Test accuracy of scaling_vis at every grid alpha.
  std::vector<std::pair<double, double>> scaling_test;
  double best_single_alpha = 1.0;
  double best_single_accuracy = 0.0;
};

/// Grid search on a validation split, then evaluation of the winner on the
/// held-out items. Writes best_spec.txt, report.csv (held-out, tuned method)
/// and tune_summary.csv.
TuneOutcome tune(const RunConfig& cfg, const TuneConfig& tcfg, std::ostream& log);

std::string format_table(const std::string& label, const EvalReport& report);

}  // namespace visattn::cli
