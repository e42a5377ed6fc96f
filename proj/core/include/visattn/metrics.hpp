#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "visattn/scene.hpp"

namespace visattn {

struct Prediction {
  std::string item_id;
  std::string answer;
  double confidence = 0.0;
};

struct LabelStats {
  std::size_t count = 0;
  std::size_t correct = 0;
  double accuracy = 0.0;
  double mean_confidence = 0.0;
};

struct EvalReport {
  std::size_t items = 0;
  double accuracy = 0.0;
  std::optional<double> pair_accuracy;  // absent when no item has a pair_id
  std::optional<double> set_accuracy;
  std::optional<double> f1;             // only when every item is true/false
  std::size_t pair_groups = 0;
  std::size_t set_groups = 0;
  std::map<std::string, LabelStats> per_label;  // keyed by lowercase gold text
  std::map<std::string, double> runtime;         // method -> seconds
};

/// Case-insensitive exact match against the gold option text.
bool answer_matches(const EvalItem& item, std::string_view answer);

/// predictions[i] answers items[i]. A non-empty prediction item_id must
/// match. Throws ContractViolation on a length or id mismatch.
EvalReport score(const std::vector<EvalItem>& items, const std::vector<Prediction>& predictions);

/// Counts indexed by Relation.
struct RelationCounts {
  std::array<std::size_t, 6> counts{};

  std::size_t& operator[](Relation r) { return counts[static_cast<std::size_t>(r)]; }
  std::size_t operator[](Relation r) const { return counts[static_cast<std::size_t>(r)]; }
  friend bool operator==(const RelationCounts&, const RelationCounts&) = default;
};

/// Gold answers that name a relation; other gold texts are ignored.
RelationCounts label_distribution(const std::vector<EvalItem>& items);

/// One record per line. A relation counts at most once per record.
RelationCounts count_relation_phrases(std::istream& in);
RelationCounts count_relation_phrases(std::string_view text);

/// scope,name,metric,value rows; reals with 6 decimals. Runtime is left out
/// so the file depends only on the predictions.
std::string format_report_csv(const EvalReport& report);
void write_report_csv(const EvalReport& report, const std::filesystem::path& path);

/// item_id,gold,answer,correct,confidence in item_id order.
std::string format_predictions_csv(const std::vector<EvalItem>& items,
                                   const std::vector<Prediction>& predictions);

struct Split {
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
};

/// Holds out whole groups (set_id, else pair_id, else the item itself).
/// round(fraction * groups) groups go to validation, chosen by a seeded
/// shuffle. Throws ContractViolation when either side would be empty.
Split split_validation(const std::vector<EvalItem>& items, double fraction, std::uint64_t seed);

}  // namespace visattn
