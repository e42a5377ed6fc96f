#include "visattn/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "visattn/error.hpp"
#include "visattn/rng.hpp"

namespace visattn {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string trimmed(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

bool any_of(const std::string& text, std::initializer_list<const char*> phrases) {
  for (const char* p : phrases) {
    if (text.find(p) != std::string::npos) return true;
  }
  return false;
}

void count_record(const std::string& record, RelationCounts& out) {
  const std::string t = lower(record);
  if (any_of(t, {"left side", "left of", "to the left", "on the left"})) ++out[Relation::left];
  if (any_of(t, {"right side", "right of", "to the right", "on the right"})) ++out[Relation::right];
  if (any_of(t, {"are on the", "is on the", "located on"}) &&
      !any_of(t, {"on the left", "on the right"})) {
    ++out[Relation::on];
  }
  if (any_of(t, {"under the", "beneath the", "below the"})) ++out[Relation::under];
  if (any_of(t, {"are in front of", "is in front of", "locate in front of"})) ++out[Relation::front];
  if (any_of(t, {"behind the"})) ++out[Relation::behind];
}

// All-or-nothing accuracy over groups keyed by `key`.
template <class Key>
std::optional<double> group_accuracy(const std::vector<EvalItem>& items, const std::vector<bool>& correct,
                                     Key key, std::size_t& groups) {
  std::map<std::string, bool> all_correct;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& id = key(items[i]);
    if (!id) continue;
    auto [it, inserted] = all_correct.emplace(*id, true);
    it->second = it->second && correct[i];
  }
  groups = all_correct.size();
  if (groups == 0) return std::nullopt;
  std::size_t ok = 0;
  for (const auto& [id, c] : all_correct) ok += c ? 1 : 0;
  return static_cast<double>(ok) / static_cast<double>(groups);
}

}  // namespace

bool answer_matches(const EvalItem& item, std::string_view answer) {
  return lower(trimmed(answer)) == lower(trimmed(item.gold_text()));
}

EvalReport score(const std::vector<EvalItem>& items, const std::vector<Prediction>& predictions) {
  if (items.size() != predictions.size()) {
    throw ContractViolation("score: " + std::to_string(predictions.size()) + " predictions for " +
                            std::to_string(items.size()) + " items");
  }
  EvalReport report;
  report.items = items.size();
  std::vector<bool> correct(items.size());
  std::map<std::string, double> conf_sum;
  bool all_binary = !items.empty();
  std::size_t tp = 0, fp = 0, fn = 0, hits = 0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& item = items[i];
    const auto& pred = predictions[i];
    if (!pred.item_id.empty() && pred.item_id != item.item_id) {
      throw ContractViolation("score: prediction " + std::to_string(i) + " is for '" + pred.item_id +
                              "', expected '" + item.item_id + "'");
    }
    correct[i] = answer_matches(item, pred.answer);
    hits += correct[i] ? 1 : 0;

    const std::string label = lower(item.gold_text());
    LabelStats& s = report.per_label[label];
    ++s.count;
    s.correct += correct[i] ? 1 : 0;
    conf_sum[label] += pred.confidence;

    if (item.binary()) {
      const bool gold_true = label == "true";
      const bool pred_true = lower(trimmed(pred.answer)) == "true";
      if (gold_true && pred_true) ++tp;
      if (!gold_true && pred_true) ++fp;
      if (gold_true && !pred_true) ++fn;
    } else {
      all_binary = false;
    }
  }
  if (!items.empty()) report.accuracy = static_cast<double>(hits) / static_cast<double>(items.size());
  for (auto& [label, s] : report.per_label) {
    s.accuracy = static_cast<double>(s.correct) / static_cast<double>(s.count);
    s.mean_confidence = conf_sum[label] / static_cast<double>(s.count);
  }
  report.pair_accuracy = group_accuracy(items, correct, [](const EvalItem& e) -> const auto& { return e.pair_id; },
                                        report.pair_groups);
  report.set_accuracy = group_accuracy(items, correct, [](const EvalItem& e) -> const auto& { return e.set_id; },
                                       report.set_groups);
  if (all_binary) {
    const std::size_t denom = 2 * tp + fp + fn;
    report.f1 = denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
  }
  return report;
}

RelationCounts label_distribution(const std::vector<EvalItem>& items) {
  RelationCounts out;
  for (const auto& item : items) {
    if (const auto r = parse_relation(trimmed(item.gold_text()))) ++out[*r];
  }
  return out;
}

RelationCounts count_relation_phrases(std::istream& in) {
  RelationCounts out;
  std::string line;
  while (std::getline(in, line)) count_record(line, out);
  return out;
}

RelationCounts count_relation_phrases(std::string_view text) {
  std::istringstream in{std::string(text)};
  return count_relation_phrases(in);
}

std::string format_report_csv(const EvalReport& report) {
  std::string out = "scope,name,metric,value\n";
  auto row = [&](const std::string& scope, const std::string& name, const std::string& metric,
                 const std::string& value) { out += scope + "," + name + "," + metric + "," + value + "\n"; };
  row("overall", "all", "items", std::to_string(report.items));
  row("overall", "all", "accuracy", real(report.accuracy));
  if (report.pair_accuracy) {
    row("overall", "all", "pair_groups", std::to_string(report.pair_groups));
    row("overall", "all", "pair_accuracy", real(*report.pair_accuracy));
  }
  if (report.set_accuracy) {
    row("overall", "all", "set_groups", std::to_string(report.set_groups));
    row("overall", "all", "set_accuracy", real(*report.set_accuracy));
  }
  if (report.f1) row("overall", "all", "f1", real(*report.f1));
  for (const auto& [label, s] : report.per_label) {
    row("label", label, "count", std::to_string(s.count));
    row("label", label, "accuracy", real(s.accuracy));
    row("label", label, "mean_confidence", real(s.mean_confidence));
  }
  return out;
}

void write_report_csv(const EvalReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << format_report_csv(report);
}

std::string format_predictions_csv(const std::vector<EvalItem>& items,
                                   const std::vector<Prediction>& predictions) {
  if (items.size() != predictions.size()) throw ContractViolation("format_predictions_csv: length mismatch");
  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return items[a].item_id < items[b].item_id; });
  std::string out = "item_id,gold,answer,correct,confidence\n";
  for (std::size_t i : order) {
    out += items[i].item_id + "," + items[i].gold_text() + "," + predictions[i].answer + "," +
           (answer_matches(items[i], predictions[i].answer) ? "1" : "0") + "," +
           real(predictions[i].confidence) + "\n";
  }
  return out;
}

Split split_validation(const std::vector<EvalItem>& items, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw ContractViolation("split_validation: fraction must lie in (0, 1)");
  }
  std::vector<std::string> group_names;
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& it = items[i];
    const std::string key = it.set_id ? "s:" + *it.set_id : it.pair_id ? "p:" + *it.pair_id : "i:" + it.item_id;
    auto& members = groups[key];
    if (members.empty()) group_names.push_back(key);
    members.push_back(i);
  }
  const std::size_t n = group_names.size();
  const auto k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  if (k == 0 || k >= n) {
    throw ContractViolation("split_validation: fraction " + real(fraction) + " of " + std::to_string(n) +
                            " groups leaves an empty split");
  }
  SplitMix64 rng(seed);
  for (std::size_t i = n - 1; i > 0; --i) {
    std::swap(group_names[i], group_names[rng.below(i + 1)]);
  }
  Split split;
  for (std::size_t g = 0; g < n; ++g) {
    auto& dst = g < k ? split.validation : split.test;
    const auto& members = groups[group_names[g]];
    dst.insert(dst.end(), members.begin(), members.end());
  }
  std::sort(split.validation.begin(), split.validation.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

}  // namespace visattn
