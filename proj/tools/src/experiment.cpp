#include "visattn/cli/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <thread>

#include "visattn/analysis.hpp"
#include "visattn/dataset.hpp"
#include "visattn/trace_io.hpp"
#include "visattn/transformer.hpp"

namespace visattn::cli {

namespace {

constexpr std::uint32_t kPromptSlack = 64;

std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

double require(const std::optional<double>& v, const char* flag, const std::string& method) {
  if (!v) throw UsageError("method " + method + " requires " + flag);
  return *v;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
}

// Item ids may come from external files; keep file names tame.
std::string file_stem(const std::string& id) {
  std::string s = id;
  for (char& c : s) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '-' || c == '_' || c == '.';
    if (!ok) c = '_';
  }
  return s;
}

std::vector<Relation> relation_options(const EvalItem& item) {
  std::vector<Relation> out;
  for (const auto& o : item.options) {
    const auto r = parse_relation(o);
    if (!r) throw UsageError("scripted model needs relation options; item '" + item.item_id + "' offers '" + o + "'");
    out.push_back(*r);
  }
  return out;
}

std::shared_ptr<const DecoderModel> transformer_for(const RunConfig& cfg) {
  std::shared_ptr<const WeightSet> weights;
  if (cfg.model_name == "seeded") {
    ModelConfig mc;
    mc.patch_side = cfg.patch_side;
    mc.max_seq = cfg.patch_side * cfg.patch_side + kPromptSlack;
    weights = std::make_shared<const WeightSet>(seeded_weights(mc, cfg.seed));
  } else {
    if (!std::filesystem::exists(cfg.model_name)) {
      throw UsageError("unknown model '" + cfg.model_name + "' (expected scripted, seeded or a weight file)");
    }
    weights = std::make_shared<const WeightSet>(load_weights(cfg.model_name));
  }
  return std::make_shared<const TransformerModel>(weights);
}

TuneOptions tune_options(const DecodeOptions& decode, bool from_confidence) {
  TuneOptions o;
  o.decode = decode;
  o.threshold_from_confidence = from_confidence;
  return o;
}

}  // namespace

InterventionSpec resolve_spec(const RunConfig& cfg) {
  const auto method = parse_method(cfg.method);
  if (!method) throw UsageError("unknown method '" + cfg.method + "'");
  InterventionSpec spec;
  spec.method = *method;
  switch (*method) {
    case Method::none: break;
    case Method::scaling: spec.alpha = require(cfg.weight1, "--weight1", cfg.method); break;
    case Method::adaptive:
      spec.alpha1 = require(cfg.weight1, "--weight1", cfg.method);
      spec.alpha2 = require(cfg.weight2, "--weight2", cfg.method);
      spec.beta = require(cfg.threshold, "--threshold", cfg.method);
      break;
    case Method::additive: spec.constant = require(cfg.constant, "--constant", cfg.method); break;
  }
  if (cfg.confidence == "geometric_mean") {
    spec.confidence = ConfidenceMode::geometric_mean;
  } else if (cfg.confidence != "first_token") {
    throw UsageError("unknown confidence mode '" + cfg.confidence + "'");
  }
  try {
    spec.validate();
  } catch (const ContractViolation& e) {
    throw UsageError(e.what());
  }
  return spec;
}

std::vector<EvalItem> load_items(const RunConfig& cfg) {
  if (cfg.dataset == "Controlled_Images_A" || cfg.dataset == "Controlled_Images_B") {
    if (cfg.n_pairs == 0) throw UsageError("--n-pairs must be at least 1");
    const auto mode = cfg.dataset.back() == 'A' ? ControlledMode::A : ControlledMode::B;
    return generate_controlled_set(cfg.n_pairs, mode, cfg.seed, cfg.patch_side).items;
  }
  if (!std::filesystem::exists(cfg.dataset)) throw UsageError("unknown dataset '" + cfg.dataset + "'");
  return load_dataset_json(cfg.dataset);
}

RefereeParams referee_params(const RunConfig& cfg) {
  if (!(cfg.misplace_prob >= 0.0 && cfg.misplace_prob <= 1.0)) {
    throw UsageError("--misplace-prob must lie in [0, 1]");
  }
  RefereeParams p;
  p.misplace_prob = cfg.misplace_prob;
  p.distractor_prob = std::min(p.distractor_prob, 1.0 - p.misplace_prob);
  return p;
}

std::vector<PreparedItem> prepare_items(const RunConfig& cfg, const std::vector<EvalItem>& items) {
  const Vocabulary& vocab = Vocabulary::standard();
  std::vector<PreparedItem> out;
  out.reserve(items.size());
  if (cfg.model_name == "scripted") {
    const RefereeParams params = referee_params(cfg);
    for (const auto& item : items) {
      if (!item.scene) {
        throw UsageError("scripted model needs scene geometry; item '" + item.item_id + "' has none");
      }
      ModelConfig mc;
      mc.patch_side = item.scene->patch_side;
      mc.max_seq = mc.patch_side * mc.patch_side + kPromptSlack;
      auto model = std::make_shared<const RefereeModel>(mc, *item.scene, item.reversed, relation_options(item), params);
      PreparedItem p{item, model, encode_item(item, mc), vocab.id(item.gold_text())};
      out.push_back(std::move(p));
    }
    return out;
  }
  const auto model = transformer_for(cfg);
  for (const auto& item : items) {
    if (item.scene && item.scene->patch_side != model->config().patch_side) {
      throw UsageError("item '" + item.item_id + "' uses a " + std::to_string(item.scene->patch_side) +
                       "-wide grid but the model expects " + std::to_string(model->config().patch_side));
    }
    PreparedItem p{item, model, encode_item(item, model->config()), vocab.id(item.gold_text())};
    out.push_back(std::move(p));
  }
  return out;
}

Evaluation evaluate(const std::vector<PreparedItem>& items, const InterventionSpec& spec,
                    const DecodeOptions& options, std::size_t threads) {
  const Vocabulary& vocab = Vocabulary::standard();
  Evaluation ev;
  ev.predictions.resize(items.size());
  ev.chosen_alpha.resize(items.size(), 1.0);
  ev.traces.resize(items.size());

  auto one = [&](std::size_t i) {
    const auto& p = items[i];
    MethodDecode d = run_method(*p.model, p.seq, spec, options);
    const TokenId answer = d.result.answer_token(options.end_token);
    ev.predictions[i] = {p.item.item_id, vocab.word(answer), d.result.answer_confidence};
    ev.chosen_alpha[i] = d.chosen_alpha;
    ev.traces[i] = d.result.prompt_trace;
  };

  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t workers = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(1, items.size()));
  if (workers == 1) {
    for (std::size_t i = 0; i < items.size(); ++i) one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = next++; i < items.size(); i = next++) one(i);
        } catch (...) {
          errors[w] = std::current_exception();
          next = items.size();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  ev.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return ev;
}

std::vector<PreparedItem> select(const std::vector<PreparedItem>& items,
                                 const std::vector<std::size_t>& indices) {
  std::vector<PreparedItem> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(items.at(i));
  return out;
}

std::vector<EvalItem> items_of(const std::vector<PreparedItem>& items) {
  std::vector<EvalItem> out;
  out.reserve(items.size());
  for (const auto& p : items) out.push_back(p.item);
  return out;
}

std::vector<ValidationCase> validation_cases(const std::vector<PreparedItem>& items) {
  std::vector<ValidationCase> out;
  out.reserve(items.size());
  for (const auto& p : items) out.push_back({p.model, p.seq, p.gold, p.item.gold_text()});
  return out;
}

std::string format_table(const std::string& label, const EvalReport& r) {
  auto opt = [](const std::optional<double>& v) { return v ? fixed(*v) : std::string("-"); };
  char line[256];
  std::snprintf(line, sizeof line, "%-14s %6s %9s %9s %9s %7s\n", "method", "items", "accuracy", "pair_acc",
                "set_acc", "f1");
  std::string out = line;
  std::snprintf(line, sizeof line, "%-14s %6zu %9s %9s %9s %7s\n", label.c_str(), r.items,
                fixed(r.accuracy).c_str(), opt(r.pair_accuracy).c_str(), opt(r.set_accuracy).c_str(),
                opt(r.f1).c_str());
  out += line;
  return out;
}

RunOutcome run(const RunConfig& cfg, std::ostream& log) {
  RunOutcome out;
  out.spec = resolve_spec(cfg);
  for (const auto& w : out.spec.warnings()) log << "warning: " << w << "\n";
  const auto items = load_items(cfg);
  if (items.empty()) throw UsageError("dataset '" + cfg.dataset + "' has no items");
  const auto prepared = prepare_items(cfg, items);

  DecodeOptions decode;
  decode.max_new = cfg.max_new;
  decode.forward.capture =
      cfg.emit_heatmaps || cfg.emit_traces ? TraceCapture::last_row : TraceCapture::none;

  const std::size_t reps = std::max<std::size_t>(1, cfg.timing_reps);
  const InterventionSpec baseline{};
  double best_base = 0.0;
  double best_method = 0.0;
  for (std::size_t r = 0; r < reps; ++r) {
    const double b = evaluate(prepared, baseline, decode, cfg.threads).seconds;
    out.evaluation = evaluate(prepared, out.spec, decode, cfg.threads);
    best_base = r == 0 ? b : std::min(best_base, b);
    best_method = r == 0 ? out.evaluation.seconds : std::min(best_method, out.evaluation.seconds);
  }
  out.baseline_seconds = best_base;
  out.method_seconds = best_method;

  out.report = score(items, out.evaluation.predictions);
  out.report.runtime["baseline"] = best_base;
  out.report.runtime[cfg.method] = best_method;

  const auto& dir = cfg.output_dir;
  std::filesystem::create_directories(dir);
  write_report_csv(out.report, dir / "report.csv");
  write_text(dir / "predictions.csv", format_predictions_csv(items, out.evaluation.predictions));
  write_text(dir / "spec.txt", format_spec(out.spec));
  if (cfg.emit_heatmaps) std::filesystem::create_directories(dir / "heatmaps");
  if (cfg.emit_traces) std::filesystem::create_directories(dir / "traces");
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& trace = out.evaluation.traces[i];
    if (!trace) continue;
    const std::string stem = file_stem(items[i].item_id);
    if (cfg.emit_heatmaps) {
      const std::size_t layer = default_analysis_layer(trace->config().layers);
      const auto map = map_to_patch_grid(*trace, trace->seq_len() - 1, layer, std::nullopt);
      export_heatmap(map, dir / "heatmaps" / (stem + ".ppm"));
    }
    if (cfg.emit_traces) save_trace(*trace, dir / "traces" / (stem + ".ait1"));
  }

  log << format_table(cfg.method, out.report);
  log << "timing: " << cfg.method << " / baseline = " << fixed(out.time_ratio(), 3) << "x (min of " << reps
      << " repetition" << (reps == 1 ? "" : "s") << ")\n";
  return out;
}

TuneOutcome tune(const RunConfig& cfg, const TuneConfig& tcfg, std::ostream& log) {
  if (tcfg.method != Method::scaling && tcfg.method != Method::adaptive) {
    throw UsageError("only scaling_vis and adapt_vis can be tuned");
  }
  try {
    tcfg.grid.validate();
  } catch (const ContractViolation& e) {
    throw UsageError(e.what());
  }
  const auto items = load_items(cfg);
  const auto prepared = prepare_items(cfg, items);

  TuneOutcome out;
  try {
    out.split = split_validation(items, tcfg.val_fraction, cfg.seed);
  } catch (const ContractViolation& e) {
    throw UsageError(e.what());
  }
  const auto val = select(prepared, out.split.validation);
  const auto test = select(prepared, out.split.test);
  const auto test_items = items_of(test);

  DecodeOptions decode;
  decode.max_new = cfg.max_new;
  decode.forward.capture = TraceCapture::none;

  const auto cases = validation_cases(val);
  out.tuned = tune_hyperparameters(cases, tcfg.grid, tcfg.method,
                                   tune_options(decode, tcfg.threshold_from_confidence));

  const auto tuned_eval = evaluate(test, out.tuned.best, decode, cfg.threads);
  out.tuned_test = score(test_items, tuned_eval.predictions);
  out.baseline_test = score(test_items, evaluate(test, InterventionSpec{}, decode, cfg.threads).predictions);
  for (double a : tcfg.grid.alpha_grid) {
    InterventionSpec s;
    s.method = Method::scaling;
    s.alpha = a;
    const double acc = score(test_items, evaluate(test, s, decode, cfg.threads).predictions).accuracy;
    out.scaling_test.emplace_back(a, acc);
    if (acc > out.best_single_accuracy || out.scaling_test.size() == 1) {
      out.best_single_accuracy = acc;
      out.best_single_alpha = a;
    }
  }

  const auto& dir = cfg.output_dir;
  std::filesystem::create_directories(dir);
  write_text(dir / "best_spec.txt", format_spec(out.tuned.best));
  write_report_csv(out.tuned_test, dir / "report.csv");
  std::string summary = "split,method,weight1,weight2,threshold,accuracy\n";
  const auto& b = out.tuned.best;
  const bool adaptive = b.method == Method::adaptive;
  summary += "validation," + std::string(to_string(b.method)) + "," + fixed(adaptive ? b.alpha1 : b.alpha, 6) + "," +
             (adaptive ? fixed(b.alpha2, 6) : "") + "," + (adaptive ? fixed(b.beta, 6) : "") + "," +
             fixed(out.tuned.accuracy, 6) + "\n";
  summary += "test,none,,,," + fixed(out.baseline_test.accuracy, 6) + "\n";
  for (const auto& [a, acc] : out.scaling_test) summary += "test,scaling," + fixed(a, 6) + ",,," + fixed(acc, 6) + "\n";
  summary += "test," + std::string(to_string(b.method)) + "," + fixed(adaptive ? b.alpha1 : b.alpha, 6) + "," +
             (adaptive ? fixed(b.alpha2, 6) : "") + "," + (adaptive ? fixed(b.beta, 6) : "") + "," +
             fixed(out.tuned_test.accuracy, 6) + "\n";
  write_text(dir / "tune_summary.csv", summary);

  log << "validation items: " << val.size() << ", test items: " << test.size() << ", candidates: "
      << out.tuned.candidates << "\n";
  log << "best spec:\n" << format_spec(b);
  log << "validation accuracy: " << fixed(out.tuned.accuracy) << "\n";
  log << format_table("baseline", out.baseline_test);
  log << "best single alpha " << fixed(out.best_single_alpha, 2) << ": " << fixed(out.best_single_accuracy) << "\n";
  log << format_table(std::string(to_string(b.method)), out.tuned_test);
  return out;
}

}  // namespace visattn::cli
