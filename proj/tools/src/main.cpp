#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "visattn/cli/experiment.hpp"

using namespace visattn;

namespace {

enum Exit { kOk = 0, kFailure = 1, kUsage = 2, kParse = 3, kIo = 4 };

int fail(const char* kind, const std::string& message, int code) {
  std::string flat = message;
  for (char& c : flat) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  std::cerr << "visattn: error: " << kind << ": " << flat << "\n";
  return code;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw cli::UsageError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Expands `--config FILE` into `--key=value` arguments placed before the
// explicit ones, so flags on the command line win.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  for (std::size_t i = 0; i < args.size(); ++i) {
    std::string path;
    std::size_t span = 0;
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
      span = 2;
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      span = 1;
    } else {
      continue;
    }
    std::vector<std::string> injected;
    for (const auto& [key, value] : parse_flat_config(read_file(path))) injected.push_back("--" + key + "=" + value);
    args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i + span));
    const std::size_t at = args.empty() || args[0].rfind("-", 0) == 0 ? 0 : 1;  // after the subcommand
    args.insert(args.begin() + static_cast<std::ptrdiff_t>(at), injected.begin(), injected.end());
    break;
  }
  return args;
}

void add_run_options(CLI::App& app, cli::RunConfig& cfg) {
  app.add_option("--dataset", cfg.dataset, "Controlled_Images_A, Controlled_Images_B or a JSON file");
  app.add_option("--model-name", cfg.model_name, "scripted, seeded or an AIW1 weight file");
  app.add_option("--method", cfg.method, "baseline, scaling_vis, adapt_vis or additive");
  app.add_option("--weight1", cfg.weight1, "scaling coefficient (adapt_vis: low-confidence alpha)");
  app.add_option("--weight2", cfg.weight2, "adapt_vis high-confidence alpha");
  app.add_option("--threshold", cfg.threshold, "adapt_vis confidence threshold");
  app.add_option("--constant", cfg.constant, "additive constant");
  app.add_option("--confidence", cfg.confidence, "first_token or geometric_mean");
  app.add_option("--output-dir", cfg.output_dir, "directory for every output file");
  app.add_option("--seed", cfg.seed, "dataset and seeded-model seed");
  app.add_option("--n-pairs", cfg.n_pairs, "object pairs in a generated set");
  app.add_option("--patch-side", cfg.patch_side, "patch grid side P");
  app.add_option("--misplace-prob", cfg.misplace_prob, "scripted model misplacement probability");
  app.add_option("--threads", cfg.threads, "worker threads");
  app.add_option("--timing-reps", cfg.timing_reps, "timing repetitions (minimum is reported)");
  app.add_option("--max-new", cfg.max_new, "generation budget per item");
  app.add_flag("--emit-heatmaps", cfg.emit_heatmaps, "write heatmaps/<item>.ppm");
  app.add_flag("--emit-traces", cfg.emit_traces, "write traces/<item>.ait1");
  app.add_option("--config", "flat key = value file with any of these options");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Attention intervention experiments on spatial QA sets"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);

  cli::RunConfig cfg;
  auto* run_cmd = app.add_subcommand("run", "evaluate one method");
  add_run_options(*run_cmd, cfg);

  cli::TuneConfig tcfg;
  std::string tune_method = "adapt_vis";
  std::vector<double> beta_range{0.2, 0.55};
  double beta_step = 0.05;
  auto* tune_cmd = app.add_subcommand("tune", "grid-search coefficients on a validation split");
  add_run_options(*tune_cmd, cfg);
  tune_cmd->get_option("--method")->default_str("adapt_vis");
  tune_cmd->add_option("--alpha-grid", tcfg.grid.alpha_grid, "candidate alphas")->delimiter(',');
  tune_cmd->add_option("--beta-range", beta_range, "lo,hi")->delimiter(',')->expected(2);
  tune_cmd->add_option("--beta-step", beta_step, "threshold grid step");
  tune_cmd->add_option("--val-fraction", tcfg.val_fraction, "validation share of the groups");
  tune_cmd->add_flag("--threshold-from-confidence", tcfg.threshold_from_confidence,
                     "set the threshold from per-label mean confidence");

  try {
    auto args = expand_config(argc, argv);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return fail("usage", e.what(), kUsage);
  } catch (const ParseError& e) {
    return fail("parse", std::string(e.what()) + " (offset " + std::to_string(e.offset()) + ")", kParse);
  } catch (const Error& e) {
    return fail("usage", e.what(), kUsage);
  }

  try {
    if (run_cmd->parsed()) {
      cli::run(cfg, std::cout);
    } else {
      if (tune_cmd->get_option("--method")->count() == 0) cfg.method = tune_method;
      const auto m = parse_method(cfg.method);
      if (!m) throw cli::UsageError("unknown method '" + cfg.method + "'");
      tcfg.method = *m;
      tcfg.grid.beta_step = beta_step;
      tcfg.grid.beta_grid = HyperGrid::range(beta_range.at(0), beta_range.at(1), beta_step);
      cli::tune(cfg, tcfg, std::cout);
    }
  } catch (const cli::UsageError& e) {
    return fail("usage", e.what(), kUsage);
  } catch (const ParseError& e) {
    return fail("parse", std::string(e.what()) + " (offset " + std::to_string(e.offset()) + ")", kParse);
  } catch (const ContractViolation& e) {
    return fail("usage", e.what(), kUsage);
  } catch (const IoError& e) {
    return fail("io", e.what(), kIo);
  } catch (const std::filesystem::filesystem_error& e) {
    return fail("io", e.what(), kIo);
  } catch (const Error& e) {
    return fail("runtime", e.what(), kFailure);
  } catch (const std::exception& e) {
    return fail("internal", e.what(), kFailure);
  }
  return kOk;
}
