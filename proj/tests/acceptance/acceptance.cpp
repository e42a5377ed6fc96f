// Prints one PASS/FAIL line per acceptance criterion; exits 1 if any fail.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "oracle.hpp"
#include "visattn/analysis.hpp"
#include "visattn/cli/experiment.hpp"
#include "visattn/dataset.hpp"
#include "visattn/intervention.hpp"
#include "visattn/metrics.hpp"

using namespace visattn;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

// seed-7 demo, pinned from a one-time run
constexpr std::uint64_t kDemoSeed = 7;
constexpr double kPinnedBaseline = 0.53125;
constexpr double kPinnedBestSingleAlpha = 0.5;
constexpr double kPinnedBestSingle = 0.80625;
constexpr double kPinnedAdaptive = 0.9875;
constexpr double kPinnedAlpha1 = 0.5, kPinnedAlpha2 = 2.0, kPinnedBeta = 0.45;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& why) {
    if (!ok && pass) {
      pass = false;
      detail.str("");
      detail << why;
    }
  }
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::mt19937_64 rng(987654321);

std::vector<double> random_row(std::size_t n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

std::vector<double> image_conditional(std::span<const double> row, ImageSpan span) {
  const auto p = softmax(row);
  std::vector<double> img(p.begin() + span.offset, p.begin() + span.end());
  const double z = std::accumulate(img.begin(), img.end(), 0.0);
  for (double& v : img) v /= z;
  return img;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

cli::RunConfig demo_config(const fs::path& dir) {
  cli::RunConfig cfg;
  cfg.seed = kDemoSeed;
  cfg.n_pairs = 50;
  cfg.patch_side = 24;
  cfg.misplace_prob = 0.3;
  cfg.output_dir = dir;
  return cfg;
}

// --- criteria ---------------------------------------------------------------

void identity_suite(Outcome& o) {
  const auto t0 = Clock::now();
  std::size_t checked = 0;
  auto suite = [&](cli::RunConfig cfg) {
    cfg.n_pairs = 25;
    const auto items = cli::load_items(cfg);
    o.require(items.size() == 100, "expected 100 items, got " + std::to_string(items.size()));
    const auto prepared = cli::prepare_items(cfg, items);
    DecodeOptions d;
    d.forward.capture = TraceCapture::last_row;
    InterventionSpec flat;
    flat.method = Method::adaptive;
    flat.alpha1 = flat.alpha2 = 1.0;
    flat.beta = 0.4;
    for (const auto& p : prepared) {
      const DecodeResult base = decode_greedy(*p.model, p.seq, ImageHook{}, d);
      const bool a = fixture::same_decode(base, scalingvis_decode(*p.model, p.seq, 1.0, d));
      const bool b = fixture::same_decode(base, additive_decode(*p.model, p.seq, 0.0, d));
      const bool c = fixture::same_decode(base, adaptvis_decode(*p.model, p.seq, flat, d).result);
      o.require(a && b && c, p.item.item_id + " (" + cfg.model_name + ") differs from baseline");
      ++checked;
    }
  };
  cli::RunConfig scripted;
  scripted.patch_side = 24;
  suite(scripted);
  cli::RunConfig seeded;
  seeded.model_name = "seeded";
  seeded.patch_side = 8;
  suite(seeded);
  const double s = seconds_since(t0);
  o.require(s < 10.0, "took " + std::to_string(s) + " s");
  if (o.pass) o.detail << checked << " decodes x 3 methods bit-identical, " << std::fixed << std::setprecision(2) << s << " s";
}

void temperature_algebra(Outcome& o) {
  const std::vector<double> alphas{0.5, 0.8, 1.2, 1.5, 2.0};
  double worst_ratio = 0.0;
  std::size_t constant_blocks = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t text = 1 + rng() % 8, img = 2 + rng() % 64;
    auto row = random_row(text + img, -6.0, 6.0);
    const ImageSpan span{rng() % (text + 1), img};
    const bool constant = trial % 50 == 0;
    if (constant) {
      std::fill(row.begin() + span.offset, row.begin() + span.end(), row[span.offset]);
      ++constant_blocks;
    }
    const std::vector<double> a(row.begin() + span.offset, row.begin() + span.end());
    const auto arg = std::max_element(a.begin(), a.end()) - a.begin();
    std::vector<std::pair<double, double>> entropies;
    for (double alpha : alphas) {
      const auto scaled = scale_image_logits(row, span, alpha);
      const auto p = softmax(scaled);
      const std::vector<double> q(p.begin() + span.offset, p.begin() + span.end());
      o.require(std::max_element(q.begin(), q.end()) - q.begin() == arg,
                "argmax moved at alpha " + std::to_string(alpha));
      for (std::size_t i = 0; i + 1 < img; ++i) {
        const double want = std::exp(alpha * (a[i] - a[i + 1]));
        const double rel = std::abs(q[i] / q[i + 1] - want) / want;
        worst_ratio = std::max(worst_ratio, rel);
      }
      entropies.emplace_back(alpha, attention_entropy(image_conditional(scaled, span)));
    }
    for (std::size_t k = 1; k < entropies.size(); ++k) {
      const double h0 = entropies[k - 1].second, h1 = entropies[k].second;
      if (constant) {
        o.require(std::abs(h1 - h0) <= 1e-12, "constant block entropy changed");
      } else {
        o.require(h1 < h0, "entropy not decreasing between alpha " + std::to_string(entropies[k - 1].first) +
                               " and " + std::to_string(entropies[k].first));
      }
    }
  }
  o.require(worst_ratio <= 1e-9, "ratio error " + std::to_string(worst_ratio));
  if (o.pass)
    o.detail << "1000 rows, max relative ratio error " << std::scientific << std::setprecision(2) << worst_ratio
             << ", " << constant_blocks << " constant blocks tie";
}

void additive_invariant(Outcome& o) {
  double worst_mass = 0.0, worst_cond = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t text = 1 + rng() % 8, img = 1 + rng() % 64;
    const auto row = random_row(text + img, -6.0, 6.0);
    const ImageSpan span{rng() % (text + 1), img};
    auto mass_ratio = [&](std::span<const double> r) {
      const auto p = softmax(r);
      double im = 0, tx = 0;
      for (std::size_t j = 0; j < p.size(); ++j) (span.contains(j) ? im : tx) += p[j];
      return im / tx;
    };
    const auto base = image_conditional(row, span);
    const double base_ratio = mass_ratio(row);
    for (double c : {-1.0, 0.5, 2.0}) {
      const auto shifted = add_constant(row, span, c);
      const double factor = mass_ratio(shifted) / base_ratio;
      worst_mass = std::max(worst_mass, std::abs(factor - std::exp(c)) / std::exp(c));
      const auto cond = image_conditional(shifted, span);
      for (std::size_t i = 0; i < img; ++i) worst_cond = std::max(worst_cond, std::abs(cond[i] - base[i]));
    }
  }
  o.require(worst_mass <= 1e-9, "mass ratio error " + std::to_string(worst_mass));
  o.require(worst_cond <= 1e-12, "conditional moved by " + std::to_string(worst_cond));
  if (o.pass)
    o.detail << std::scientific << std::setprecision(2) << "mass factor rel error " << worst_mass
             << ", conditional drift " << worst_cond;
}

void auroc_equivalence(Outcome& o) {
  double worst = 0.0, worst_flip = 0.0;
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 2 + rng() % 199;
    const int levels = 1 + static_cast<int>(rng() % 20);
    std::vector<double> scores(n);
    std::unique_ptr<bool[]> labels(new bool[n]);
    std::vector<ScoredSample> s(n);
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = static_cast<double>(rng() % levels) / levels;
      labels[i] = rng() % 2;
    }
    labels[0] = true;
    labels[1] = false;
    for (std::size_t i = 0; i < n; ++i) s[i] = {scores[i], labels[i]};
    const double want = oracle::auroc(scores, std::span<const bool>(labels.get(), n));
    const double got = auroc(s);
    worst = std::max(worst, std::abs(got - want));
    for (auto& x : s) x.label = !x.label;
    worst_flip = std::max(worst_flip, std::abs(auroc(s) - (1.0 - got)));
  }
  std::vector<ScoredSample> sep;
  for (int i = 0; i < 50; ++i) sep.push_back({0.5 + i * 0.01, true});
  for (int i = 0; i < 70; ++i) sep.push_back({0.1 + i * 0.005, false});
  const double perfect = auroc(sep);
  o.require(worst <= 1e-12, "oracle mismatch " + std::to_string(worst));
  o.require(worst_flip <= 1e-12, "flip asymmetry " + std::to_string(worst_flip));
  o.require(perfect == 1.0, "perfect separation gave " + std::to_string(perfect));
  if (o.pass)
    o.detail << "500 cases, max |diff| " << std::scientific << std::setprecision(2) << worst << ", flip "
             << worst_flip << ", separated = 1";
}

void analysis_formulas(Outcome& o) {
  double worst_h = 0.0;
  for (std::size_t k = 2; k <= 576; ++k) {
    const std::vector<double> u(k, 1.0 / static_cast<double>(k));
    worst_h = std::max(worst_h, std::abs(attention_entropy(u) - std::log(static_cast<double>(k))));
  }
  o.require(worst_h <= 1e-9, "uniform entropy error " + std::to_string(worst_h));
  for (std::size_t k : {1u, 7u, 576u}) {
    std::vector<double> one(k, 0.0);
    one[k / 2] = 1.0;
    o.require(attention_entropy(one) == 0.0, "one-hot entropy nonzero");
  }
  double worst_skew = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t half = 1 + rng() % 288;
    auto v = random_row(half, 0.01, 1.0);
    std::vector<double> sym(v);
    if (trial % 2) sym.push_back(std::uniform_real_distribution<double>(0.01, 1.0)(rng));
    sym.insert(sym.end(), v.rbegin(), v.rend());
    worst_skew = std::max(worst_skew, std::abs(attention_skewness(sym)));
  }
  o.require(worst_skew <= 1e-12, "symmetric skewness " + std::to_string(worst_skew));

  double worst_mass = 0.0;
  for (std::uint32_t side : {4u, 8u, 24u}) {
    std::vector<int> hits(side * side, 0);
    for (std::size_t k = 0; k < side * side; ++k) {
      const auto [r, c] = patch_cell(k, side);
      if (r < side && c < side) ++hits[r * side + c];
    }
    o.require(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }),
              "patch mapping not a bijection for P=" + std::to_string(side));
    ModelConfig cfg;
    cfg.layers = 2;
    cfg.heads = 4;
    cfg.model_dim = 8;
    cfg.head_dim = 2;
    cfg.patch_side = side;
    const std::size_t n = side * side + 9;
    AttentionTrace t(cfg, n, {4, side * side}, n - 1);
    for (std::size_t l = 0; l < 2; ++l)
      for (std::size_t h = 0; h < 4; ++h) {
        const auto row = random_row(n, -3.0, 3.0);
        std::copy(row.begin(), row.end(), t.logits_row(l, h, n - 1).begin());
      }
    const auto share = image_attention_share(t, n - 1);
    for (std::size_t l = 0; l < 2; ++l) {
      const auto map = map_to_patch_grid(t, n - 1, l, std::nullopt);
      const double total = std::accumulate(map.values.begin(), map.values.end(), 0.0);
      worst_mass = std::max(worst_mass, std::abs(total - share[l]));
    }
  }
  o.require(worst_mass <= 1e-12, "patch mass drift " + std::to_string(worst_mass));
  if (o.pass)
    o.detail << std::scientific << std::setprecision(2) << "ln k error " << worst_h << ", symmetric skew "
             << worst_skew << ", patch mass drift " << worst_mass;
}

void overlap_metric(Outcome& o) {
  BBoxMask mask{2, {true, true, false, false}};
  PatchAttentionMap map{2, {0.5, 0.5, 0.0, 0.0}};
  const double one = bbox_overlap_cosine(map, mask);
  map.values = {0.0, 0.0, 0.7, 0.3};
  const double zero = bbox_overlap_cosine(map, mask);
  map.values = {0.6, 0.2, 0.2, 0.0};
  const double hand = bbox_overlap_cosine(map, mask);
  o.require(std::abs(one - 1.0) <= 1e-4, "parallel case " + std::to_string(one));
  o.require(std::abs(zero) <= 1e-4, "orthogonal case " + std::to_string(zero));
  o.require(std::abs(hand - 0.8528) <= 1e-4, "hand case " + std::to_string(hand));
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::uint32_t side = 2 + rng() % 23;
    PatchAttentionMap m{side, random_row(side * side, 0.0, 1.0)};
    BBoxMask box{side, std::vector<bool>(side * side, false)};
    for (int i = 0; i < 3; ++i) box.bits[rng() % box.bits.size()] = true;
    const double base = bbox_overlap_cosine(m, box);
    const double k = std::exp(std::uniform_real_distribution<double>(-7.0, 7.0)(rng));
    for (double& v : m.values) v *= k;
    worst = std::max(worst, std::abs(bbox_overlap_cosine(m, box) - base));
  }
  o.require(worst <= 1e-12, "scale drift " + std::to_string(worst));
  if (o.pass)
    o.detail << std::fixed << std::setprecision(4) << "1 -> " << one << ", 0 -> " << zero << ", hand -> " << hand
             << ", scale drift " << std::scientific << std::setprecision(2) << worst;
}

void causal_demo(Outcome& o, const fs::path& work) {
  std::ostringstream log;
  const auto t0 = Clock::now();
  cli::TuneConfig t;
  t.method = Method::adaptive;
  const auto out = cli::tune(demo_config(work / "demo"), t, log);
  const double s = seconds_since(t0);
  const double adaptive = out.tuned_test.accuracy;
  const double base = out.baseline_test.accuracy;
  const double single = out.best_single_accuracy;
  const auto& b = out.tuned.best;
  o.require(adaptive > base && adaptive > single, "adaptive does not beat both references");
  o.require(adaptive - std::max(base, single) >= 0.05 - 1e-12, "improvement under 5 points");
  o.require(std::abs(base - kPinnedBaseline) < 1e-12 && std::abs(adaptive - kPinnedAdaptive) < 1e-12 &&
                std::abs(single - kPinnedBestSingle) < 1e-12 && out.best_single_alpha == kPinnedBestSingleAlpha,
            "accuracies differ from the pinned seed-7 numbers");
  o.require(b.alpha1 == kPinnedAlpha1 && b.alpha2 == kPinnedAlpha2 && std::abs(b.beta - kPinnedBeta) < 1e-12,
            "tuned spec differs from the pinned seed-7 spec");
  o.require(s < 60.0, "took " + std::to_string(s) + " s");
  if (o.pass)
    o.detail << std::fixed << std::setprecision(4) << "seed " << kDemoSeed << ": baseline " << base
             << ", best scaling (alpha " << std::setprecision(1) << out.best_single_alpha << ") "
             << std::setprecision(4) << single << ", adapt_vis (" << std::setprecision(2) << b.alpha1 << ", "
             << b.alpha2 << ", " << b.beta << ") " << std::setprecision(4) << adaptive << ", "
             << std::setprecision(2) << s << " s";
}

void gate_correctness(Outcome& o) {
  auto spec = [](double a1, double a2, double beta) {
    InterventionSpec s;
    s.method = Method::adaptive;
    s.alpha1 = a1;
    s.alpha2 = a2;
    s.beta = beta;
    return s;
  };
  struct Case {
    double c, a1, a2, beta, want;
  };
  const std::vector<Case> cases{
      {0.10, 0.5, 2.0, 0.3, 0.5}, {0.29, 0.5, 2.0, 0.3, 0.5}, {0.30, 0.5, 2.0, 0.3, 2.0},
      {0.31, 0.5, 2.0, 0.3, 2.0}, {0.90, 0.8, 1.5, 0.45, 1.5}, {0.44, 0.8, 1.5, 0.45, 0.8},
      {0.45, 0.8, 1.5, 0.45, 1.5}, {0.0, 0.5, 1.2, 0.0, 1.2},  {1.0, 0.5, 1.2, 1.0, 1.2},
      {0.99, 0.5, 1.2, 1.0, 0.5}};
  for (const auto& c : cases) {
    const double got = gate_alpha(c.c, spec(c.a1, c.a2, c.beta));
    o.require(got == c.want, "C=" + std::to_string(c.c) + " beta=" + std::to_string(c.beta) + " chose " +
                                 std::to_string(got));
  }
  // confidence measured by the decoder, then routed
  for (double beta : {0.2, 0.25, 0.3}) {
    std::vector<double> logits(44, -1e4);
    for (int tkn = 4; tkn < 8; ++tkn) logits[tkn] = 1.0;  // C = 0.25
    fixture::ForcedModel m(logits);
    const auto r = adaptvis_decode(m, fixture::two_token_prompt(), spec(0.5, 2.0, beta), DecodeOptions{});
    const double want = 0.25 < beta ? 0.5 : 2.0;
    o.require(r.chosen_alpha == want && m.seen == want, "decoded gate at beta " + std::to_string(beta));
  }
  if (o.pass) o.detail << cases.size() << " fixtures + 3 decoded, C = beta routes to alpha2";
}

void metrics_fixtures(Outcome& o) {
  auto item = [](std::string id, std::string gold, std::optional<std::string> pair, std::optional<std::string> set) {
    EvalItem it;
    it.item_id = std::move(id);
    it.options = {"left", "right", "on", "under"};
    it.gold = static_cast<std::size_t>(std::find(it.options.begin(), it.options.end(), gold) - it.options.begin());
    it.pair_id = std::move(pair);
    it.set_id = std::move(set);
    return it;
  };
  const std::vector<EvalItem> set{item("a", "left", "p", "s"), item("b", "right", "p", "s"),
                                  item("c", "on", std::nullopt, "s"), item("d", "under", std::nullopt, "s")};
  const EvalReport r = score(set, {{"a", "left", 1}, {"b", "right", 1}, {"c", "on", 1}, {"d", "on", 1}});
  o.require(r.set_accuracy == 0.0 && r.pair_accuracy == 1.0 && r.accuracy == 0.75, "3-of-4 set fixture");
  const EvalReport broken = score(set, {{"a", "left", 1}, {"b", "left", 1}, {"c", "on", 1}, {"d", "under", 1}});
  o.require(broken.pair_accuracy == 0.0, "half-correct pair scored nonzero");

  std::vector<EvalItem> tf;
  for (int i = 0; i < 5; ++i) {
    EvalItem it;
    it.item_id = std::to_string(i);
    it.options = {"true", "false"};
    it.gold = i < 3 ? 0 : 1;
    tf.push_back(it);
  }
  const EvalReport f = score(tf, {{"0", "true", 1}, {"1", "true", 1}, {"2", "false", 1}, {"3", "true", 1},
                                  {"4", "false", 1}});
  o.require(f.f1 && std::abs(*f.f1 - 0.667) <= 1e-3, "F1 fixture");

  const std::map<Relation, std::size_t> row{{Relation::right, 137}, {Relation::left, 127}, {Relation::on, 3},
                                            {Relation::under, 0},   {Relation::behind, 5}, {Relation::front, 19}};
  std::vector<EvalItem> vg;
  for (const auto& [rel, count] : row)
    for (std::size_t i = 0; i < count; ++i) {
      EvalItem it;
      it.item_id = "vg" + std::to_string(vg.size());
      it.options = {"left", "right", "on", "under", "behind", "front"};
      it.gold = static_cast<std::size_t>(std::find(it.options.begin(), it.options.end(), std::string(to_string(rel))) -
                                         it.options.begin());
      vg.push_back(it);
    }
  const RelationCounts c = label_distribution(parse_whatsup_json(format_whatsup_json(vg)));
  for (const auto& [rel, count] : row)
    o.require(c[rel] == count, "VG_two count for " + std::string(to_string(rel)));
  if (o.pass)
    o.detail << "set 0 / pair 1 on 3-of-4, F1 " << std::fixed << std::setprecision(4) << *f.f1
             << ", VG_two row 137/127/3/0/5/19";
}

void efficiency(Outcome& o) {
  const auto cfg = demo_config({});
  const auto items = cli::load_items(cfg);
  const auto prepared = cli::prepare_items(cfg, items);
  DecodeOptions d;
  d.max_new = cfg.max_new;
  d.forward.capture = TraceCapture::none;
  InterventionSpec scaling;
  scaling.method = Method::scaling;
  scaling.alpha = 0.5;
  InterventionSpec adaptive;
  adaptive.method = Method::adaptive;
  adaptive.alpha1 = kPinnedAlpha1;
  adaptive.alpha2 = kPinnedAlpha2;
  adaptive.beta = kPinnedBeta;
  const std::vector<InterventionSpec> specs{InterventionSpec{}, scaling, adaptive};
  std::vector<double> best(3, INFINITY);
  for (int warm = 0; warm < 2; ++warm)
    for (const auto& s : specs) cli::evaluate(prepared, s, d);
  for (int rep = 0; rep < 15; ++rep)
    for (std::size_t k = 0; k < specs.size(); ++k)
      best[k] = std::min(best[k], cli::evaluate(prepared, specs[k], d).seconds);
  const double rs = best[1] / best[0], ra = best[2] / best[0];
  o.require(rs <= 1.10, "scaling_vis ratio " + std::to_string(rs));
  o.require(ra <= 2.20, "adapt_vis ratio " + std::to_string(ra));
  if (o.pass)
    o.detail << std::fixed << std::setprecision(3) << items.size() << " items: scaling_vis " << rs
             << "x, adapt_vis " << ra << "x baseline (min of 15 interleaved)";
}

void determinism(Outcome& o, const fs::path& work) {
  std::size_t files = 0;
  auto twice = [&](cli::RunConfig cfg, const std::string& tag) {
    std::ostringstream log;
    cfg.emit_heatmaps = true;
    cfg.timing_reps = 1;
    std::vector<fs::path> dirs{work / (tag + "-1"), work / (tag + "-2")};
    for (const auto& dir : dirs) {
      fs::remove_all(dir);
      cfg.output_dir = dir;
      cli::run(cfg, log);
    }
    std::vector<fs::path> rel{"report.csv"};
    for (const auto& e : fs::directory_iterator(dirs[0] / "heatmaps")) rel.push_back("heatmaps" / e.path().filename());
    o.require(rel.size() > 1, tag + ": no heatmaps written");
    for (const auto& r : rel) {
      o.require(fs::exists(dirs[1] / r) && slurp(dirs[0] / r) == slurp(dirs[1] / r), tag + ": " + r.string() + " differs");
      ++files;
    }
  };
  cli::RunConfig scripted;
  scripted.n_pairs = 10;
  scripted.method = "adapt_vis";
  scripted.weight1 = 0.5;
  scripted.weight2 = 2.0;
  scripted.threshold = 0.45;
  twice(scripted, "scripted");
  cli::RunConfig seeded;
  seeded.model_name = "seeded";
  seeded.n_pairs = 5;
  seeded.patch_side = 8;
  seeded.method = "scaling_vis";
  seeded.weight1 = 1.5;
  twice(seeded, "seeded");
  if (o.pass) o.detail << files << " files byte-identical across reruns";
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path work = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "visattn-acceptance";
  fs::create_directories(work);

  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria{
      {"identity-suite", identity_suite},
      {"temperature-algebra", temperature_algebra},
      {"additive-invariant", additive_invariant},
      {"auroc-oracle", auroc_equivalence},
      {"analysis-formulas", analysis_formulas},
      {"overlap-metric", overlap_metric},
      {"referee-causal-demo", [&](Outcome& o) { causal_demo(o, work); }},
      {"gate-correctness", gate_correctness},
      {"metrics-fixtures", metrics_fixtures},
      {"efficiency", efficiency},
      {"determinism", [&](Outcome& o) { determinism(o, work); }},
  };

  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      fn(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail.str("");
      o.detail << "threw: " << e.what();
    }
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail.str() << std::endl;
    failed += o.pass ? 0 : 1;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
