// Copyright 2026 The boxsal Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Acceptance gate. Prints one PASS/FAIL line per criterion and exits nonzero
// if any criterion fails.

#include <spdlog/spdlog.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "boxsal/config.hpp"
#include "boxsal/gmm.hpp"
#include "boxsal/grabcut.hpp"
#include "boxsal/losses.hpp"
#include "boxsal/maxflow.hpp"
#include "boxsal/metrics.hpp"
#include "boxsal/synthetic.hpp"
#include "boxsal/trainer.hpp"
#include "cli.hpp"
#include "oracles.hpp"

using namespace boxsal;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

std::vector<double> to_vec(const ImageGrid& g) {
  return {g.values().begin(), g.values().end()};
}

ImageGrid from_vec(int h, int w, const std::vector<double>& v) {
  return ImageGrid(h, w, 1, v);
}

fs::path source_dir() { return fs::path(BOXSAL_SOURCE_DIR); }

// ------------------------------------------------------------------------ 1

Outcome gradient_correctness() {
  Stopwatch clock;
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  std::uniform_int_distribution<int> corner(0, 4);
  const int h = 5;
  const int w = 5;
  const LossWeights weights;
  double worst = 0.0;
  const char* worst_name = "";

  auto check = [&](const char* name, const std::vector<double>& analytic,
                   const std::function<double(const std::vector<double>&)>& f,
                   const std::vector<double>& x) {
    const double err =
        oracle::relative_error(analytic, oracle::numeric_gradient(f, x, 1e-5));
    if (err > worst) {
      worst = err;
      worst_name = name;
    }
  };

  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> pred(h * w);
    std::vector<double> target(h * w);
    for (auto& v : pred) v = u(rng);
    for (auto& v : target) v = u(rng);
    int x0 = corner(rng), x1 = corner(rng), y0 = corner(rng), y1 = corner(rng);
    if (x0 > x1) std::swap(x0, x1);
    if (y0 > y1) std::swap(y0, y1);
    const BoxAnnotation ann("r", {{x0, y0, x1 + 1, std::min(y1 + 1, 4)}});
    const ImageGrid box = rasterize_boxes(ann, h, w);
    ImageGrid pseudo = oracle::random_binary(rng, h, w);
    enforce_background(pseudo, ann);
    const ImageGrid image = oracle::random_grid(rng, h, w, 3);
    const ImageGrid p = from_vec(h, w, pred);
    const ImageGrid t = from_vec(h, w, target);

    check("cross_entropy", cross_entropy(p, t).grad_s,
          [&](const std::vector<double>& x) {
            return cross_entropy(from_vec(h, w, x), t).value;
          },
          pred);
    check("symmetric_ce", symmetric_ce(p, pseudo, weights).grad_s,
          [&](const std::vector<double>& x) {
            return symmetric_ce(from_vec(h, w, x), pseudo, weights).value;
          },
          pred);
    check("smoothness_loss", smoothness_loss(p, box, image, weights).grad_s,
          [&](const std::vector<double>& x) {
            return smoothness_loss(from_vec(h, w, x), box, image, weights).value;
          },
          pred);
    check("background_loss", background_loss(p, box, weights).grad_s,
          [&](const std::vector<double>& x) {
            return background_loss(from_vec(h, w, x), box, weights).value;
          },
          pred);
    check("total_loss", total_loss(p, pseudo, box, image, weights).total.grad_s,
          [&](const std::vector<double>& x) {
            return total_loss(from_vec(h, w, x), pseudo, box, image, weights)
                .total.value;
          },
          pred);
  }
  const double t = clock.seconds();
  return {worst <= 1e-4 && t < 10.0,
          "worst rel err " + fmt("%.2e", worst) + " (" + worst_name + "), " +
              fmt("%.2f s", t)};
}

// ------------------------------------------------------------------------ 2

Outcome closed_form_anchors() {
  const LossWeights w;
  const ImageGrid half(2, 2, 1, 0.5);
  const double sce = symmetric_ce(half, half, w).value;
  const ImageGrid box = rasterize_boxes(BoxAnnotation("b", {{0, 0, 1, 1}}), 2, 2);
  const double back = background_loss(half, box, w).value;
  const ImageGrid flat(2, 2, 1, 0.3);
  const ImageGrid image(2, 2, 3, 0.4);
  const double smooth = smoothness_loss(flat, box, image, w).value;
  const double e1 = std::abs(sce - 2 * std::numbers::ln2);
  const double e2 = std::abs(back - std::numbers::ln2);
  const double e3 = std::abs(smooth - 0.004);
  return {e1 <= 1e-9 && e2 <= 1e-9 && e3 <= 1e-12,
          "|sce-2ln2| " + fmt("%.1e", e1) + ", |back-ln2| " + fmt("%.1e", e2) +
              ", |smooth-0.004| " + fmt("%.1e", e3)};
}

// ------------------------------------------------------------------------ 3

Outcome max_flow_oracle() {
  Stopwatch clock;
  std::mt19937_64 rng(303);
  std::uniform_int_distribution<int> size(1, 12);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto g = oracle::random_graph(rng, size(rng));
    FlowNetwork net(g.n);
    for (int i = 0; i < g.n; ++i) {
      net.add_terminal_arcs(i, g.source_cap[i], g.sink_cap[i]);
    }
    for (const auto& [a, b, ab, ba] : g.edges) net.add_edge(a, b, ab, ba);
    const double got = max_flow(net).flow_value;
    worst = std::max(worst, std::abs(got - oracle::brute_force_min_cut(g)));
  }
  const double t = clock.seconds();
  return {worst <= 1e-9 && t < 30.0,
          "max |flow - min cut| " + fmt("%.1e", worst) + " over 1000 graphs, " +
              fmt("%.2f s", t)};
}

// ------------------------------------------------------------------------ 4

Outcome em_monotonicity() {
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> clusters(1, 6);
  std::uniform_int_distribution<int> count(20, 400);
  double worst = 0.0;
  int fits = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const int c = clusters(rng);
    std::vector<Color> centers;
    for (int j = 0; j < c; ++j) centers.emplace_back(u(rng), u(rng), u(rng));
    std::normal_distribution<double> noise(0.0, 0.02 + 0.1 * u(rng));
    std::vector<Color> pixels(static_cast<std::size_t>(count(rng)));
    for (std::size_t i = 0; i < pixels.size(); ++i) {
      const Color& m = centers[i % centers.size()];
      for (int ch = 0; ch < 3; ++ch) {
        pixels[i][ch] = std::clamp(m[ch] + noise(rng), 0.0, 1.0);
      }
    }
    GmmFitOptions opt;
    opt.k = 1 + trial % 5;
    opt.seed = static_cast<std::uint64_t>(trial);
    opt.max_iters = 50;
    opt.tol = 0.0;
    try {
      const auto fit = fit_gmm(pixels, opt);
      for (std::size_t i = 1; i < fit.log_likelihood.size(); ++i) {
        worst = std::min(worst, fit.log_likelihood[i] - fit.log_likelihood[i - 1]);
      }
      ++fits;
    } catch (const std::logic_error&) {
      return {false, "EM check fired on fit " + std::to_string(trial)};
    }
  }
  return {fits == 50 && worst >= -1e-8,
          "most negative step " + fmt("%.1e", worst) + " across " +
              std::to_string(fits) + " fits"};
}

// ------------------------------------------------------------------------ 5

Outcome grabcut_recovery() {
  double worst_iou = 1.0;
  int clean = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SyntheticSceneSpec s;
    s.height = 16;
    s.width = 16;
    s.shape = ShapeKind::Rectangle;
    s.placements = {{4, 4, 12, 12}};
    s.fg_color = {1.0, 0.0, 0.0};
    s.bg_color = {0.0, 0.0, 1.0};
    s.color_jitter = 0.0;
    s.noise_sigma = 0.02;
    s.seed = seed;
    auto rec = generate_synthetic(s);
    rec.annotation =
        BoxAnnotation("square", {rec.annotation.boxes()[0].dilated(2, 16, 16)});
    const auto r = generate_pseudo_label(rec, GrabCutConfig{});
    const auto& m = r.label.mask;
    double inter = 0, uni = 0;
    bool outside_ok = true;
    const auto box = rasterize_boxes(rec.annotation, 16, 16);
    for (std::size_t i = 0; i < m.size(); ++i) {
      const bool a = m.values()[i] > 0.5;
      const bool b = rec.gt->values()[i] > 0.5;
      inter += a && b;
      uni += a || b;
      if (box.values()[i] == 0.0 && a) outside_ok = false;
    }
    worst_iou = std::min(worst_iou, inter / uni);
    clean += outside_ok;
  }
  return {worst_iou >= 0.95 && clean == 20,
          "min IoU " + fmt("%.4f", worst_iou) + ", outside box clean in " +
              std::to_string(clean) + "/20"};
}

// ------------------------------------------------------------------------ 6

Outcome metric_oracles() {
  std::mt19937_64 rng(606);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const ImageGrid pred = oracle::random_grid(rng, 8, 8, 1);
    const ImageGrid gt = oracle::random_binary(rng, 8, 8, 0.1 + 0.8 * u(rng));
    const auto p = to_vec(pred);
    const auto g = to_vec(gt);
    worst = std::max(worst, std::abs(mae(pred, gt) - oracle::mae(p, g)));
    worst = std::max(worst, std::abs(s_measure(pred, gt) - oracle::s_measure(p, g, 8, 8)));
    worst = std::max(worst, std::abs(f_measure_mean(pred, gt) - oracle::f_mean(p, g)));
    worst = std::max(worst, std::abs(e_measure_mean(pred, gt) - oracle::e_mean(p, g)));
  }
  double min_s = 1.0, min_f = 1.0, min_e = 1.0, max_mae = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const ImageGrid gt = oracle::random_binary(rng, 8, 8, 0.2 + 0.6 * u(rng));
    const auto m = evaluate_image(gt, gt);
    max_mae = std::max(max_mae, m.mae);
    min_s = std::min(min_s, m.s_alpha);
    if (!m.degenerate) {
      min_f = std::min(min_f, m.f_beta);
      min_e = std::min(min_e, m.e_xi);
    }
  }
  const bool perfect = max_mae == 0.0 && min_s >= 0.999 && min_f >= 0.99 &&
                       min_e >= 0.99;
  return {worst <= 1e-10 && perfect,
          "max oracle diff " + fmt("%.1e", worst) + "; perfect: mae " +
              fmt("%.3f", max_mae) + " S " + fmt("%.4f", min_s) + " F " +
              fmt("%.4f", min_f) + " E " + fmt("%.4f", min_e)};
}

// ------------------------------------------------------------------------ 7

Outcome end_to_end_descent() {
  Stopwatch clock;
  TrainConfig config = load_train_config(source_dir() / "configs" / "desk.json");
  config.epochs = 15;
  config.seed = 17;
  std::vector<DatasetRecord> records;
  for (int i = 0; i < 8; ++i) {
    SyntheticSceneSpec s;
    s.seed = 17 + static_cast<std::uint64_t>(i);
    auto rec = generate_synthetic(s);
    generate_pseudo_label(rec, GrabCutConfig{});
    records.push_back(std::move(rec));
  }
  const auto data = make_training_set(records);
  const auto result = train(data, config);
  const double first = result.log.front().loss_total;
  const double last = result.log.back().loss_total;
  double outside = 0.0;
  double n = 0.0;
  for (const auto& ex : data) {
    const auto s = forward(result.state.predictor, ex.image).saliency;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (ex.box_mask.values()[i] == 0.0) {
        outside += s.values()[i];
        n += 1.0;
      }
    }
  }
  outside /= n;
  const double reduction = 1.0 - last / first;
  const double t = clock.seconds();
  return {reduction >= 0.5 && outside < 0.05 && t < 300.0,
          "loss " + fmt("%.3f", first) + " -> " + fmt("%.3f", last) + " (" +
              fmt("%.1f%%", 100 * reduction) + " lower), outside-box mean " +
              fmt("%.4f", outside) + ", " + fmt("%.1f s", t)};
}

// ------------------------------------------------------------------------ 8

Outcome ablation_direction() {
  Stopwatch clock;
  const TrainConfig desk = load_train_config(source_dir() / "configs" / "desk.json");
  std::vector<DatasetRecord> box_set;
  std::vector<DatasetRecord> grabcut_set;
  for (int i = 0; i < 32; ++i) {
    SyntheticSceneSpec s;
    s.shape = ShapeKind::Blob;
    s.min_size = 12;
    s.max_size = 20;
    s.seed = 1000 + static_cast<std::uint64_t>(i);
    auto rec = generate_synthetic(s);
    auto boxed = rec;
    boxed.pseudo_label = PseudoLabel{
        rasterize_boxes(rec.annotation, s.height, s.width), LabelSource::RawBox};
    box_set.push_back(std::move(boxed));
    generate_pseudo_label(rec, GrabCutConfig{});
    grabcut_set.push_back(std::move(rec));
  }

  auto run_arm = [&](const std::vector<DatasetRecord>& set, bool aux) {
    TrainConfig c = desk;
    if (!aux) {
      c.loss_weights.lambda1 = 0.0;
      c.loss_weights.lambda2 = 0.0;
    }
    const auto result = train(make_training_set(set), c);
    std::vector<ImageGrid> preds;
    std::vector<ImageGrid> gts;
    for (const auto& r : set) {
      preds.push_back(forward(result.state.predictor, r.image).saliency);
      gts.push_back(*r.gt);
    }
    return evaluate_dataset(preds, gts);
  };
  const auto bnd = run_arm(box_set, false);
  const auto gcut = run_arm(grabcut_set, false);
  const auto ours = run_arm(grabcut_set, true);
  const double t = clock.seconds();

  const bool mae_order = bnd.mae > gcut.mae && gcut.mae >= ours.mae;
  const bool s_order = ours.s_alpha >= gcut.s_alpha && gcut.s_alpha > bnd.s_alpha;
  const bool gap = bnd.mae - gcut.mae >= 0.01;
  return {mae_order && s_order && gap && t < 1200.0,
          "MAE BndBox " + fmt("%.4f", bnd.mae) + " / GCut " +
              fmt("%.4f", gcut.mae) + " / Ours " + fmt("%.4f", ours.mae) +
              "; S " + fmt("%.4f", bnd.s_alpha) + " / " +
              fmt("%.4f", gcut.s_alpha) + " / " + fmt("%.4f", ours.s_alpha) +
              ", " + fmt("%.1f s", t)};
}

// ------------------------------------------------------------------------ 9

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

// Empty string when the two trees hold the same files with identical bytes.
std::string tree_difference(const fs::path& a, const fs::path& b) {
  std::vector<fs::path> fa;
  std::vector<fs::path> fb;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (e.is_regular_file()) fa.push_back(fs::relative(e.path(), a));
  }
  for (const auto& e : fs::recursive_directory_iterator(b)) {
    if (e.is_regular_file()) fb.push_back(fs::relative(e.path(), b));
  }
  std::sort(fa.begin(), fa.end());
  std::sort(fb.begin(), fb.end());
  if (fa != fb) return "file lists differ under " + a.filename().string();
  if (fa.empty()) return "no files under " + a.filename().string();
  for (const auto& rel : fa) {
    if (slurp(a / rel) != slurp(b / rel)) return rel.string() + " differs";
  }
  return "";
}

Outcome cli_determinism() {
  const fs::path root = fs::temp_directory_path() / "boxsal_acceptance_cli";
  fs::remove_all(root);
  fs::create_directories(root);
  std::ostringstream out;
  std::ostringstream err;
  auto run = [&](std::vector<std::string> args) {
    return cli::run(args, out, err);
  };
  const std::string corpus = (root / "corpus").string();
  const std::string desk = (source_dir() / "configs" / "desk.json").string();
  int failures = run({"synth", "--out", corpus, "--count", "6", "--seed", "5"});
  std::vector<std::string> files;
  std::size_t checked = 0;
  std::string diff;
  for (const char* tag : {"a", "b"}) {
    const std::string r = (root / tag).string();
    failures += run({"pseudo-label", "--images", corpus + "/images", "--annotations",
                     corpus + "/annotations.json", "--out", r + "/labels",
                     "--jobs", "2"});
    failures += run({"train", "--config", desk, "--data", corpus, "--labels",
                     r + "/labels", "--out", r + "/model", "--epochs", "4"});
    failures += run({"predict", "--checkpoint", r + "/model/final.ckpt",
                     "--images", corpus + "/images", "--out", r + "/pred",
                     "--jobs", "2"});
  }
  for (const char* sub : {"labels", "model", "pred"}) {
    const auto d = tree_difference(root / "a" / sub, root / "b" / sub);
    if (!d.empty() && diff.empty()) diff = d;
    for (const auto& e : fs::recursive_directory_iterator(root / "a" / sub)) {
      checked += e.is_regular_file();
    }
  }
  fs::remove_all(root);
  return {failures == 0 && diff.empty(),
          failures != 0 ? "a command failed: " + err.str()
          : diff.empty() ? std::to_string(checked) + " output files identical across reruns"
                         : diff};
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::off);
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"gradient correctness", gradient_correctness},
      {"closed-form loss anchors", closed_form_anchors},
      {"max-flow oracle", max_flow_oracle},
      {"EM monotonicity", em_monotonicity},
      {"GrabCut recovery", grabcut_recovery},
      {"metric oracles", metric_oracles},
      {"end-to-end descent", end_to_end_descent},
      {"ablation direction", ablation_direction},
      {"CLI determinism", cli_determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s  [%zu] %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1,
                criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n",
              static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
