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

#include "cli.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "boxsal/config.hpp"
#include "boxsal/grabcut.hpp"
#include "boxsal/io.hpp"
#include "boxsal/metrics.hpp"
#include "boxsal/predictor.hpp"
#include "boxsal/synthetic.hpp"
#include "boxsal/trainer.hpp"
#include "json.hpp"

namespace boxsal::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Input problems detected before any work starts; mapped to kExitUsage.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string join(const std::vector<std::string>& items) {
  std::string s;
  for (const auto& it : items) {
    if (!s.empty()) s += ", ";
    s += it;
  }
  return s;
}

int thread_count(int jobs) {
  return jobs > 0 ? jobs : omp_get_max_threads();
}

void require_dir(const fs::path& p, const char* flag) {
  if (!fs::is_directory(p)) {
    throw UsageError(std::string(flag) + ": not a directory: " + p.string());
  }
}

void require_file(const fs::path& p, const char* flag) {
  if (!fs::is_regular_file(p)) {
    throw UsageError(std::string(flag) + ": no such file: " + p.string());
  }
}

// Annotation records keyed by the filename part of their image reference.
std::map<std::string, BoxAnnotation> index_annotations(
    const std::vector<BoxAnnotation>& records) {
  std::map<std::string, BoxAnnotation> by_name;
  for (const auto& a : records) {
    const std::string name = fs::path(a.image_ref()).filename().string();
    if (!by_name.emplace(name, a).second) {
      throw ValidationError("annotations: duplicate record for '" + name + "'");
    }
  }
  return by_name;
}

ImageGrid as_single_channel(const ImageGrid& g) {
  return g.channels() == 1 ? g : g.intensity();
}

ImageGrid binarized(const ImageGrid& g) {
  const ImageGrid one = as_single_channel(g);
  std::vector<double> v(one.values().begin(), one.values().end());
  for (double& x : v) x = x > 0.5 ? 1.0 : 0.0;
  return ImageGrid(one.height(), one.width(), 1, std::move(v));
}

// ------------------------------------------------------------ pseudo-label

struct PseudoLabelOptions {
  std::string images;
  std::string annotations;
  std::string out;
  std::string mode = "grabcut";
  int iters = 5;
  int k = 5;
  std::uint64_t seed = 17;
  int jobs = 0;
};

struct PseudoLabelOutcome {
  std::string error;
  long long fg_pixels = 0;
  int iterations_used = 0;
};

int cmd_pseudo_label(const PseudoLabelOptions& o, std::ostream& out,
                     std::ostream& err) {
  require_dir(o.images, "--images");
  require_file(o.annotations, "--annotations");
  const auto by_name = index_annotations(load_annotations(o.annotations));
  const auto images = list_images(o.images);

  GrabCutConfig gc;
  gc.iters = o.iters;
  gc.k = o.k;
  gc.seed = o.seed;
  if (gc.iters < 1 || gc.k < 1) throw UsageError("--iters and --k must be >= 1");

  fs::create_directories(o.out);
  const bool box_mode = o.mode == "box";
  std::vector<PseudoLabelOutcome> results(images.size());

#pragma omp parallel for schedule(dynamic) num_threads(thread_count(o.jobs))
  for (std::size_t i = 0; i < images.size(); ++i) {
    auto& r = results[i];
    try {
      const auto it = by_name.find(images[i].filename().string());
      if (it == by_name.end()) throw ValidationError("no annotation record");
      DatasetRecord rec;
      rec.image = load_image(images[i]);
      rec.annotation = it->second;
      rec.validate();
      ImageGrid mask;
      if (box_mode) {
        mask = rasterize_boxes(rec.annotation, rec.image.height(),
                               rec.image.width());
      } else {
        const auto res = generate_pseudo_label(rec, gc);
        mask = res.label.mask;
        r.iterations_used = res.iterations_used;
      }
      for (double v : mask.values()) r.fg_pixels += v > 0.5 ? 1 : 0;
      save_image(mask, fs::path(o.out) / (images[i].stem().string() + ".pgm"));
    } catch (const std::exception& e) {
      r.error = e.what();
    }
  }

  std::size_t failed = 0;
  for (std::size_t i = 0; i < images.size(); ++i) {
    const auto& r = results[i];
    if (!r.error.empty()) {
      ++failed;
      err << "error: " << images[i].string() << ": " << r.error << '\n';
      continue;
    }
    out << json{{"path", images[i].string()},
                {"fg_pixels", r.fg_pixels},
                {"iterations_used", r.iterations_used}}
               .dump()
        << '\n';
  }
  if (failed > 0) {
    err << "pseudo-label: " << failed << " of " << images.size()
        << " images failed\n";
    return kExitFailure;
  }
  return kExitOk;
}

// ------------------------------------------------------------------- train

struct TrainOptions {
  std::string config;
  std::string data;
  std::string labels;
  std::string out;
  std::string fore = "on";
  std::string back = "on";
  std::optional<int> epochs;
  std::optional<std::uint64_t> seed;
};

std::vector<DatasetRecord> load_training_records(const TrainOptions& o) {
  const fs::path data(o.data);
  require_dir(data / "images", "--data");
  require_file(data / "annotations.json", "--data");
  require_dir(o.labels, "--labels");
  const auto by_name = index_annotations(load_annotations(data / "annotations.json"));
  const auto images = list_images(data / "images");
  if (images.empty()) {
    throw ConfigError("train: no images in " + (data / "images").string());
  }

  std::vector<std::string> no_annotation;
  std::vector<std::string> no_label;
  for (const auto& img : images) {
    const auto name = img.filename().string();
    if (!by_name.count(name)) no_annotation.push_back(name);
    if (!fs::is_regular_file(fs::path(o.labels) / (img.stem().string() + ".pgm"))) {
      no_label.push_back(name);
    }
  }
  if (!no_annotation.empty()) {
    throw ConfigError("train: images without annotation records: " +
                      join(no_annotation));
  }
  if (!no_label.empty()) {
    throw ConfigError("train: missing pseudo-labels for: " + join(no_label));
  }

  std::vector<DatasetRecord> records;
  for (const auto& img : images) {
    DatasetRecord rec;
    rec.image = load_image(img);
    rec.annotation = by_name.at(img.filename().string());
    const auto label =
        load_image(fs::path(o.labels) / (img.stem().string() + ".pgm"));
    rec.pseudo_label = PseudoLabel{binarized(label), LabelSource::GrabCut};
    try {
      rec.validate();
    } catch (const std::exception& e) {
      throw ValidationError(img.filename().string() + ": " + e.what());
    }
    records.push_back(std::move(rec));
  }
  return records;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream os(p, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  os << text;
}

int cmd_train(const TrainOptions& o, std::ostream& out, std::ostream&) {
  require_file(o.config, "--config");
  TrainConfig config = load_train_config(o.config);
  if (o.epochs) config.epochs = *o.epochs;
  if (o.seed) {
    config.seed = *o.seed;
    config.predictor.seed = *o.seed;
  }
  if (o.fore == "off") config.loss_weights.lambda1 = 0.0;
  if (o.back == "off") config.loss_weights.lambda2 = 0.0;
  config.validate();

  const auto records = load_training_records(o);
  const auto data = make_training_set(records);

  const fs::path dir(o.out);
  fs::create_directories(dir);
  write_text(dir / "config.json", train_config_to_json(config) + "\n");
  std::ofstream log(dir / "loss_log.jsonl", std::ios::trunc);
  if (!log) throw std::runtime_error("cannot write " + (dir / "loss_log.jsonl").string());

  TrainHooks hooks;
  hooks.on_epoch = [&](const EpochLog& e) {
    log << json{{"epoch", e.epoch},
                {"lr", e.lr},
                {"loss_total", e.loss_total},
                {"loss_spn", e.loss_spn},
                {"loss_fore", e.loss_fore},
                {"loss_back", e.loss_back}}
               .dump()
        << '\n';
    out << "epoch " << e.epoch << "/" << config.epochs << "  lr " << e.lr
        << "  loss " << e.loss_total << "  (spn " << e.loss_spn << ", fore "
        << e.loss_fore << ", back " << e.loss_back << ")\n";
  };
  hooks.on_checkpoint = [&](const TrainerState& s, int epoch) {
    char name[64];
    std::snprintf(name, sizeof(name), "epoch_%04d.ckpt", epoch);
    save_checkpoint({s.predictor, s.momentum, epoch}, dir / name);
  };

  const auto result = train(data, config, hooks);
  save_checkpoint({result.state.predictor, result.state.momentum, config.epochs},
                  dir / "final.ckpt");
  out << "wrote " << (dir / "final.ckpt").string() << '\n';
  return kExitOk;
}

// ----------------------------------------------------------------- predict

struct PredictOptions {
  std::string checkpoint;
  std::string images;
  std::string out;
  int jobs = 0;
};

int cmd_predict(const PredictOptions& o, std::ostream& out, std::ostream& err) {
  require_file(o.checkpoint, "--checkpoint");
  require_dir(o.images, "--images");
  const Checkpoint ck = load_checkpoint(o.checkpoint);
  const auto images = list_images(o.images);
  fs::create_directories(o.out);
  if (images.empty()) {
    err << "warning: no images in " << o.images << '\n';
    return kExitOk;
  }

  std::vector<std::string> errors(images.size());
  std::vector<double> seconds(images.size(), 0.0);
#pragma omp parallel for schedule(dynamic) num_threads(thread_count(o.jobs))
  for (std::size_t i = 0; i < images.size(); ++i) {
    try {
      const ImageGrid img = load_image(images[i]);
      const auto t0 = std::chrono::steady_clock::now();
      const ImageGrid sal = forward(ck.state, img).saliency;
      seconds[i] = std::chrono::duration<double>(
                       std::chrono::steady_clock::now() - t0)
                       .count();
      save_image(quantize8(sal),
                 fs::path(o.out) / (images[i].stem().string() + ".pgm"));
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }

  std::size_t failed = 0;
  double total = 0.0;
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (!errors[i].empty()) {
      ++failed;
      err << "error: " << images[i].string() << ": " << errors[i] << '\n';
    } else {
      total += seconds[i];
    }
  }
  const std::size_t ok = images.size() - failed;
  if (ok > 0) {
    out << "predicted " << ok << " images, mean " << std::fixed
        << std::setprecision(4) << total / static_cast<double>(ok)
        << " s/image\n";
  }
  if (failed > 0) {
    err << "predict: " << failed << " of " << images.size() << " images failed\n";
    return kExitFailure;
  }
  return kExitOk;
}

// -------------------------------------------------------------------- eval

struct EvalOptions {
  std::string pred;
  std::string gt;
  bool per_image = false;
  std::string format = "table";
};

std::map<std::string, fs::path> by_stem(const fs::path& dir) {
  std::map<std::string, fs::path> m;
  for (const auto& p : list_images(dir)) {
    if (!m.emplace(p.stem().string(), p).second) {
      throw UsageError("ambiguous name '" + p.stem().string() + "' in " +
                       dir.string());
    }
  }
  return m;
}

int cmd_eval(const EvalOptions& o, std::ostream& out, std::ostream& err) {
  require_dir(o.pred, "--pred");
  require_dir(o.gt, "--gt");
  const auto preds = by_stem(o.pred);
  const auto gts = by_stem(o.gt);

  std::vector<std::string> names;
  std::vector<std::string> unmatched;
  for (const auto& [stem, path] : preds) {
    if (gts.count(stem)) {
      names.push_back(stem);
    } else {
      unmatched.push_back(path.filename().string());
    }
  }
  for (const auto& [stem, path] : gts) {
    if (!preds.count(stem)) unmatched.push_back(path.filename().string());
  }
  if (!unmatched.empty()) {
    err << "unmatched files: " << join(unmatched) << '\n';
  }
  if (names.empty()) {
    err << "eval: no matching prediction/ground-truth pairs\n";
    return kExitFailure;
  }

  std::vector<ImageGrid> p;
  std::vector<ImageGrid> g;
  for (const auto& n : names) {
    p.push_back(as_single_channel(load_image(preds.at(n))));
    g.push_back(binarized(load_image(gts.at(n))));
    if (!p.back().same_extent(g.back())) {
      throw ValidationError(n + ": prediction and ground truth differ in size");
    }
  }
  const MetricReport r = evaluate_dataset(p, g);

  if (o.format == "json-lines") {
    if (o.per_image) {
      for (std::size_t i = 0; i < names.size(); ++i) {
        const auto& m = r.per_image[i];
        json line = {{"image", names[i]}, {"s_alpha", m.s_alpha},
                     {"mae", m.mae}, {"degenerate", m.degenerate}};
        line["f_beta"] = m.degenerate ? json(nullptr) : json(m.f_beta);
        line["e_xi"] = m.degenerate ? json(nullptr) : json(m.e_xi);
        out << line.dump() << '\n';
      }
    }
    out << json{{"images", names.size()}, {"s_alpha", r.s_alpha},
                {"f_beta", r.f_beta},     {"e_xi", r.e_xi},
                {"mae", r.mae}}
               .dump()
        << '\n';
  } else {
    std::size_t width = 4;
    if (o.per_image) {
      for (const auto& n : names) width = std::max(width, n.size());
    }
    auto row = [&](const std::string& label, double s, std::optional<double> f,
                   std::optional<double> e, double m) {
      out << std::left << std::setw(static_cast<int>(width)) << label
          << std::right;
      out << std::setw(7) << format_metric(s);
      out << std::setw(7) << (f ? format_metric(*f) : "-");
      out << std::setw(7) << (e ? format_metric(*e) : "-");
      out << std::setw(7) << format_metric(m) << '\n';
    };
    out << std::left << std::setw(static_cast<int>(width)) << "" << std::right
        << std::setw(7) << "S" << std::setw(7) << "F" << std::setw(7) << "E"
        << std::setw(7) << "MAE" << '\n';
    if (o.per_image) {
      for (std::size_t i = 0; i < names.size(); ++i) {
        const auto& m = r.per_image[i];
        row(names[i], m.s_alpha,
            m.degenerate ? std::nullopt : std::optional<double>(m.f_beta),
            m.degenerate ? std::nullopt : std::optional<double>(m.e_xi), m.mae);
      }
    }
    row("mean", r.s_alpha, r.f_beta, r.e_xi, r.mae);
    out << names.size() << " images\n";
  }
  return unmatched.empty() ? kExitOk : kExitFailure;
}

// ------------------------------------------------------------------- synth

struct SynthOptions {
  std::string spec;
  std::string out;
  int count = 0;
  std::optional<std::uint64_t> seed;
  std::optional<int> size;
  std::optional<int> instances;
  std::optional<std::string> shape;
  std::optional<int> min_size;
  std::optional<int> max_size;
  std::optional<double> noise;
  std::optional<double> jitter;
};

int cmd_synth(const SynthOptions& o, std::ostream& out, std::ostream&) {
  SyntheticSceneSpec spec;
  if (!o.spec.empty()) {
    require_file(o.spec, "--spec");
    std::ifstream is(o.spec);
    std::stringstream ss;
    ss << is.rdbuf();
    spec = parse_scene_spec(ss.str());
  }
  if (o.size) spec.height = spec.width = *o.size;
  if (o.instances) spec.instances = *o.instances;
  if (o.shape) spec.shape = parse_shape(*o.shape);
  if (o.min_size) spec.min_size = *o.min_size;
  if (o.max_size) spec.max_size = *o.max_size;
  if (o.noise) spec.noise_sigma = *o.noise;
  if (o.jitter) spec.color_jitter = *o.jitter;
  if (o.seed) spec.seed = *o.seed;
  spec.validate();
  if (o.count < 0) throw UsageError("--count must be >= 0");

  const fs::path dir(o.out);
  fs::create_directories(dir / "images");
  fs::create_directories(dir / "gt");
  std::vector<BoxAnnotation> annotations;
  const std::uint64_t base = spec.seed;
  for (int i = 0; i < o.count; ++i) {
    char stem[16];
    std::snprintf(stem, sizeof(stem), "%04d", i);
    SyntheticSceneSpec s = spec;
    s.seed = base + static_cast<std::uint64_t>(i);
    const auto rec = generate_synthetic(s, std::string(stem) + ".ppm");
    save_image(rec.image, dir / "images" / (std::string(stem) + ".ppm"));
    save_image(*rec.gt, dir / "gt" / (std::string(stem) + ".pgm"));
    annotations.push_back(rec.annotation);
  }
  save_annotations(annotations, dir / "annotations.json");
  out << "wrote " << o.count << " scenes to " << dir.string() << '\n';
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Box-supervised saliency: pseudo-labels, training, evaluation"};
  app.name("boxsal");
  app.require_subcommand(1);

  PseudoLabelOptions pl;
  auto* c_pl = app.add_subcommand("pseudo-label", "Generate pseudo-label masks from boxes");
  c_pl->add_option("--images", pl.images, "Directory of .ppm/.pgm images")->required();
  c_pl->add_option("--annotations", pl.annotations, "annotations.json file")->required();
  c_pl->add_option("--out", pl.out, "Output directory for masks")->required();
  c_pl->add_option("--mode", pl.mode, "grabcut or box")
      ->check(CLI::IsMember({"grabcut", "box"}))
      ->capture_default_str();
  c_pl->add_option("--iters", pl.iters, "GrabCut rounds")->capture_default_str();
  c_pl->add_option("--k", pl.k, "Mixture components per model")->capture_default_str();
  c_pl->add_option("--seed", pl.seed, "Mixture initialisation seed")->capture_default_str();
  c_pl->add_option("--jobs", pl.jobs, "Worker threads (0 = all cores)")->capture_default_str();

  TrainOptions tr;
  auto* c_tr = app.add_subcommand("train", "Train the saliency network");
  c_tr->add_option("--config", tr.config, "Training config (JSON)")->required();
  c_tr->add_option("--data", tr.data, "Directory with images/ and annotations.json")->required();
  c_tr->add_option("--labels", tr.labels, "Directory of pseudo-label masks")->required();
  c_tr->add_option("--out", tr.out, "Output directory")->required();
  c_tr->add_option("--fore", tr.fore, "Foreground smoothness loss")
      ->check(CLI::IsMember({"on", "off"}))
      ->capture_default_str();
  c_tr->add_option("--back", tr.back, "Background loss")
      ->check(CLI::IsMember({"on", "off"}))
      ->capture_default_str();
  c_tr->add_option("--epochs", tr.epochs, "Override the configured epoch count");
  c_tr->add_option("--seed", tr.seed, "Override the shuffle and init seeds");

  PredictOptions pr;
  auto* c_pr = app.add_subcommand("predict", "Write saliency maps for a directory of images");
  c_pr->add_option("--checkpoint", pr.checkpoint, "Checkpoint file")->required();
  c_pr->add_option("--images", pr.images, "Directory of images")->required();
  c_pr->add_option("--out", pr.out, "Output directory")->required();
  c_pr->add_option("--jobs", pr.jobs, "Worker threads (0 = all cores)")->capture_default_str();

  EvalOptions ev;
  auto* c_ev = app.add_subcommand("eval", "Score saliency maps against ground truth");
  c_ev->add_option("--pred", ev.pred, "Directory of predicted maps")->required();
  c_ev->add_option("--gt", ev.gt, "Directory of ground-truth masks")->required();
  c_ev->add_flag("--per-image", ev.per_image, "Also report every image");
  c_ev->add_option("--format", ev.format, "table or json-lines")
      ->check(CLI::IsMember({"table", "json-lines"}))
      ->capture_default_str();

  SynthOptions sy;
  auto* c_sy = app.add_subcommand("synth", "Generate a synthetic corpus");
  auto* spec_opt = c_sy->add_option("--spec", sy.spec, "Scene spec (JSON)");
  c_sy->add_option("--out", sy.out, "Output directory")->required();
  c_sy->add_option("--count", sy.count, "Number of scenes")->required();
  c_sy->add_option("--seed", sy.seed, "Seed of the first scene (default 17)");
  std::vector<CLI::Option*> scene_flags = {
      c_sy->add_option("--size", sy.size, "Canvas side"),
      c_sy->add_option("--instances", sy.instances, "Instances per scene"),
      c_sy->add_option("--shape", sy.shape, "rectangle, ellipse or blob")
          ->check(CLI::IsMember({"rectangle", "ellipse", "blob"})),
      c_sy->add_option("--min-size", sy.min_size, "Smallest instance extent"),
      c_sy->add_option("--max-size", sy.max_size, "Largest instance extent"),
      c_sy->add_option("--noise", sy.noise, "Pixel noise sigma"),
      c_sy->add_option("--jitter", sy.jitter, "Per-scene colour jitter"),
  };
  for (auto* f : scene_flags) spec_opt->excludes(f);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (c_pl->parsed()) return cmd_pseudo_label(pl, out, err);
    if (c_tr->parsed()) return cmd_train(tr, out, err);
    if (c_pr->parsed()) return cmd_predict(pr, out, err);
    if (c_ev->parsed()) return cmd_eval(ev, out, err);
    if (c_sy->parsed()) return cmd_synth(sy, out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  std::vector<const char*> argv{"boxsal"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace boxsal::cli
