// ccnn: synth | train | dehaze | eval | verify

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ccnn/datasynth.hpp"
#include "ccnn/dehaze.hpp"
#include "ccnn/image_io.hpp"
#include "ccnn/metrics.hpp"
#include "ccnn/network_io.hpp"
#include "ccnn/parallel.hpp"
#include "ccnn/train.hpp"
#include "ccnn/verify.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Files and directories created by a subcommand. Unless commit() is called
// they are removed again, so a failed run leaves no partial outputs behind.
class OutputGuard {
 public:
  OutputGuard() = default;
  OutputGuard(const OutputGuard&) = delete;
  OutputGuard& operator=(const OutputGuard&) = delete;
  ~OutputGuard() {
    if (committed_) return;
    std::error_code ec;
    for (auto it = files_.rbegin(); it != files_.rend(); ++it) fs::remove(*it, ec);
    for (auto it = dirs_.rbegin(); it != dirs_.rend(); ++it) fs::remove_all(*it, ec);
  }

  const fs::path& file(const fs::path& p) {
    files_.push_back(p);
    return files_.back();
  }

  // Creates p (and parents) if needed; only directories created here are
  // removed on failure.
  void directory(const fs::path& p) {
    if (p.empty()) return;
    fs::path missing;
    for (auto q = fs::absolute(p); !q.empty() && !fs::exists(q); q = q.parent_path()) {
      missing = q;
      if (q == q.parent_path()) break;
    }
    fs::create_directories(p);
    if (!missing.empty()) dirs_.push_back(missing);
  }

  void commit() { committed_ = true; }

 private:
  std::vector<fs::path> files_;
  std::vector<fs::path> dirs_;
  bool committed_ = false;
};

void write_text(const fs::path& path, const std::string& text) {
  ccnn::detail::write_file_atomic(path, std::vector<char>(text.begin(), text.end()));
}

std::string fmt(double v, int digits = 9) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

// ---- shared option groups ----

struct NetworkFlags {
  std::string config;
  std::optional<std::size_t> trunk_depth, trunk_filters, kernel_size, airlight_depth, airlight_filters,
      trans_block_size, concat_blocks;
  std::optional<double> init_std;

  void add(CLI::App* app) {
    app->add_option("--config", config, "Network config JSON (fields as in NetworkConfig)")->check(CLI::ExistingFile);
    app->add_option("--trunk-depth", trunk_depth, "Shared trunk conv layers [default 4]")->check(CLI::Range(1, 64));
    app->add_option("--trunk-filters", trunk_filters, "Filters per trunk layer [default 16]")->check(CLI::Range(1, 512));
    app->add_option("--kernel-size", kernel_size, "Square kernel size, odd [default 3]")->check(CLI::Range(1, 15));
    app->add_option("--airlight-depth", airlight_depth, "Airlight head layers [default 4]")->check(CLI::Range(1, 64));
    app->add_option("--airlight-filters", airlight_filters, "Airlight head width [default 8]")->check(CLI::Range(1, 512));
    app->add_option("--trans-block-size", trans_block_size, "Layers per transmission block [default 3]")
        ->check(CLI::Range(1, 64));
    app->add_option("--concat-blocks", concat_blocks, "Transmission concat blocks [default 2]")->check(CLI::Range(1, 64));
    app->add_option("--init-std", init_std, "Gaussian init std for kernels [default 0.01]")
        ->check(CLI::Range(1e-9, 10.0));
  }

  ccnn::NetworkConfig resolve() const {
    ccnn::NetworkConfig c = config.empty() ? ccnn::NetworkConfig{} : ccnn::load_config(config);
    if (trunk_depth) c.trunk_depth = *trunk_depth;
    if (trunk_filters) c.trunk_filters = *trunk_filters;
    if (kernel_size) c.kernel_size = *kernel_size;
    if (airlight_depth) c.airlight_depth = *airlight_depth;
    if (airlight_filters) c.airlight_filters = *airlight_filters;
    if (trans_block_size) c.trans_block_size = *trans_block_size;
    if (concat_blocks) c.concat_blocks = *concat_blocks;
    if (init_std) c.init_std = *init_std;
    c.validate();
    return c;
  }
};

// ---- synth ----

struct SynthArgs {
  std::size_t procedural = 0;
  std::string manifest;
  std::size_t source_width = 256, source_height = 192;
  ccnn::synth::SynthOptions opt;
  std::string split = "train";
  std::string out;
};

int cmd_synth(const SynthArgs& a) {
  if ((a.procedural > 0) == !a.manifest.empty())
    throw ccnn::ConfigError("synth: give exactly one of --procedural N or --manifest PATH");
  a.opt.validate();
  const fs::path out = a.out;
  if (fs::exists(out) && !fs::is_empty(out))
    throw ccnn::IoError("synth: output directory '" + out.string() + "' exists and is not empty");

  // Build in a sibling staging directory and rename at the end.
  fs::path staging = out;
  staging += ".partial";
  fs::remove_all(staging);
  OutputGuard guard;
  guard.directory(staging);
  ccnn::synth::DatasetManifest m;
  if (a.procedural > 0) {
    m = ccnn::synth::procedural_rgbd(a.procedural, a.source_height, a.source_width,
                                     ccnn::derive_seed(a.opt.seed, "rgbd:" + a.split), staging / "rgbd", a.split,
                                     a.opt.threads);
  } else {
    m = ccnn::synth::load_manifest(a.manifest);
  }
  const auto samples = ccnn::synth::expand_samples<float>(m, a.opt);
  ccnn::synth::write_sample_set(staging, samples, a.split, a.opt);
  if (fs::exists(out)) fs::remove(out);
  fs::rename(staging, out);
  guard.commit();
  std::cout << "synth: " << samples.size() << " samples (" << m.entries.size() << " sources x " << a.opt.per_image
            << ") at " << a.opt.width << "x" << a.opt.height << ", beta in [" << a.opt.beta_min << ", "
            << a.opt.beta_max << "], B in [" << a.opt.airlight_min << ", " << a.opt.airlight_max << "] -> "
            << out.string() << "\n";
  return 0;
}

// ---- train ----

struct TrainArgs {
  std::string train_dir, val_dir, out, curve, summary;
  NetworkFlags net;
  ccnn::TrainHyper hp;
};

json loss_json(const ccnn::LossBreakdown& l) { return {{"total", l.total}, {"ssim", l.ssim}, {"mse", l.mse}}; }

int cmd_train(TrainArgs a) {
  const auto cfg = a.net.resolve();
  const auto train_set = ccnn::load_training_set<float>(ccnn::synth::load_sample_set(a.train_dir), a.hp.threads);
  const auto val_set = ccnn::load_training_set<float>(ccnn::synth::load_sample_set(a.val_dir), a.hp.threads);
  std::cout << "train: " << train_set.size() << " train / " << val_set.size() << " val samples, "
            << ccnn::init_weights<float>(cfg, 0).parameter_count() << " parameters, " << a.hp.epochs
            << " epochs, batch " << a.hp.batch << ", lr " << a.hp.adam.lr << "\n";

  std::ostringstream csv;
  csv << "epoch,train_loss,val_loss,val_ssim_loss,val_mse_loss\n";
  const auto t0 = std::chrono::steady_clock::now();
  auto res = ccnn::train(train_set, val_set, cfg, a.hp, [&](const ccnn::EpochRecord& r) {
    csv << r.epoch << ',' << fmt(r.train_loss) << ',' << fmt(r.val.total) << ',' << fmt(r.val.ssim) << ','
        << fmt(r.val.mse) << '\n';
    if (r.epoch == 1 || r.epoch % 10 == 0 || r.epoch == a.hp.epochs)
      std::cout << "epoch " << r.epoch << "  train " << fmt(r.train_loss, 6) << "  val " << fmt(r.val.total, 6)
                << " (ssim " << fmt(r.val.ssim, 6) << ", mse " << fmt(r.val.mse, 6) << ")" << std::endl;
  });
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  OutputGuard guard;
  guard.directory(fs::path(a.out).parent_path());
  ccnn::save_weights(res.weights, guard.file(a.out));
  if (!a.curve.empty()) {
    guard.directory(fs::path(a.curve).parent_path());
    write_text(guard.file(a.curve), csv.str());
  }
  if (!a.summary.empty()) {
    const auto& h = res.history;
    const json s{{"config", ccnn::config_to_json(cfg)},
                 {"epochs", a.hp.epochs},
                 {"batch", a.hp.batch},
                 {"lr", a.hp.adam.lr},
                 {"seed", a.hp.seed},
                 {"optimizer_steps", res.kernel_state.empty() ? 0 : res.kernel_state.front().step},
                 {"initial_val", loss_json(h.initial_val)},
                 {"final_val", loss_json(h.epochs.empty() ? h.initial_val : h.epochs.back().val)}};
    guard.directory(fs::path(a.summary).parent_path());
    write_text(guard.file(a.summary), s.dump(2) + "\n");
  }
  guard.commit();
  const auto& fin = res.history.epochs.empty() ? res.history.initial_val : res.history.epochs.back().val;
  std::cout << "train: val loss " << fmt(res.history.initial_val.total, 6) << " -> " << fmt(fin.total, 6) << " in "
            << fmt(secs, 4) << " s; weights -> " << a.out << "\n";
  return 0;
}

// ---- dehaze ----

struct DehazeArgs {
  std::string weights, input, output, input_dir, output_dir;
  NetworkFlags net;
  ccnn::DehazeOptions opt;
  bool no_refine = false;
  bool save_transmission = false;
  bool record_runtime = false;
  std::size_t threads = 1;
};

struct DehazeJob {
  std::string id;
  fs::path input, output, transmission;
};

int cmd_dehaze(DehazeArgs a) {
  const bool single = !a.input.empty();
  if (single == !a.input_dir.empty())
    throw ccnn::ConfigError("dehaze: give exactly one of --input or --input-dir");
  if (single && a.output.empty()) throw ccnn::ConfigError("dehaze: --input requires --output");
  if (!single && a.output_dir.empty()) throw ccnn::ConfigError("dehaze: --input-dir requires --output-dir");
  a.opt.refine = !a.no_refine;
  const auto cfg = a.net.resolve();
  const auto weights = ccnn::load_weights<float>(a.weights, cfg);

  std::vector<DehazeJob> jobs;
  if (single) {
    fs::path t = a.output;
    t.replace_extension();
    t += "_trans.pgm";
    jobs.push_back({fs::path(a.input).stem().string(), a.input, a.output, t});
  } else {
    const fs::path in = a.input_dir, out = a.output_dir;
    if (fs::exists(in / "samples.json")) {
      for (const auto& r : ccnn::synth::load_sample_set(in).records)
        jobs.push_back({r.id, in / r.hazy, out / (r.id + ".ppm"), out / (r.id + "_trans.pgm")});
    } else {
      std::set<fs::path> files;
      for (const auto& e : fs::directory_iterator(in))
        if (e.is_regular_file() && e.path().extension() == ".ppm") files.insert(e.path());
      for (const auto& f : files) {
        const auto id = f.stem().string();
        jobs.push_back({id, f, out / (id + ".ppm"), out / (id + "_trans.pgm")});
      }
    }
    if (jobs.empty()) throw ccnn::IoError("dehaze: no .ppm inputs in '" + in.string() + "'");
  }

  OutputGuard guard;
  guard.directory(single ? fs::path(a.output).parent_path() : fs::path(a.output_dir));
  for (const auto& j : jobs) {
    guard.file(j.output);
    if (a.save_transmission) guard.file(j.transmission);
  }
  std::vector<double> airlight(jobs.size()), runtime(jobs.size());
  ccnn::parallel_for(jobs.size(), a.threads, [&](std::size_t i) {
    const auto& j = jobs[i];
    const auto t0 = std::chrono::steady_clock::now();
    const auto hazy = ccnn::image::read_ppm<float>(j.input);
    const auto r = ccnn::dehaze(hazy, weights, cfg, a.opt);
    ccnn::image::write_ppm(j.output, r.dehazed);
    if (a.save_transmission) ccnn::image::write_pgm16(j.transmission, r.transmission);
    airlight[i] = r.airlight;
    runtime[i] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  });

  json images = json::array();
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    json e{{"id", jobs[i].id}, {"airlight", airlight[i]}, {"output", jobs[i].output.filename().string()}};
    if (a.record_runtime) e["runtime_seconds"] = runtime[i];
    images.push_back(e);
    std::cout << jobs[i].id << ": B = " << fmt(airlight[i], 6) << "\n";
  }
  if (!single) {
    const json pred{{"refine", a.opt.refine}, {"t_floor", a.opt.t_floor}, {"images", images}};
    write_text(guard.file(fs::path(a.output_dir) / "predictions.json"), pred.dump(2) + "\n");
  }
  guard.commit();
  return 0;
}

// ---- eval ----

struct EvalArgs {
  std::string pred, gt, report;
  double airlight_tol = 0.05;
  std::size_t threads = 1;
};

int cmd_eval(const EvalArgs& a) {
  const fs::path pred = a.pred, gt = a.gt;
  struct Pair {
    std::string id;
    fs::path pred, gt;
    std::optional<double> airlight_gt;
  };
  std::vector<Pair> pairs;
  if (fs::exists(gt / "samples.json")) {
    for (const auto& r : ccnn::synth::load_sample_set(gt).records)
      pairs.push_back({r.id, pred / (r.id + ".ppm"), gt / r.clean, r.airlight});
  } else {
    std::set<fs::path> files;
    for (const auto& e : fs::directory_iterator(gt))
      if (e.is_regular_file() && e.path().extension() == ".ppm") files.insert(e.path());
    for (const auto& f : files) pairs.push_back({f.stem().string(), pred / f.filename(), f, std::nullopt});
  }
  if (pairs.empty()) throw ccnn::IoError("eval: no ground-truth images in '" + gt.string() + "'");

  std::vector<std::string> missing;
  for (const auto& p : pairs)
    if (!fs::exists(p.pred)) missing.push_back(p.id);
  if (!missing.empty()) {
    std::string list;
    for (const auto& id : missing) list += (list.empty() ? "" : ", ") + id;
    throw ccnn::IoError("eval: " + std::to_string(missing.size()) + " predictions missing: " + list);
  }

  std::map<std::string, json> predicted;
  if (fs::exists(pred / "predictions.json")) {
    std::ifstream f(pred / "predictions.json");
    const auto doc = json::parse(f);
    for (const auto& e : doc.at("images")) predicted[e.at("id").get<std::string>()] = e;
  }

  ccnn::metrics::MetricsReport report;
  report.images.resize(pairs.size());
  ccnn::parallel_for(pairs.size(), a.threads, [&](std::size_t i) {
    const auto& p = pairs[i];
    const auto x = ccnn::image::read_ppm<double>(p.pred), y = ccnn::image::read_ppm<double>(p.gt);
    if (!(x.shape() == y.shape()))
      throw ccnn::ConfigError("eval: '" + p.id + "' prediction " + x.shape().str() + " vs ground truth " + y.shape().str());
    auto& m = report.images[i];
    m.id = p.id;
    m.mse = ccnn::metrics::mse_255(x, y);
    m.psnr_db = ccnn::metrics::psnr(m.mse);
    m.ssim = ccnn::metrics::ssim_eval(x, y);
    if (auto it = predicted.find(p.id); it != predicted.end()) {
      if (p.airlight_gt && it->second.contains("airlight"))
        m.airlight_abs_err = std::abs(it->second.at("airlight").get<double>() - *p.airlight_gt);
      if (it->second.contains("runtime_seconds")) m.runtime_seconds = it->second.at("runtime_seconds").get<double>();
    }
  });

  const auto j = ccnn::metrics::report_to_json(report, a.airlight_tol);
  OutputGuard guard;
  guard.directory(fs::path(a.report).parent_path());
  write_text(guard.file(a.report), j.dump(2) + "\n");
  guard.commit();

  const auto agg = report.aggregate(a.airlight_tol);
  std::cout << "eval: " << report.images.size() << " images  mse " << fmt(agg.mse, 6) << "  psnr "
            << fmt(agg.psnr_db, 6) << " dB (of mean mse " << fmt(agg.psnr_of_mean_mse, 6) << ")  ssim "
            << fmt(agg.ssim, 6);
  if (agg.airlight_accuracy)
    std::cout << "  airlight acc@" << a.airlight_tol << " " << fmt(*agg.airlight_accuracy, 4);
  std::cout << "\n";
  return 0;
}

// ---- verify ----

int cmd_verify(const ccnn::verify::Options& opt) {
  const auto results = ccnn::verify::run_suite(opt);
  bool ok = true;
  std::printf("%-52s %-6s %12s %10s %8s\n", "check", "result", "worst err", "tolerance", "seconds");
  for (const auto& r : results) {
    ok = ok && r.passed;
    std::printf("%-52s %-6s %12.3e %10.1e %8.3f", r.name.c_str(), r.passed ? "PASS" : "FAIL", r.value, r.tolerance,
                r.seconds);
    if (!r.detail.empty()) std::printf("  %s", r.detail.c_str());
    std::printf("\n");
  }
  std::printf("%s: %zu checks\n", ok ? "all passed" : "FAILED", results.size());
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ccnn: cascaded CNN single-image dehazing"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for all subcommands");

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "Generate hazy training samples from RGB-D scenes");
  synth->add_option("--procedural", sa.procedural, "Generate N procedural RGB-D scenes as sources")
      ->check(CLI::Range(1, 100000));
  synth->add_option("--manifest", sa.manifest, "RGB-D manifest JSON (entries: id, clean, depth)")
      ->check(CLI::ExistingFile);
  synth->add_option("--source-width", sa.source_width, "Procedural scene width")->capture_default_str()
      ->check(CLI::Range(8, 8192));
  synth->add_option("--source-height", sa.source_height, "Procedural scene height")->capture_default_str()
      ->check(CLI::Range(8, 8192));
  synth->add_option("--per-image", sa.opt.per_image, "Haze draws per source")->capture_default_str()
      ->check(CLI::Range(1, 1000));
  synth->add_option("--beta-min", sa.opt.beta_min, "Scattering coefficient lower bound")->capture_default_str()
      ->check(CLI::Range(1e-6, 100.0));
  synth->add_option("--beta-max", sa.opt.beta_max, "Scattering coefficient upper bound")->capture_default_str()
      ->check(CLI::Range(1e-6, 100.0));
  synth->add_option("--airlight-min", sa.opt.airlight_min, "Airlight lower bound")->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  synth->add_option("--airlight-max", sa.opt.airlight_max, "Airlight upper bound")->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  synth->add_option("--width", sa.opt.width, "Output sample width")->capture_default_str()->check(CLI::Range(1, 8192));
  synth->add_option("--height", sa.opt.height, "Output sample height")->capture_default_str()
      ->check(CLI::Range(1, 8192));
  synth->add_option("--split", sa.split, "Split name used in ids")->capture_default_str();
  synth->add_option("--seed", sa.opt.seed, "Master seed")->capture_default_str();
  synth->add_option("--threads", sa.opt.threads, "Worker threads")->capture_default_str()->check(CLI::Range(1, 256));
  synth->add_option("--out", sa.out, "Output directory (must be new or empty)")->required();

  TrainArgs ta;
  ta.hp.epochs = 200;
  auto* train = app.add_subcommand("train", "Train the network on a synthesized sample set");
  train->add_option("--train", ta.train_dir, "Training sample directory (from synth)")->required()
      ->check(CLI::ExistingDirectory);
  train->add_option("--val", ta.val_dir, "Validation sample directory (from synth)")->required()
      ->check(CLI::ExistingDirectory);
  ta.net.add(train);
  train->add_option("--epochs", ta.hp.epochs, "Training epochs")->capture_default_str()->check(CLI::Range(0, 1000000));
  train->add_option("--lr", ta.hp.adam.lr, "Adam learning rate")->capture_default_str()->check(CLI::Range(1e-9, 10.0));
  train->add_option("--beta1", ta.hp.adam.beta1, "Adam first-moment decay")->capture_default_str()
      ->check(CLI::Range(0.0, 0.999999));
  train->add_option("--batch", ta.hp.batch, "Mini-batch size")->capture_default_str()->check(CLI::Range(1, 100000));
  train->add_option("--seed", ta.hp.seed, "Seed for init and shuffling")->capture_default_str();
  train->add_option("--threads", ta.hp.threads, "Worker threads (results do not depend on it)")
      ->capture_default_str()->check(CLI::Range(1, 256));
  train->add_option("--out", ta.out, "Output weight file")->required();
  train->add_option("--curve", ta.curve, "Loss-curve CSV");
  train->add_option("--summary", ta.summary, "Training summary JSON (initial/final validation losses)");

  DehazeArgs da;
  auto* dehaze = app.add_subcommand("dehaze", "Dehaze images with trained weights");
  dehaze->add_option("--weights", da.weights, "Weight file")->required()->check(CLI::ExistingFile);
  da.net.add(dehaze);
  dehaze->add_option("--input", da.input, "Hazy PPM image")->check(CLI::ExistingFile);
  dehaze->add_option("--output", da.output, "Output PPM image");
  dehaze->add_option("--input-dir", da.input_dir, "Directory of hazy PPMs or a synth sample set")
      ->check(CLI::ExistingDirectory);
  dehaze->add_option("--output-dir", da.output_dir, "Output directory (<id>.ppm plus predictions.json)");
  dehaze->add_flag("--no-refine", da.no_refine, "Skip guided-filter refinement of the transmission");
  dehaze->add_option("--t-floor", da.opt.t_floor, "Lower bound on transmission at inversion")->capture_default_str()
      ->check(CLI::Range(1e-6, 1.0));
  dehaze->add_option("--radius", da.opt.filter.radius, "Guided filter radius (window 2r+1)")->capture_default_str()
      ->check(CLI::Range(1, 1024));
  dehaze->add_option("--gf-eps", da.opt.filter.eps, "Guided filter regularizer")->capture_default_str()
      ->check(CLI::Range(0.0, 1e6));
  dehaze->add_flag("--save-transmission", da.save_transmission,
                   "Also write the transmission map as 16-bit PGM (<output>_trans.pgm)");
  dehaze->add_flag("--record-runtime", da.record_runtime,
                   "Record per-image wall time in predictions.json (makes it non-reproducible)");
  dehaze->add_option("--threads", da.threads, "Images processed in parallel")->capture_default_str()
      ->check(CLI::Range(1, 256));

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "Score dehazed images against ground truth");
  eval->add_option("--pred", ea.pred, "Prediction directory (<id>.ppm, optional predictions.json)")->required()
      ->check(CLI::ExistingDirectory);
  eval->add_option("--gt", ea.gt, "Ground truth: synth sample set or directory of PPMs")->required()
      ->check(CLI::ExistingDirectory);
  eval->add_option("--report", ea.report, "Output report JSON")->required();
  eval->add_option("--airlight-tol", ea.airlight_tol, "Airlight accuracy tolerance")->capture_default_str()
      ->check(CLI::Range(1e-9, 1.0));
  eval->add_option("--threads", ea.threads, "Worker threads")->capture_default_str()->check(CLI::Range(1, 256));

  ccnn::verify::Options vo;
  auto* verify = app.add_subcommand("verify", "Run gradient-check and oracle suites");
  verify->add_option("--seed", vo.seed, "Seed for the random test inputs")->capture_default_str();
  verify->add_option("--perturb-gradient", vo.perturb_gradient,
                     "Test hook: scale analytic gradients by (1+x); any nonzero x must fail the suite")
      ->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) return cmd_synth(sa);
    if (*train) return cmd_train(ta);
    if (*dehaze) return cmd_dehaze(da);
    if (*eval) return cmd_eval(ea);
    if (*verify) return cmd_verify(vo);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
