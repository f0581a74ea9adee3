// Command-line front end for the sketch-and-generate pipeline:
// dataset generation, streaming sketching, generator training, sampling,
// histogram comparison, exact-MMD oracles and gradient checking.

#include <chrono>
#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "sketchgen/sketchgen.hpp"

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::vector<int> parse_widths(const std::string& list) {
  std::vector<int> widths;
  if (list.empty()) return widths;
  std::stringstream ss(list);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t used = 0;
      const int w = std::stoi(tok, &used);
      if (used != tok.size() || w < 1) throw std::invalid_argument(tok);
      widths.push_back(w);
    } catch (const std::exception&) {
      throw std::invalid_argument("bad hidden-layer width '" + tok + "'");
    }
  }
  return widths;
}

std::vector<Eigen::Index> parse_sizes(const std::string& list) {
  std::vector<Eigen::Index> sizes;
  std::stringstream ss(list);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    const long long v = std::stoll(tok);
    if (v < 1) throw std::invalid_argument("bad size '" + tok + "'");
    sizes.push_back(static_cast<Eigen::Index>(v));
  }
  return sizes;
}

int env_workers() {
  const char* raw = std::getenv("SKETCHGEN_WORKERS");
  if (!raw) return 1;
  const int w = std::atoi(raw);
  return w < 1 ? 1 : w;
}

sketchgen::FrequencyKind parse_law(const std::string& name) {
  if (name == "gaussian") return sketchgen::FrequencyKind::Gaussian;
  if (name == "folded") return sketchgen::FrequencyKind::FoldedGaussian;
  throw std::invalid_argument("unknown frequency law '" + name + "'");
}

const char* law_name(sketchgen::FrequencyKind kind) {
  return kind == sketchgen::FrequencyKind::Gaussian ? "gaussian" : "folded";
}

// ---------------------------------------------------------------- gen

struct GenCommon {
  long long n = 0;
  std::uint64_t seed = 0;
  std::string out;
};

void add_gen(CLI::App& app) {
  auto* gen = app.add_subcommand("gen", "Generate a synthetic 2-D dataset as CSV");
  gen->require_subcommand(1);

  auto finish = [](const Eigen::MatrixXd& samples, const std::string& out) {
    sketchgen::save_samples_csv(out, samples);
    std::cout << "wrote " << out << ": n = " << samples.rows() << ", d = " << samples.cols()
              << "\n";
  };

  {
    auto common = std::make_shared<GenCommon>();
    auto sigma_r = std::make_shared<double>(0.02);
    auto* c = gen->add_subcommand("spiral", "Spiral with angle-proportional radius");
    c->add_option("--n", common->n, "number of samples")->required();
    c->add_option("--seed", common->seed, "RNG seed");
    c->add_option("--sigma-r", *sigma_r, "radial noise std")->capture_default_str();
    c->add_option("-o,--out", common->out, "output CSV path")->default_val("spiral.csv");
    c->callback([common, sigma_r, finish] {
      finish(sketchgen::gen_spiral(common->n, *sigma_r, common->seed), common->out);
    });
  }
  {
    auto common = std::make_shared<GenCommon>();
    auto radius = std::make_shared<double>(1.0);
    auto comp_sigma = std::make_shared<double>(0.12);
    auto* c = gen->add_subcommand("gmm6", "Mixture of 6 Gaussians on a circle");
    c->add_option("--n", common->n, "number of samples")->required();
    c->add_option("--seed", common->seed, "RNG seed");
    c->add_option("--radius", *radius, "circle radius of the means")->capture_default_str();
    c->add_option("--comp-sigma", *comp_sigma, "per-component std")->capture_default_str();
    c->add_option("-o,--out", common->out, "output CSV path")->default_val("gmm6.csv");
    c->callback([common, radius, comp_sigma, finish] {
      finish(sketchgen::gen_gmm6(common->n, common->seed, *radius, *comp_sigma), common->out);
    });
  }
  {
    auto common = std::make_shared<GenCommon>();
    auto R = std::make_shared<double>(1.0);
    auto sigma_r = std::make_shared<double>(0.05);
    auto* c = gen->add_subcommand("circle", "Noisy circle of radius R");
    c->add_option("--n", common->n, "number of samples")->required();
    c->add_option("--seed", common->seed, "RNG seed");
    c->add_option("--R", *R, "circle radius")->capture_default_str();
    c->add_option("--sigma-r", *sigma_r, "radial noise std")->capture_default_str();
    c->add_option("-o,--out", common->out, "output CSV path")->default_val("circle.csv");
    c->callback([common, R, sigma_r, finish] {
      finish(sketchgen::gen_circle(common->n, *R, *sigma_r, common->seed), common->out);
    });
  }
}

// ---------------------------------------------------------------- sketch

struct SketchArgs {
  std::string in;
  std::string law = "gaussian";
  double sigma2 = 1.0;
  int m = 0;
  std::uint64_t seed = 0;
  int fallback_dim = 2;
  std::string out = "sketch.clsk";
  std::string freq_out;
};

// Streams the CSV once. With W > 1 workers rows are read in blocks and
// each worker accumulates a fixed stripe of every block, so the result is
// deterministic for a fixed worker count. Memory stays O(W m + block d).
sketchgen::Sketch stream_sketch(sketchgen::CsvSampleReader& reader,
                                const sketchgen::FrequencyMatrix& freq, int workers,
                                std::vector<double>& first_row, bool have_first,
                                std::uint64_t* rows_out) {
  const int d = freq.dim();
  std::vector<sketchgen::SketchAccumulator> accs;
  accs.reserve(workers);
  for (int w = 0; w < workers; ++w) accs.emplace_back(freq);

  constexpr std::size_t kBlockRows = 8192;
  std::vector<Eigen::VectorXd> block;
  block.reserve(kBlockRows);
  std::uint64_t rows = 0;

  auto to_vec = [d](const std::vector<double>& row) {
    Eigen::VectorXd x(d);
    for (int j = 0; j < d; ++j) x[j] = row[j];
    return x;
  };
  auto flush = [&] {
    if (block.empty()) return;
    if (workers == 1) {
      for (const auto& x : block) accs[0].add(x);
    } else {
      std::vector<std::thread> threads;
      const std::size_t stripe = (block.size() + workers - 1) / workers;
      for (int w = 0; w < workers; ++w) {
        const std::size_t begin = w * stripe;
        const std::size_t end = std::min(block.size(), begin + stripe);
        if (begin >= end) break;
        threads.emplace_back([&, w, begin, end] {
          for (std::size_t i = begin; i < end; ++i) accs[w].add(block[i]);
        });
      }
      for (auto& t : threads) t.join();
    }
    rows += block.size();
    block.clear();
  };

  if (have_first) block.push_back(to_vec(first_row));
  std::vector<double> row;
  while (reader.next(row)) {
    block.push_back(to_vec(row));
    if (block.size() >= kBlockRows) flush();
  }
  flush();
  for (int w = 1; w < workers; ++w) accs[0].combine(accs[w]);
  if (rows_out) *rows_out = rows;
  return accs[0].finalize();
}

void add_sketch(CLI::App& app) {
  auto args = std::make_shared<SketchArgs>();
  auto* c = app.add_subcommand("sketch", "Stream a CSV dataset into a feature sketch");
  c->add_option("--in", args->in, "input samples CSV")->required()->check(CLI::ExistingFile);
  c->add_option("--law", args->law, "frequency law: gaussian | folded")->capture_default_str();
  c->add_option("--sigma2", args->sigma2, "frequency-law scale")->capture_default_str();
  c->add_option("--m", args->m, "sketch size")->required();
  c->add_option("--seed", args->seed, "frequency seed");
  c->add_option("--dim", args->fallback_dim, "sample dimension used when the CSV is empty")
      ->capture_default_str();
  c->add_option("-o,--out", args->out, "output sketch file")->capture_default_str();
  c->add_option("--freq-out", args->freq_out, "also export the frequency matrix");
  c->callback([args] {
    sketchgen::CsvSampleReader reader(args->in);
    std::vector<double> first_row;
    const bool have_first = reader.next(first_row);
    if (!have_first)
      std::cerr << "warning: " << args->in << " has no samples; writing an empty sketch\n";

    sketchgen::FrequencyLaw law;
    law.kind = parse_law(args->law);
    law.sigma2 = args->sigma2;
    law.dim = have_first ? static_cast<int>(first_row.size()) : args->fallback_dim;
    const auto freq = sketchgen::draw_frequencies(law, args->m, args->seed);

    std::uint64_t rows = 0;
    const auto sketch =
        stream_sketch(reader, freq, env_workers(), first_row, have_first, &rows);
    sketchgen::save_sketch(args->out, sketch, freq);
    if (!args->freq_out.empty()) sketchgen::save_frequencies(args->freq_out, freq);
    std::cout << "wrote " << args->out << ": count = " << sketch.count << ", m = " << args->m
              << ", fingerprint = " << sketch.omega_fingerprint << "\n";
  });
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string sketch_path;
  std::string out = "model.clgn";
  std::string report = "train_report.csv";
  int latent_dim = 10;
  std::string hidden = "10,10,10,10,10,10,10";
  double slope = 0.2;
  long long n_prime = 100000;
  long long batch_size = 1000;
  int epochs = 100;
  std::string optimizer = "adam";
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t seed = 0;
  bool resample = false;
  int checkpoint_every = 0;
};

void add_train(CLI::App& app) {
  auto args = std::make_shared<TrainArgs>();
  auto* c = app.add_subcommand("train", "Fit a generator network to a sketch");
  c->add_option("--sketch", args->sketch_path, "input sketch file")
      ->required()
      ->check(CLI::ExistingFile);
  c->add_option("-o,--out", args->out, "output checkpoint path")->capture_default_str();
  c->add_option("--report", args->report, "training trace CSV")->capture_default_str();
  c->add_option("--latent-dim", args->latent_dim, "latent dimension p")->capture_default_str();
  c->add_option("--hidden", args->hidden, "hidden widths, comma-separated")
      ->capture_default_str();
  c->add_option("--slope", args->slope, "leaky ReLU slope")->capture_default_str();
  c->add_option("--n-prime", args->n_prime, "generated-sample pool size")
      ->capture_default_str();
  c->add_option("--batch-size", args->batch_size, "minibatch size")->capture_default_str();
  c->add_option("--epochs", args->epochs, "training epochs")->capture_default_str();
  c->add_option("--optimizer", args->optimizer, "adam | sgd")->capture_default_str();
  c->add_option("--lr", args->lr, "learning rate")->capture_default_str();
  c->add_option("--beta1", args->beta1, "Adam beta1")->capture_default_str();
  c->add_option("--beta2", args->beta2, "Adam beta2")->capture_default_str();
  c->add_option("--eps", args->eps, "Adam epsilon")->capture_default_str();
  c->add_option("--seed", args->seed, "master training seed");
  c->add_flag("--resample-latents", args->resample, "redraw the latent pool every epoch");
  c->add_option("--checkpoint-every", args->checkpoint_every,
                "write the checkpoint every k epochs (0 = only at the end)")
      ->capture_default_str();
  c->callback([args] {
    const auto bundle = sketchgen::load_sketch(args->sketch_path);
    const auto freq = bundle.regenerate_frequencies();

    sketchgen::Architecture arch;
    arch.latent_dim = args->latent_dim;
    arch.hidden = parse_widths(args->hidden);
    arch.out_dim = freq.dim();
    arch.leaky_slope = args->slope;

    sketchgen::TrainConfig cfg;
    cfg.n_prime = args->n_prime;
    cfg.batch_size = args->batch_size;
    cfg.epochs = args->epochs;
    if (args->optimizer == "adam")
      cfg.optimizer = sketchgen::Optimizer::Adam;
    else if (args->optimizer == "sgd")
      cfg.optimizer = sketchgen::Optimizer::SGD;
    else
      throw std::invalid_argument("unknown optimizer '" + args->optimizer + "'");
    cfg.learning_rate = args->lr;
    cfg.adam_beta1 = args->beta1;
    cfg.adam_beta2 = args->beta2;
    cfg.adam_eps = args->eps;
    cfg.seed = args->seed;
    cfg.resample_latents = args->resample;

    std::cout << "effective configuration:\n"
              << "  sketch = " << args->sketch_path << "\n"
              << "  sketch.count = " << bundle.sketch.count << "\n"
              << "  sketch.fingerprint = " << bundle.sketch.omega_fingerprint << "\n"
              << "  law = " << law_name(bundle.law.kind) << "\n"
              << "  sigma2 = " << bundle.law.sigma2 << "\n"
              << "  m = " << bundle.m << "\n"
              << "  d = " << freq.dim() << "\n"
              << "  latent_dim = " << arch.latent_dim << "\n"
              << "  hidden = " << args->hidden << "\n"
              << "  slope = " << arch.leaky_slope << "\n"
              << "  n_prime = " << cfg.n_prime << "\n"
              << "  batch_size = " << cfg.batch_size << "\n"
              << "  epochs = " << cfg.epochs << "\n"
              << "  optimizer = " << args->optimizer << "\n"
              << "  lr = " << cfg.learning_rate << "\n"
              << "  beta1 = " << cfg.adam_beta1 << "\n"
              << "  beta2 = " << cfg.adam_beta2 << "\n"
              << "  eps = " << cfg.adam_eps << "\n"
              << "  seed = " << cfg.seed << "\n"
              << "  resample_latents = " << (cfg.resample_latents ? "true" : "false") << "\n"
              << "  checkpoint_every = " << args->checkpoint_every << "\n";

    sketchgen::EpochCallback on_epoch;
    if (args->checkpoint_every > 0) {
      const std::string path = args->out;
      const int every = args->checkpoint_every;
      on_epoch = [path, every](int epoch, const sketchgen::GeneratorParams& params,
                               const sketchgen::TrainReport& report) {
        if (epoch % every == 0) sketchgen::save_checkpoint(path, params);
        std::cout << "epoch " << epoch << ": loss = " << report.trace.back().loss << "\n";
      };
    } else {
      on_epoch = [](int epoch, const sketchgen::GeneratorParams&,
                    const sketchgen::TrainReport& report) {
        if (epoch % 50 == 0)
          std::cout << "epoch " << epoch << ": loss = " << report.trace.back().loss << "\n";
      };
    }

    const auto result = sketchgen::train(bundle.sketch, freq, arch, cfg, on_epoch);
    sketchgen::save_checkpoint(args->out, result.params);
    sketchgen::save_report_csv(args->report, result.report);
    const double final_loss =
        result.report.trace.empty() ? result.report.initial_loss : result.report.trace.back().loss;
    std::cout << "wrote " << args->out << " and " << args->report
              << ": initial loss = " << result.report.initial_loss
              << ", final loss = " << final_loss << "\n";
  });
}

// ---------------------------------------------------------------- generate

void add_generate(CLI::App& app) {
  struct Args {
    std::string ckpt;
    long long n = 50000;
    std::uint64_t seed = 0;
    std::string out = "generated.csv";
  };
  auto args = std::make_shared<Args>();
  auto* c = app.add_subcommand("generate", "Sample from a trained generator");
  c->add_option("--ckpt", args->ckpt, "checkpoint file")->required()->check(CLI::ExistingFile);
  c->add_option("--n", args->n, "number of samples")->capture_default_str();
  c->add_option("--seed", args->seed, "latent seed");
  c->add_option("-o,--out", args->out, "output CSV path")->capture_default_str();
  c->callback([args] {
    const auto params = sketchgen::load_checkpoint(args->ckpt);
    const auto latents =
        sketchgen::draw_latents(params.arch.latent_dim, args->n, args->seed);
    const Eigen::MatrixXd samples = sketchgen::forward_batch(params, latents.Z);
    sketchgen::save_samples_csv(args->out, samples);
    std::cout << "wrote " << args->out << ": n = " << samples.rows()
              << ", d = " << samples.cols() << "\n";
  });
}

// ---------------------------------------------------------------- hist

struct HistArgs {
  int bins = 64;
  double x_min = -1.5, x_max = 1.5, y_min = -1.5, y_max = 1.5;
};

void add_hist_flags(CLI::App* c, HistArgs& args) {
  c->add_option("--bins", args.bins, "bins per axis")->capture_default_str();
  c->add_option("--xmin", args.x_min, "")->capture_default_str();
  c->add_option("--xmax", args.x_max, "")->capture_default_str();
  c->add_option("--ymin", args.y_min, "")->capture_default_str();
  c->add_option("--ymax", args.y_max, "")->capture_default_str();
}

sketchgen::HistogramRange to_range(const HistArgs& args) {
  return {args.x_min, args.x_max, args.y_min, args.y_max};
}

void add_hist(CLI::App& app) {
  struct Args : HistArgs {
    std::string in;
    std::string out = "hist.csv";
    std::string pgm;
  };
  auto args = std::make_shared<Args>();
  auto* c = app.add_subcommand("hist", "Histogram a 2-D sample CSV");
  c->add_option("--in", args->in, "input samples CSV")->required()->check(CLI::ExistingFile);
  add_hist_flags(c, *args);
  c->add_option("-o,--out", args->out, "output count-grid CSV")->capture_default_str();
  c->add_option("--pgm", args->pgm, "also write a P2 PGM rendering");
  c->callback([args] {
    const auto samples = sketchgen::load_samples_csv(args->in);
    const auto h = sketchgen::histogram2d(samples, args->bins, args->bins, to_range(*args));
    sketchgen::save_histogram_csv(args->out, h);
    if (!args->pgm.empty()) sketchgen::save_histogram_pgm(args->pgm, h);
    std::cout << "wrote " << args->out << ": total = " << h.total
              << ", overflow = " << h.overflow << "\n";
  });
}

void add_hist_compare(CLI::App& app) {
  struct Args : HistArgs {
    std::string a, b;
  };
  auto args = std::make_shared<Args>();
  auto* c = app.add_subcommand("hist-compare",
                               "Total-variation distance between two sample CSVs");
  c->add_option("--a", args->a, "first samples CSV")->required()->check(CLI::ExistingFile);
  c->add_option("--b", args->b, "second samples CSV")->required()->check(CLI::ExistingFile);
  add_hist_flags(c, *args);
  c->callback([args] {
    const auto range = to_range(*args);
    const auto ha =
        sketchgen::histogram2d(sketchgen::load_samples_csv(args->a), args->bins, args->bins, range);
    const auto hb =
        sketchgen::histogram2d(sketchgen::load_samples_csv(args->b), args->bins, args->bins, range);
    std::cout << "tv = " << sketchgen::tv_distance(ha, hb) << "\n";
  });
}

// ---------------------------------------------------------------- oracle

void add_oracle(CLI::App& app) {
  struct Args {
    std::string x, y;
    double sigma2 = 1.0;
    int m = 4096;
    int seeds = 20;
    std::string timing_sizes = "500,1000,2000,4000";
  };
  auto args = std::make_shared<Args>();
  auto* c = app.add_subcommand(
      "oracle", "Compare sketch distance against the exact MMD and time both paths");
  c->add_option("--x", args->x, "first samples CSV")->required()->check(CLI::ExistingFile);
  c->add_option("--y", args->y, "second samples CSV")->required()->check(CLI::ExistingFile);
  c->add_option("--sigma2", args->sigma2, "Gaussian law/kernel scale")->capture_default_str();
  c->add_option("--m", args->m, "sketch size")->capture_default_str();
  c->add_option("--seeds", args->seeds, "number of frequency seeds")->capture_default_str();
  c->add_option("--timing-sizes", args->timing_sizes,
                "comma-separated subset sizes for the timing table")
      ->capture_default_str();
  c->callback([args] {
    const Eigen::MatrixXd X = sketchgen::load_samples_csv(args->x);
    const Eigen::MatrixXd Y = sketchgen::load_samples_csv(args->y);
    if (X.rows() == 0 || Y.rows() == 0)
      throw sketchgen::FormatError("oracle: empty sample set");
    if (X.cols() != Y.cols()) throw sketchgen::FormatError("oracle: dimension mismatch");

    sketchgen::KernelSpec kernel{sketchgen::KernelKind::GaussianRBF, args->sigma2};
    sketchgen::FrequencyLaw law{sketchgen::FrequencyKind::Gaussian, args->sigma2,
                                static_cast<int>(X.cols())};

    const double mmd2 = sketchgen::mmd_squared_exact(X, Y, kernel);
    std::cout << "exact mmd2 = " << mmd2 << "\n";
    std::vector<double> gaps;
    for (int s = 0; s < args->seeds; ++s) {
      const auto freq = sketchgen::draw_frequencies(law, args->m, 1000 + s);
      const double dist2 = (sketchgen::sketch_dataset(X, freq).z -
                            sketchgen::sketch_dataset(Y, freq).z)
                               .squaredNorm();
      const double gap = std::abs(dist2 - mmd2);
      gaps.push_back(gap);
      std::cout << "seed " << 1000 + s << ": sketch dist2 = " << dist2 << ", gap = " << gap
                << "\n";
    }
    std::sort(gaps.begin(), gaps.end());
    const double median = gaps[gaps.size() / 2];
    std::cout << "median gap = " << median << ", median relative gap = "
              << (mmd2 > 0 ? median / mmd2 : 0.0) << "\n";

    std::cout << "timing (ms):\n";
    const auto freq = sketchgen::draw_frequencies(law, args->m, 999);
    for (const auto n : parse_sizes(args->timing_sizes)) {
      if (n > X.rows() || n > Y.rows()) continue;
      const Eigen::MatrixXd Xn = X.topRows(n);
      const Eigen::MatrixXd Yn = Y.topRows(n);
      auto t0 = Clock::now();
      volatile double sink = sketchgen::mmd_squared_exact(Xn, Yn, kernel);
      const double exact_ms = ms_since(t0);
      t0 = Clock::now();
      const auto zx = sketchgen::sketch_dataset(Xn, freq);
      const auto zy = sketchgen::sketch_dataset(Yn, freq);
      const double sketch_build_ms = ms_since(t0);
      t0 = Clock::now();
      for (int rep = 0; rep < 100; ++rep) sink = (zx.z - zy.z).squaredNorm();
      const double sketch_eval_ms = ms_since(t0) / 100.0;
      (void)sink;
      std::cout << "  n = " << n << ": exact = " << exact_ms
                << ", sketch build = " << sketch_build_ms
                << ", sketch eval = " << sketch_eval_ms << "\n";
    }
  });
}

// ---------------------------------------------------------------- gradcheck

void add_gradcheck(CLI::App& app) {
  struct Args {
    int latent_dim = 10;
    std::string hidden = "10,10,10,10,10,10,10";
    double slope = 0.2;
    int out_dim = 2;
    int m = 64;
    long long batch = 8;
    double sigma2 = 1.0;
    std::uint64_t seed = 0;
    double step = 1e-6;
    double tol = 1e-4;
  };
  auto args = std::make_shared<Args>();
  auto* c = app.add_subcommand(
      "gradcheck", "Check the analytic cost gradient against finite differences");
  c->add_option("--latent-dim", args->latent_dim, "latent dimension")->capture_default_str();
  c->add_option("--hidden", args->hidden, "hidden widths, comma-separated")
      ->capture_default_str();
  c->add_option("--slope", args->slope, "leaky ReLU slope")->capture_default_str();
  c->add_option("--out-dim", args->out_dim, "data dimension")->capture_default_str();
  c->add_option("--m", args->m, "sketch size")->capture_default_str();
  c->add_option("--batch-size", args->batch, "latent batch size")->capture_default_str();
  c->add_option("--sigma2", args->sigma2, "Gaussian frequency-law scale")
      ->capture_default_str();
  c->add_option("--seed", args->seed, "seed for the random instance");
  c->add_option("--step", args->step, "central-difference step")->capture_default_str();
  c->add_option("--tol", args->tol, "max relative error accepted")->capture_default_str();
  c->callback([args] {
    sketchgen::Architecture arch;
    arch.latent_dim = args->latent_dim;
    arch.hidden = parse_widths(args->hidden);
    arch.out_dim = args->out_dim;
    arch.leaky_slope = args->slope;

    sketchgen::FrequencyLaw law{sketchgen::FrequencyKind::Gaussian, args->sigma2,
                                args->out_dim};
    const auto freq =
        sketchgen::draw_frequencies(law, args->m, sketchgen::mix_seed(args->seed, 101));

    // random target data; any sketch works for checking the gradient
    sketchgen::Rng data_rng(sketchgen::mix_seed(args->seed, 102));
    Eigen::MatrixXd X(64, args->out_dim);
    for (Eigen::Index i = 0; i < X.rows(); ++i)
      for (Eigen::Index j = 0; j < X.cols(); ++j) X(i, j) = data_rng.normal();
    const auto target = sketchgen::sketch_dataset(X, freq);

    auto params = sketchgen::init_params(arch, sketchgen::mix_seed(args->seed, 103));
    const auto latents = sketchgen::draw_latents(arch.latent_dim, args->batch,
                                                 sketchgen::mix_seed(args->seed, 104));

    const Eigen::VectorXd analytic =
        sketchgen::sketch_matching_gradient(params, target, latents.Z, freq);
    Eigen::VectorXd theta = sketchgen::flatten_params(params);

    const double floor = 1e-6 * std::max(1.0, analytic.cwiseAbs().maxCoeff());
    double max_rel = 0.0;
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
      const double saved = theta[i];
      theta[i] = saved + args->step;
      sketchgen::assign_from_flat(params, theta);
      const double up = sketchgen::sketch_matching_cost(params, target, latents.Z, freq);
      theta[i] = saved - args->step;
      sketchgen::assign_from_flat(params, theta);
      const double down = sketchgen::sketch_matching_cost(params, target, latents.Z, freq);
      theta[i] = saved;
      const double fd = (up - down) / (2.0 * args->step);
      const double rel =
          std::abs(fd - analytic[i]) / std::max({std::abs(fd), std::abs(analytic[i]), floor});
      max_rel = std::max(max_rel, rel);
    }
    sketchgen::assign_from_flat(params, theta);

    std::cout << "parameters = " << theta.size() << ", max relative error = " << max_rel
              << " (tolerance " << args->tol << ")\n";
    if (!(max_rel <= args->tol))
      throw sketchgen::NumericFailure("gradcheck: max relative error above tolerance");
    std::cout << "gradcheck passed\n";
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Compressive sketch-and-generate pipeline for 2-D datasets"};
  app.require_subcommand(1);
  app.set_config("--config", "", "read defaults from an INI config file");
  app.get_config_formatter_base()->valueSeparator('=');

  add_gen(app);
  add_sketch(app);
  add_train(app);
  add_generate(app);
  add_hist(app);
  add_hist_compare(app);
  add_oracle(app);
  add_gradcheck(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  } catch (const sketchgen::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const sketchgen::FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const sketchgen::IncompatibleSketchError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const sketchgen::TrainingDivergedError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const sketchgen::NumericFailure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
