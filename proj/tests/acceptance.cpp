// Acceptance harness: exercises the pipeline end to end and prints one
// PASS/FAIL line per criterion. Exit status is the number of failures.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "sketchgen/sketchgen.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

sketchgen::Architecture reference_arch() {
  return {10, {10, 10, 10, 10, 10, 10, 10}, 2, 0.2};
}

// ---------------------------------------------------------------------------
// 1. The sketched distance tracks the exact kernel distance as m grows.

Outcome criterion1() {
  const auto t0 = Clock::now();
  const auto X = sketchgen::gen_circle(256, 1.0, 0.05, 1);
  const auto Y = sketchgen::gen_spiral(256, 0.02, 2);
  const sketchgen::KernelSpec kernel{sketchgen::KernelKind::GaussianRBF, 1.0};
  const sketchgen::FrequencyLaw law{sketchgen::FrequencyKind::Gaussian, 1.0, 2};
  const double mmd2 = sketchgen::mmd_squared_exact(X, Y, kernel);

  const int ms[3] = {1 << 6, 1 << 10, 1 << 14};
  double med[3] = {0, 0, 0};
  for (int k = 0; k < 3; ++k) {
    std::vector<double> rel;
    for (int seed = 1; seed <= 20; ++seed) {
      const auto freq = sketchgen::draw_frequencies(law, ms[k], seed);
      rel.push_back(sketchgen::sketch_mmd_gap(X, Y, freq, kernel) / mmd2);
    }
    med[k] = median(rel);
  }
  const double elapsed = seconds_since(t0);

  Outcome out;
  out.pass = med[2] <= 0.05 && med[1] < med[0] && med[2] < med[1] && elapsed <= 30.0;
  out.detail = "median relative gap " + fmt(med[0]) + " -> " + fmt(med[1]) + " -> " +
               fmt(med[2]) + " over m = 64 -> 1024 -> 16384, budget 0.05; " +
               fmt(elapsed) + " s of 30 s";
  return out;
}

// ---------------------------------------------------------------------------
// 2. The analytic gradient matches central finite differences.

Outcome criterion2() {
  const auto t0 = Clock::now();
  const auto arch = reference_arch();
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const sketchgen::FrequencyLaw law{sketchgen::FrequencyKind::Gaussian, 1.0, 2};
    const auto freq = sketchgen::draw_frequencies(law, 64, sketchgen::mix_seed(seed, 1));
    sketchgen::Rng data_rng(sketchgen::mix_seed(seed, 2));
    Eigen::MatrixXd data(64, 2);
    for (Eigen::Index i = 0; i < data.rows(); ++i)
      for (Eigen::Index j = 0; j < 2; ++j) data(i, j) = data_rng.normal();
    const auto target = sketchgen::sketch_dataset(data, freq);
    auto params = sketchgen::init_params(arch, sketchgen::mix_seed(seed, 3));
    const auto Z = sketchgen::draw_latents(arch.latent_dim, 8, sketchgen::mix_seed(seed, 4));

    const Eigen::VectorXd analytic =
        sketchgen::sketch_matching_gradient(params, target, Z.Z, freq);
    Eigen::VectorXd theta = sketchgen::flatten_params(params);
    const double step = 1e-6;
    const double floor = 1e-6 * std::max(1.0, analytic.cwiseAbs().maxCoeff());
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
      const double saved = theta[i];
      theta[i] = saved + step;
      sketchgen::assign_from_flat(params, theta);
      const double up = sketchgen::sketch_matching_cost(params, target, Z.Z, freq);
      theta[i] = saved - step;
      sketchgen::assign_from_flat(params, theta);
      const double down = sketchgen::sketch_matching_cost(params, target, Z.Z, freq);
      theta[i] = saved;
      const double fd = (up - down) / (2.0 * step);
      worst = std::max(worst, std::abs(fd - analytic[i]) /
                                  std::max({std::abs(fd), std::abs(analytic[i]), floor}));
    }
    sketchgen::assign_from_flat(params, theta);
  }
  const double elapsed = seconds_since(t0);

  Outcome out;
  out.pass = worst <= 1e-4 && elapsed <= 10.0;
  out.detail = "max relative error " + fmt(worst) + " over 5 seeds x 792 parameters, budget 1e-4; " +
               fmt(elapsed) + " s of 10 s";
  return out;
}

// ---------------------------------------------------------------------------
// 3. After sketching, iteration cost no longer depends on the dataset size.

Outcome criterion3() {
  const sketchgen::FrequencyLaw law{sketchgen::FrequencyKind::Gaussian, 1.0, 2};
  const auto freq = sketchgen::draw_frequencies(law, 512, 40);
  const auto small_data = sketchgen::gen_circle(1000, 1.0, 0.05, 41);
  const auto large_data = sketchgen::gen_circle(100000, 1.0, 0.05, 42);
  const auto small_sketch = sketchgen::sketch_dataset(small_data, freq);
  const auto large_sketch = sketchgen::sketch_dataset(large_data, freq);

  const auto arch = reference_arch();
  sketchgen::TrainConfig cfg;
  cfg.n_prime = 4000;
  cfg.batch_size = 1000;
  cfg.epochs = 3;

  auto per_iter = [&](const sketchgen::Sketch& target, std::uint64_t seed) {
    std::vector<double> t;
    for (int rep = 0; rep < 5; ++rep) {
      auto run_cfg = cfg;
      run_cfg.seed = seed + static_cast<std::uint64_t>(rep);
      const auto t0 = Clock::now();
      const auto res = sketchgen::train(target, freq, arch, run_cfg);
      t.push_back(seconds_since(t0) /
                  static_cast<double>(res.report.trace.back().iteration));
    }
    return median(t);
  };
  const double t_small = per_iter(small_sketch, 43);
  const double t_large = per_iter(large_sketch, 44);
  const double drift = std::abs(t_large - t_small) / t_small;

  // the exact squared distance scales with n^2, the sketched one with m only
  const auto Xbase = sketchgen::gen_circle(4000, 1.0, 0.05, 45);
  const auto Ybase = sketchgen::gen_spiral(4000, 0.02, 46);
  const sketchgen::KernelSpec kernel{sketchgen::KernelKind::GaussianRBF, 1.0};
  auto time_exact = [&](Eigen::Index n) {
    double best = 1e300;
    for (int rep = 0; rep < 3; ++rep) {
      const auto t0 = Clock::now();
      volatile double v = sketchgen::mmd_squared_exact(Xbase.topRows(n), Ybase.topRows(n), kernel);
      (void)v;
      best = std::min(best, seconds_since(t0));
    }
    return best;
  };
  auto time_sketch_eval = [&](Eigen::Index n) {
    const auto zx = sketchgen::sketch_dataset(Xbase.topRows(n), freq);
    const auto zy = sketchgen::sketch_dataset(Ybase.topRows(n), freq);
    const int reps = 20000;
    double acc = 0.0;
    const auto t0 = Clock::now();
    for (int rep = 0; rep < reps; ++rep) acc += (zx.z - zy.z).squaredNorm();
    const double elapsed = seconds_since(t0);
    volatile double v = acc;
    (void)v;
    return elapsed / reps;
  };
  const double exact_ratio = time_exact(4000) / time_exact(500);
  const double eval_ratio = time_sketch_eval(4000) / time_sketch_eval(500);

  Outcome out;
  out.pass = drift <= 0.15 && exact_ratio >= 16.0 && eval_ratio <= 2.0;
  out.detail = "per-iteration " + fmt(t_small * 1e3) + " ms at n=1e3 vs " + fmt(t_large * 1e3) +
               " ms at n=1e5 (drift " + fmt(100 * drift) + "%, budget 15%); exact-distance time x" +
               fmt(exact_ratio) + " for n x8 (superlinear >= x16), sketch-eval time x" +
               fmt(eval_ratio) + " (flat <= x2)";
  return out;
}

// ---------------------------------------------------------------------------
// 4 and 5. End-to-end recovery of the toy distributions.

struct TrainedRun {
  double initial_loss = 0.0;
  double final_loss = 0.0;
  Eigen::MatrixXd samples;  // 50000 draws from the trained generator
  double elapsed = 0.0;
};

TrainedRun run_pipeline(const Eigen::MatrixXd& data, std::uint64_t freq_seed,
                        std::uint64_t train_seed, std::uint64_t sample_seed) {
  const auto t0 = Clock::now();
  const sketchgen::FrequencyLaw law{sketchgen::FrequencyKind::FoldedGaussian, 1000.0, 2};
  const auto freq = sketchgen::draw_frequencies(law, 1000, freq_seed);
  const auto target = sketchgen::sketch_dataset(data, freq);

  sketchgen::TrainConfig cfg;
  cfg.n_prime = 10000;
  cfg.batch_size = 1000;
  cfg.epochs = 500;
  cfg.seed = train_seed;
  const auto res = sketchgen::train(target, freq, reference_arch(), cfg);

  TrainedRun run;
  run.initial_loss = res.report.initial_loss;
  run.final_loss = res.report.trace.back().loss;
  const auto Z = sketchgen::draw_latents(10, 50000, sample_seed);
  run.samples = sketchgen::forward_batch(res.params, Z.Z);
  run.elapsed = seconds_since(t0);
  return run;
}

Outcome criterion4() {
  const auto data = sketchgen::gen_circle(10000, 1.0, 0.05, 11);
  const auto run = run_pipeline(data, 12, 13, 14);

  Eigen::Index on_ring = 0;
  for (Eigen::Index i = 0; i < run.samples.rows(); ++i)
    if (std::abs(run.samples.row(i).norm() - 1.0) <= 0.15) ++on_ring;
  const double frac = static_cast<double>(on_ring) / static_cast<double>(run.samples.rows());
  const double ratio = run.final_loss / run.initial_loss;

  Outcome out;
  out.pass = ratio <= 0.1 && frac >= 0.85 && run.elapsed <= 600.0;
  out.detail = "cost ratio " + fmt(ratio) + " (budget 0.1), ring fraction " + fmt(frac) +
               " (budget 0.85); " + fmt(run.elapsed) + " s of 600 s";
  return out;
}

Outcome criterion5() {
  Outcome out;
  out.pass = true;
  std::string warning;

  struct Job {
    const char* name;
    Eigen::MatrixXd data;
    Eigen::MatrixXd fresh;
    std::uint64_t seeds[3];
  };
  std::vector<Job> jobs;
  jobs.push_back({"spiral", sketchgen::gen_spiral(10000, 0.02, 21),
                  sketchgen::gen_spiral(50000, 0.02, 24), {22, 23, 25}});
  jobs.push_back({"gmm6", sketchgen::gen_gmm6(10000, 31),
                  sketchgen::gen_gmm6(50000, 34), {32, 33, 35}});

  for (auto& job : jobs) {
    const auto run = run_pipeline(job.data, job.seeds[0], job.seeds[1], job.seeds[2]);
    const double ratio = run.final_loss / run.initial_loss;
    const auto h_true = sketchgen::histogram2d(job.fresh, 64, 64, {});
    const auto h_gen = sketchgen::histogram2d(run.samples, 64, 64, {});
    const double tv = sketchgen::tv_distance(h_true, h_gen);

    if (!(ratio <= 0.1) || run.elapsed > 600.0) out.pass = false;
    if (tv > 0.35)
      warning += std::string("; warning: ") + job.name + " tv " + fmt(tv) + " above 0.35";
    if (!out.detail.empty()) out.detail += ", ";
    out.detail += std::string(job.name) + " cost ratio " + fmt(ratio) + " (budget 0.1), tv " +
                  fmt(tv) + ", " + fmt(run.elapsed) + " s";
  }
  out.detail += warning;
  return out;
}

// ---------------------------------------------------------------------------
// 6. Oracle identities tying the sketched objective to the exact kernel.

Outcome criterion6() {
  bool pass = true;
  std::string detail;

  double worst_identity = 0.0;
  for (std::uint64_t trial = 0; trial < 10; ++trial) {
    const sketchgen::KernelSpec kernel{sketchgen::KernelKind::GaussianRBF,
                                       trial % 2 == 0 ? 1.0 : 10.0};
    sketchgen::Rng rng(700 + trial);
    Eigen::MatrixXd X(30, 2), G(30, 2);
    for (Eigen::Index i = 0; i < 30; ++i)
      for (Eigen::Index j = 0; j < 2; ++j) {
        X(i, j) = rng.normal();
        G(i, j) = rng.normal();
      }
    const double lhs =
        sketchgen::mmd_gn_cost_exact(X, G, kernel) + sketchgen::mean_self_kernel(X, kernel);
    const double rhs = sketchgen::mmd_squared_exact(X, G, kernel);
    worst_identity =
        std::max(worst_identity, std::abs(lhs - rhs) / std::max(1.0, std::abs(rhs)));
  }
  if (worst_identity > 1e-12) pass = false;
  detail += "cost identity drift " + fmt(worst_identity) + " (budget 1e-12)";

  const sketchgen::FrequencyLaw law{sketchgen::FrequencyKind::Gaussian, 1.0, 2};
  const auto freq = sketchgen::draw_frequencies(law, 256, 60);
  const auto whole = sketchgen::gen_gmm6(4000, 61);
  const auto mono = sketchgen::sketch_dataset(whole, freq);
  const auto merged = sketchgen::merge(
      sketchgen::merge(sketchgen::sketch_dataset(whole.topRows(1000), freq),
                       sketchgen::sketch_dataset(whole.middleRows(1000, 1300), freq)),
      sketchgen::sketch_dataset(whole.bottomRows(1700), freq));
  const double merge_gap = (merged.z - mono.z).norm();
  if (merge_gap > 1e-12) pass = false;
  detail += ", merge vs monolithic " + fmt(merge_gap) + " (budget 1e-12)";

  const int m = 10000;
  int worst_failures = 0;
  for (const double r : {0.0, 0.5, 1.0, 2.0, 4.0}) {
    Eigen::Vector2d u(r, 0.0);
    int failures = 0;
    for (int seed = 0; seed < 20; ++seed) {
      const auto res = sketchgen::bochner_check(law, u, m, seed);
      if (std::abs(res.estimate - *res.closed_form) > 3.0 / std::sqrt(double(m))) ++failures;
    }
    worst_failures = std::max(worst_failures, failures);
  }
  if (worst_failures > 1) pass = false;
  detail += ", Monte-Carlo duality worst-case " + std::to_string(worst_failures) +
            "/20 seeds outside 3 standard errors (budget 1)";

  Outcome out;
  out.pass = pass;
  out.detail = detail;
  return out;
}

// ---------------------------------------------------------------------------
// 7. All module invariant suites pass, within an overall time budget.

std::string g_suite_dir;

Outcome criterion7() {
  const char* suites[] = {"test_sketch", "test_kernel",   "test_generator", "test_trainer",
                          "test_datasets", "test_io",     "test_cli"};
  Outcome out;
  out.pass = true;
  double total = 0.0;
  for (const char* suite : suites) {
    const std::string path = g_suite_dir + "/" + suite;
    const auto t0 = Clock::now();
    const int status = std::system((path + " > /dev/null 2>&1").c_str());
    const double elapsed = seconds_since(t0);
    total += elapsed;
    const bool ok = status != -1 && WIFEXITED(status) && WEXITSTATUS(status) == 0;
    if (!ok) {
      out.pass = false;
      out.detail += std::string(suite) + " FAILED, ";
    }
  }
  if (total > 900.0) out.pass = false;
  out.detail += "7 suites in " + fmt(total) + " s of 900 s";
  return out;
}

}  // namespace

int main(int, char** argv) {
  const std::string self = argv[0];
  const auto slash = self.find_last_of('/');
  g_suite_dir = slash == std::string::npos ? "." : self.substr(0, slash);

  struct Entry {
    int id;
    const char* name;
    Outcome (*fn)();
  };
  const Entry entries[] = {
      {1, "sketched distance approximates the exact kernel distance", criterion1},
      {2, "analytic gradient matches finite differences", criterion2},
      {3, "iteration cost is independent of the original dataset size", criterion3},
      {4, "circle recovery: cost drop and ring mass", criterion4},
      {5, "spiral and gmm6 recovery: cost drop and histogram distance", criterion5},
      {6, "oracle identities hold", criterion6},
      {7, "module invariant suites pass in budget", criterion7},
  };

  int failures = 0;
  for (const auto& e : entries) {
    const Outcome out = e.fn();
    if (!out.pass) ++failures;
    std::printf("%s criterion %d: %s (%s)\n", out.pass ? "PASS" : "FAIL", e.id, e.name,
                out.detail.c_str());
    std::fflush(stdout);
  }
  return failures;
}
