#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "drpn/annotations.hpp"
#include "drpn/checkpoint.hpp"
#include "drpn/cost.hpp"
#include "drpn/layer.hpp"
#include "drpn/synthetic.hpp"
#include "drpn/toynet.hpp"
#include "drpn/verify.hpp"

namespace {

struct GlobalOpts {
  std::uint64_t seed = 42;
  double tol = 1e-9;
  bool quiet = false;
};

int run_verify(const GlobalOpts& g) {
  const auto results = drpn::verify::run_all(g.seed, g.tol);
  std::size_t passed = 0;
  for (const auto& r : results) {
    if (r.passed) ++passed;
    if (!g.quiet || !r.passed)
      std::printf("[%s] %s: %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(),
                  r.detail.c_str());
  }
  if (passed == results.size()) {
    std::printf("all %zu checks passed\n", results.size());
    return 0;
  }
  std::printf("%zu/%zu checks passed\n", passed, results.size());
  return 1;
}

int run_bench(const GlobalOpts& g, int cin, int cout_, int hw, int reps,
              const std::string& csv_path) {
  const drpn::DrpnLayer layer = drpn::DrpnLayer::random(cin, cout_, g.seed);
  std::mt19937_64 rng(g.seed + 1);
  drpn::Tensor4 x(1, cin, hw, hw);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (double& v : x.data) v = dist(rng);

  const auto reports = drpn::bench::time_modes(layer, x, reps);
  if (!g.quiet) std::fputs(drpn::bench::render_cost_table(reports).c_str(), stdout);
  if (!csv_path.empty()) {
    std::ofstream out(csv_path);
    if (!out) {
      std::fprintf(stderr, "cannot open '%s' for writing\n", csv_path.c_str());
      return 1;
    }
    drpn::bench::write_cost_csv(reports, out);
  } else if (g.quiet) {
    drpn::bench::write_cost_csv(reports, std::cout);
  }
  return 0;
}

int run_train_toy(const GlobalOpts& g, int epochs, int samples, const std::string& out_path) {
  const auto data = drpn::toy::generate_dataset(drpn::toy::default_task(samples, g.seed));
  drpn::toy::ToyNet net = drpn::toy::ToyNet::init(3, g.seed);
  drpn::toy::TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.seed = g.seed;

  const auto result = drpn::toy::train(net, data, cfg);
  if (!g.quiet) {
    for (std::size_t e = 0; e < result.epoch_loss.size(); ++e)
      std::printf("epoch %2zu  loss %.6f\n", e + 1, result.epoch_loss[e]);
    std::printf("train accuracy %.4f\n", result.train_accuracy);
  }
  drpn::io::save_checkpoint_file(drpn::io::pack_toynet(net), out_path);
  if (!g.quiet) std::printf("saved checkpoint to %s\n", out_path.c_str());
  return 0;
}

int run_probe(const GlobalOpts& g, const std::string& ckpt_path, int frames, int s_min,
              int s_max, const std::string& out_path) {
  const drpn::toy::ToyNet net =
      drpn::io::unpack_toynet(drpn::io::load_checkpoint_file(ckpt_path));
  const auto task = drpn::toy::default_task(0, g.seed);

  std::vector<drpn::toy::SyntheticScene> sweep;
  for (int i = 0; i < frames; ++i) {
    const double t = frames == 1 ? 0.0 : static_cast<double>(i) / (frames - 1);
    const int s = s_min + static_cast<int>(std::lround(t * (s_max - s_min)));
    sweep.push_back(drpn::toy::make_centered_scene(task.h, task.w, s, task.bucket_edges));
  }
  const auto rows = drpn::toy::probe_branch_weights(net, sweep);

  std::ofstream out(out_path);
  if (!out) {
    std::fprintf(stderr, "cannot open '%s' for writing\n", out_path.c_str());
    return 1;
  }
  drpn::toy::write_probe_csv(rows, out);
  if (!g.quiet) std::printf("wrote %zu probe rows to %s\n", rows.size(), out_path.c_str());
  return 0;
}

int run_stats(const GlobalOpts& g, const std::string& annotations_path,
              const std::string& out_path) {
  const auto stats = drpn::io::annotation_stats_from_file(annotations_path);
  if (!g.quiet) std::fputs(drpn::io::render_stats_report(stats).c_str(), stdout);
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    if (!out) {
      std::fprintf(stderr, "cannot open '%s' for writing\n", out_path.c_str());
      return 1;
    }
    drpn::io::write_ratio_csv(stats, out);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynamic multi-branch convolution layer: verification, benchmarks, "
               "toy training, and annotation statistics"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOpts g;
  app.add_option("--seed", g.seed, "RNG seed")->capture_default_str();
  app.add_option("--tol", g.tol, "verification tolerance")->capture_default_str();
  app.add_flag("--quiet", g.quiet, "suppress informational output");

  auto* verify_cmd =
      app.add_subcommand("verify", "run fold-equivalence, special-case, and gradient suites");

  int cin = 32, cout_ = 32, hw = 128, reps = 9;
  std::string bench_csv;
  auto* bench_cmd = app.add_subcommand("bench", "cost reports for the three forward modes");
  bench_cmd->add_option("--cin", cin, "input channels")->capture_default_str();
  bench_cmd->add_option("--cout", cout_, "output channels")->capture_default_str();
  bench_cmd->add_option("--hw", hw, "spatial extent")->capture_default_str();
  bench_cmd->add_option("--reps", reps, "timing repetitions")->capture_default_str();
  bench_cmd->add_option("--out", bench_csv, "write CSV report here");

  int epochs = 24, samples = 2000;
  std::string ckpt_out = "toynet.ckpt";
  auto* train_cmd = app.add_subcommand("train-toy", "train the size classifier");
  train_cmd->add_option("--epochs", epochs, "training epochs")->capture_default_str();
  train_cmd->add_option("--samples", samples, "dataset size")->capture_default_str();
  train_cmd->add_option("--out", ckpt_out, "checkpoint path")->capture_default_str();

  std::string ckpt_in;
  std::string probe_csv = "probe.csv";
  int frames = 26, s_min = 3, s_max = 28;
  auto* probe_cmd = app.add_subcommand("probe", "branch-weight sweep over target sizes");
  probe_cmd->add_option("--ckpt", ckpt_in, "checkpoint path")->required();
  probe_cmd->add_option("--frames", frames, "sweep frame count")->capture_default_str();
  probe_cmd->add_option("--smin", s_min, "smallest target size")->capture_default_str();
  probe_cmd->add_option("--smax", s_max, "largest target size")->capture_default_str();
  probe_cmd->add_option("--out", probe_csv, "CSV path")->capture_default_str();

  std::string annotations_path, stats_csv;
  auto* stats_cmd = app.add_subcommand("stats", "box-size statistics from annotations");
  stats_cmd->add_option("--annotations", annotations_path, "annotation JSON path")->required();
  stats_cmd->add_option("--out", stats_csv, "ratio CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*verify_cmd) return run_verify(g);
    if (*bench_cmd) return run_bench(g, cin, cout_, hw, reps, bench_csv);
    if (*train_cmd) return run_train_toy(g, epochs, samples, ckpt_out);
    if (*probe_cmd) return run_probe(g, ckpt_in, frames, s_min, s_max, probe_csv);
    if (*stats_cmd) return run_stats(g, annotations_path, stats_csv);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
