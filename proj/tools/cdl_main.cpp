#include <cdl/datapipe.hpp>
#include <cdl/ksvd.hpp>
#include <cdl/learner.hpp>
#include <cdl/model_io.hpp>

#include <CLI11.hpp>

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace {

// Shortest round-trip decimal form, so identical runs write identical bytes.
std::string format_double(double v) {
  char buffer[64];
  const auto [end, ec] = std::to_chars(buffer, buffer + sizeof buffer, v);
  (void)ec;
  return std::string(buffer, end);
}

struct LearnFlags {
  std::string input;
  std::string input2;
  std::string output;
  std::string metrics;
  cdl::LearnConfig config;
  std::string schedule = "graduated";
  int patch_size = 8;
  int stride = 4;
  bool no_timing = false;

  void apply() {
    config.schedule = schedule == "constant" ? cdl::ScheduleMode::constant
                                             : cdl::ScheduleMode::graduated;
    config.measure_time = !no_timing;
  }
};

void add_learn_flags(CLI::App& cmd, LearnFlags& flags, bool coupled) {
  cmd.add_option("--input", flags.input, "input image (PGM) or dataset file")->required();
  if (coupled) {
    cmd.add_option("--input2", flags.input2, "second-space image or dataset file")->required();
  }
  cmd.add_option("--output", flags.output, "model file to write");
  cmd.add_option("--metrics", flags.metrics, "per-cycle metrics CSV to write");
  cmd.add_option("--cycles", flags.config.cycles, "learning cycles");
  cmd.add_option("--max-nnz", flags.config.max_nonzeros, "sparsity cap per signal");
  cmd.add_option("--eps", flags.config.error_threshold,
                 "squared-residual stopping threshold for the coder");
  cmd.add_option("--natoms", flags.config.natoms, "dictionary atoms");
  cmd.add_option("--schedule", flags.schedule, "sparsity schedule")
      ->check(CLI::IsMember({"graduated", "constant"}));
  cmd.add_option("--seed", flags.config.seed, "random seed");
  cmd.add_option("--patch-size", flags.patch_size, "patch side length for image inputs");
  cmd.add_option("--stride", flags.stride, "patch stride for image inputs");
  cmd.add_flag("--no-timing", flags.no_timing,
               "record zero wall times so repeated runs are byte-identical");
}

// Images become mean-centered patch datasets. Intensities are kept in [0,1]
// in memory, so patches are rescaled to 8-bit units first — the error
// threshold is calibrated for that scale.
cdl::Dataset patches_from_image(const cdl::Image& image, int patch_size, int stride) {
  cdl::Dataset patches = cdl::extract_patches(image, patch_size, stride);
  patches.signals *= 255.0;
  return cdl::mean_center(patches);
}

cdl::Dataset load_input(const std::string& path, int patch_size, int stride) {
  if (cdl::read_magic(path) == "CDLD") return cdl::load_dataset(path);
  return patches_from_image(cdl::read_pgm(path), patch_size, stride);
}

void write_metrics_csv(const std::string& path, const std::vector<cdl::CycleMetrics>& metrics) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "cycle,wall_time_s,avg_nnz,avg_error,limit\n";
  for (const auto& m : metrics) {
    out << m.cycle << "," << format_double(m.wall_time) << "," << format_double(m.avg_nonzeros)
        << "," << format_double(m.avg_error) << "," << m.limit << "\n";
  }
}

int cmd_synth(const std::string& mode, int m, int k, int n, int sparsity, std::uint64_t seed,
              const std::string& input, double sigma, int patch_size, int stride,
              const std::string& output) {
  if (mode == "synthetic") {
    const cdl::SynthCoupled synth = cdl::synth_coupled(m, k, n, sparsity, seed);
    cdl::save_dataset(synth.data1, output + "1.cdld");
    cdl::save_dataset(synth.data2, output + "2.cdld");
    cdl::CoupledModel truth;
    truth.dict1 = synth.dict1;
    truth.dict2 = synth.dict2;
    truth.code = synth.code;
    cdl::save_model(truth, output + "_truth.cdlm");
    return 0;
  }
  // blurpair: aligned patches of the image and of its blurred copy.
  const cdl::Image image = cdl::read_pgm(input);
  cdl::save_dataset(patches_from_image(image, patch_size, stride), output + "1.cdld");
  cdl::save_dataset(patches_from_image(cdl::gaussian_blur(image, sigma), patch_size, stride),
                    output + "2.cdld");
  return 0;
}

int cmd_learn(LearnFlags& flags, const std::string& method) {
  flags.apply();
  const cdl::Dataset data = load_input(flags.input, flags.patch_size, flags.stride);
  const cdl::CoupledModel model = method == "ksvd" ? cdl::learn_ksvd(data, flags.config)
                                                   : cdl::learn_single(data, flags.config);
  if (!flags.output.empty()) cdl::save_model(model, flags.output);
  if (!flags.metrics.empty()) write_metrics_csv(flags.metrics, model.metrics);
  return 0;
}

int cmd_learn_coupled(LearnFlags& flags) {
  flags.apply();
  const cdl::Dataset data1 = load_input(flags.input, flags.patch_size, flags.stride);
  const cdl::Dataset data2 = load_input(flags.input2, flags.patch_size, flags.stride);
  const cdl::CoupledModel model = cdl::learn_coupled(data1, data2, flags.config);
  if (!flags.output.empty()) cdl::save_model(model, flags.output);
  if (!flags.metrics.empty()) write_metrics_csv(flags.metrics, model.metrics);
  return 0;
}

int cmd_benchmark(LearnFlags& flags) {
  flags.apply();
  if (flags.metrics.empty()) throw std::runtime_error("benchmark needs --metrics");
  const cdl::Dataset data = load_input(flags.input, flags.patch_size, flags.stride);

  cdl::LearnConfig proposed = flags.config;
  proposed.schedule = cdl::ScheduleMode::graduated;
  cdl::LearnConfig baseline = flags.config;
  baseline.cycles = std::max(1, flags.config.cycles / 2);

  const cdl::CoupledModel fast = cdl::learn_single(data, proposed);
  const cdl::CoupledModel reference = cdl::learn_ksvd(data, baseline);

  std::ofstream out(flags.metrics, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + flags.metrics);
  out << "method,cycle,wall_time_s,avg_nnz,avg_error,limit\n";
  const auto emit = [&out](const char* method, const std::vector<cdl::CycleMetrics>& metrics) {
    double elapsed = 0.0;
    for (const auto& m : metrics) {
      elapsed += m.wall_time;
      out << method << "," << m.cycle << "," << format_double(elapsed) << ","
          << format_double(m.avg_nonzeros) << "," << format_double(m.avg_error) << "," << m.limit
          << "\n";
    }
  };
  emit("proposed", fast.metrics);
  emit("ksvd", reference.metrics);
  return 0;
}

int cmd_render_atoms(const std::string& input, int space, const std::string& output) {
  const cdl::CoupledModel model = cdl::load_model(input);
  const cdl::Dictionary& dict = space == 2 ? model.dict2 : model.dict1;
  const auto side = static_cast<cdl::Index>(std::lround(std::sqrt(double(dict.dim()))));
  const auto grid = static_cast<cdl::Index>(std::lround(std::sqrt(double(dict.natoms()))));
  if (side * side != dict.dim() || grid * grid != dict.natoms()) {
    throw std::runtime_error("render-atoms: atom dimension and atom count must be squares");
  }

  cdl::Image mosaic;
  mosaic.width = static_cast<int>(grid * side + grid - 1);
  mosaic.height = mosaic.width;
  mosaic.samples.assign(static_cast<std::size_t>(mosaic.width) * mosaic.height, 0.0);
  for (cdl::Index t = 0; t < dict.natoms(); ++t) {
    const auto atom = dict.atoms.col(t);
    const double lo = atom.minCoeff();
    const double hi = atom.maxCoeff();
    const cdl::Index row0 = (t / grid) * (side + 1);
    const cdl::Index col0 = (t % grid) * (side + 1);
    for (cdl::Index r = 0; r < side; ++r) {
      for (cdl::Index c = 0; c < side; ++c) {
        const double v = atom[r * side + c];
        mosaic.at(static_cast<int>(row0 + r), static_cast<int>(col0 + c)) =
            hi > lo ? (v - lo) / (hi - lo) : 0.5;
      }
    }
  }
  cdl::write_pgm(mosaic, output);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"coupled dictionary learning toolkit"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "generate coupled datasets");
  std::string synth_mode = "synthetic";
  int synth_m = 16, synth_k = 32, synth_n = 500, synth_sparsity = 3;
  std::uint64_t synth_seed = 0;
  std::string synth_input, synth_output;
  double synth_sigma = 2.0;
  int synth_patch = 8, synth_stride = 4;
  synth->add_option("--mode", synth_mode, "synthetic | blurpair")
      ->check(CLI::IsMember({"synthetic", "blurpair"}));
  synth->add_option("--m", synth_m, "signal dimension per space");
  synth->add_option("--k", synth_k, "dictionary atoms");
  synth->add_option("--n", synth_n, "signal count");
  synth->add_option("--sparsity", synth_sparsity, "nonzeros per signal");
  synth->add_option("--seed", synth_seed, "random seed");
  synth->add_option("--input", synth_input, "source image for blurpair mode");
  synth->add_option("--sigma", synth_sigma, "blur strength for blurpair mode");
  synth->add_option("--patch-size", synth_patch, "patch side length");
  synth->add_option("--stride", synth_stride, "patch stride");
  synth->add_option("--output", synth_output, "output path prefix")->required();

  // learn / learn-coupled / benchmark
  auto* learn = app.add_subcommand("learn", "learn a single dictionary");
  LearnFlags learn_flags;
  std::string learn_method = "proposed";
  add_learn_flags(*learn, learn_flags, false);
  learn->add_option("--method", learn_method, "proposed | ksvd")
      ->check(CLI::IsMember({"proposed", "ksvd"}));

  auto* coupled = app.add_subcommand("learn-coupled", "learn two coupled dictionaries");
  LearnFlags coupled_flags;
  add_learn_flags(*coupled, coupled_flags, true);

  auto* benchmark = app.add_subcommand("benchmark",
                                       "compare the graduated learner against the reference");
  LearnFlags benchmark_flags;
  add_learn_flags(*benchmark, benchmark_flags, false);

  // render-atoms
  auto* render = app.add_subcommand("render-atoms", "tile a model's atoms into a PGM mosaic");
  std::string render_input, render_output;
  int render_space = 1;
  render->add_option("--input", render_input, "model file")->required();
  render->add_option("--space", render_space, "feature space, 1 or 2")
      ->check(CLI::Range(1, 2));
  render->add_option("--output", render_output, "mosaic PGM path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      if (synth_mode == "blurpair" && synth_input.empty()) {
        throw std::runtime_error("blurpair mode needs --input");
      }
      return cmd_synth(synth_mode, synth_m, synth_k, synth_n, synth_sparsity, synth_seed,
                       synth_input, synth_sigma, synth_patch, synth_stride, synth_output);
    }
    if (learn->parsed()) return cmd_learn(learn_flags, learn_method);
    if (coupled->parsed()) return cmd_learn_coupled(coupled_flags);
    if (benchmark->parsed()) return cmd_benchmark(benchmark_flags);
    if (render->parsed()) return cmd_render_atoms(render_input, render_space, render_output);
  } catch (const std::exception& error) {
    std::cerr << "cdl: " << error.what() << "\n";
    return 1;
  }
  return 0;
}
