#include "mixnet_cli/cli.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "mixnet/error.hpp"
#include "mixnet/metrics/metrics.hpp"
#include "mixnet/recovery/artifacts.hpp"
#include "mixnet/recovery/config.hpp"
#include "mixnet/recovery/recovery.hpp"
#include "mixnet/recovery/sweep.hpp"
#include "mixnet/recovery/synthetic.hpp"
#include "mixnet/recovery/unmixing.hpp"
#include "mixnet/spectral/cube_io.hpp"
#include "mixnet/spectral/export.hpp"

namespace mixnet::cli {
namespace {

namespace fs = std::filesystem;
using recovery::RecoveryConfig;
using spectral::SpectralCube;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SceneSize {
  std::size_t h = 32, w = 32, l = 8, r = 3;

  void add_to(CLI::App& app) {
    app.add_option("--h", h, "Scene height")->check(CLI::PositiveNumber);
    app.add_option("--w", w, "Scene width")->check(CLI::PositiveNumber);
    app.add_option("--l", l, "Number of bands")->check(CLI::PositiveNumber);
    app.add_option("--r", r, "Endmembers of the synthetic scene")->check(CLI::PositiveNumber);
  }
};

const std::map<std::string_view, std::string_view>& key_help() {
  static const std::map<std::string_view, std::string_view> help{
      {"task", "denoise|sr|csi"},
      {"input_strategy", "constant|random|meshgrid|estimated|learned"},
      {"rho", "Tucker input scale in (0, 1]"},
      {"beta", "input perturbation level"},
      {"lambda", "non-linear share of each block output in [0, 1]"},
      {"rank", "endmembers per block"},
      {"blocks", "number of deep-blocks"},
      {"tau", "per-block loss weights (one value or a comma list)"},
      {"gamma", "per-block sum-to-one weights (one value or a comma list)"},
      {"loss_scheme", "single|multiple, used when tau is not given"},
      {"lr", "Adam learning rate"},
      {"iterations", "optimizer steps"},
      {"fidelity", "auto|l2|sure"},
      {"sure_form", "normalized|unnormalized"},
      {"sure_eps", "finite-difference step of the divergence probe"},
      {"div_probes", "divergence probes per iteration"},
      {"output_rule", "last|average_last_two"},
      {"seed", "random seed"},
      {"arch", "convolutional|autoencoder|resnet"},
      {"arch_layers", "hidden layers of the abundance network"},
      {"arch_features", "features per hidden layer"},
      {"arch_norm", "per-channel normalization after each hidden conv: true|false"},
      {"cassi", "dd|sd"},
      {"d", "super-resolution factor"},
      {"sigma", "noise level for SURE, or auto"},
      {"noise_sigma", "noise added when simulating denoising measurements"},
      {"threshold", "abundance threshold for unmix maps"},
      {"output_ema", "running-average weight of the recovered cube in [0, 1)"},
  };
  return help;
}

// Every config key becomes a `--key value` override on top of `--config`.
struct ConfigOptions {
  std::string path;
  std::map<std::string, std::string, std::less<>> values;
  std::vector<std::pair<std::string, CLI::Option*>> options;

  void add_to(CLI::App& app, bool with_task) {
    app.add_option("--config", path, "key=value config file");
    for (std::string_view key : RecoveryConfig::keys()) {
      if (key == "task" && !with_task) continue;
      auto& slot = values[std::string(key)];
      const auto it = key_help().find(key);
      const std::string help = it == key_help().end() ? std::string{} : std::string(it->second);
      options.emplace_back(std::string(key), app.add_option("--" + std::string(key), slot, help));
    }
  }

  RecoveryConfig build(std::optional<recovery::Task> task) const {
    RecoveryConfig c;
    if (!path.empty()) c.merge_file(path);
    for (const auto& [key, opt] : options) {
      if (opt->count() > 0) c.set(key, values.at(key));
    }
    if (task) c.task = *task;
    return c;
  }
};

struct DataOptions {
  std::string ref, meas, aperture;
  SceneSize size;

  void add_to(CLI::App& app) {
    app.add_option("--ref", ref, "Reference cube (SPC1); measurements are simulated from it unless --meas is given");
    app.add_option("--meas", meas, "Measured data (SPC1) in the layout of the task's forward model");
    app.add_option("--aperture", aperture, "Coded aperture (PNG or SPC1) for csi/unmix");
    size.add_to(app);
  }
};

struct Problem {
  std::optional<SceneSize> synthetic;
  std::optional<recovery::SyntheticScene> truth;
  std::optional<SpectralCube> reference;
  std::optional<forward::ForwardModel> model;
  ad::Tensor y;
};

Problem load_problem(const DataOptions& d, const RecoveryConfig& c) {
  Problem p;
  if (!d.ref.empty()) p.reference = spectral::read_cube(d.ref);
  std::size_t h = d.size.h, w = d.size.w, l = d.size.l;
  if (p.reference) {
    h = p.reference->height();
    w = p.reference->width();
    l = p.reference->bands();
  } else if (d.meas.empty()) {
    if (d.size.r > d.size.l) throw UsageError(fmt::format("--r {} exceeds --l {}", d.size.r, d.size.l));
    p.truth = recovery::make_synthetic(h, w, l, d.size.r, c.seed);
    p.reference = p.truth->cube;
  }
  try {
    c.validate(l);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (!d.aperture.empty()) {
    if (c.task != recovery::Task::csi) throw UsageError("--aperture only applies to csi and unmix");
    p.model = forward::ForwardModel::cassi(h, w, l, c.cassi, forward::read_aperture(d.aperture));
  } else {
    p.model = recovery::make_task_model(c, h, w, l);
  }
  if (!d.meas.empty()) {
    p.y = spectral::read_cube(d.meas).to_tensor();
    if (p.y.shape() != p.model->output_shape()) {
      throw ShapeError("measurements " + shape_string(p.y.shape()) + " do not match the forward model output " +
                       shape_string(p.model->output_shape()));
    }
  } else {
    p.y = recovery::simulate_measurements(c, *p.model, *p.reference);
  }
  return p;
}

void print_unmixing(std::ostream& out, const recovery::RecoveryResult& r, const SpectralCube& truth) {
  const SpectralCube& learned = r.abundances.back();
  if (learned.bands() != truth.bands()) {
    out << fmt::format("unmixing: learned rank {} differs from {} reference components, no matching\n",
                       learned.bands(), truth.bands());
    return;
  }
  const auto match = recovery::best_permutation_match(learned, truth);
  for (std::size_t c = 0; c < match.correlations.size(); ++c) {
    out << fmt::format("component{}: learned={} correlation={}\n", c + 1, match.assignment[c] + 1,
                       metrics::format_value(match.correlations[c]));
  }
  out << "mean_correlation=" << metrics::format_value(match.mean_correlation) << "\n";
  out << "argmax_agreement="
      << metrics::format_value(recovery::argmax_agreement(learned, truth, match.assignment)) << "\n";
}

int run_task(std::ostream& out, recovery::Task task, bool unmix, const ConfigOptions& co, const DataOptions& data,
             const std::string& out_dir) {
  const RecoveryConfig c = co.build(task);
  const Problem p = load_problem(data, c);
  const auto result = recovery::run_recovery(c, p.y, *p.model, p.reference ? &*p.reference : nullptr);
  recovery::write_artifacts(result, c, out_dir, {.unmixing = unmix});

  out << fmt::format("task={} iterations={} fidelity={}\n", recovery::to_string(c.task), c.iterations,
                     loss::to_string(result.fidelity));
  if (result.fidelity == loss::Fidelity::sure) {
    out << fmt::format("sigma={} ({})\n", metrics::format_value(result.sigma),
                       result.sigma_estimated ? "estimated" : "config");
  }
  out << "final_loss=" << metrics::format_value(result.log.back().loss) << "\n";
  if (result.metrics) out << result.metrics->to_text();
  if (unmix && p.truth) print_unmixing(out, result, p.truth->abundances);
  out << "artifacts=" << out_dir << "\n";
  return kExitOk;
}

std::vector<double> read_raw(const fs::path& path, const std::string& type, std::size_t count) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  const std::size_t width = type == "f32" ? 4 : 8;
  std::vector<char> bytes(count * width);
  in.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (static_cast<std::size_t>(in.gcount()) != bytes.size()) {
    throw std::runtime_error(fmt::format("{}: expected {} bytes of {} data", path.string(), bytes.size(), type));
  }
  if (in.peek() != std::char_traits<char>::eof()) throw std::runtime_error(path.string() + ": trailing data");
  static_assert(std::endian::native == std::endian::little, "raw import assumes a little-endian host");
  std::vector<double> v(count);
  for (std::size_t i = 0; i < count; ++i) {
    if (width == 4) {
      float f;
      std::memcpy(&f, bytes.data() + i * 4, 4);
      v[i] = f;
    } else {
      std::memcpy(&v[i], bytes.data() + i * 8, 8);
    }
  }
  return v;
}

int run_convert(std::ostream& out, const std::string& in_path, const std::string& out_path, const SceneSize& s,
                const std::string& type, const std::string& layout, bool normalize) {
  const std::size_t h = s.h, w = s.w, l = s.l;
  const auto raw = read_raw(in_path, type, h * w * l);
  SpectralCube cube(h, w, l);
  for (std::size_t i = 0; i < h; ++i) {
    for (std::size_t j = 0; j < w; ++j) {
      for (std::size_t b = 0; b < l; ++b) {
        std::size_t src = 0;
        if (layout == "bip") src = (i * w + j) * l + b;
        else if (layout == "bsq") src = (b * h + i) * w + j;
        else src = (i * l + b) * w + j;  // bil
        cube(i, j, b) = raw[src];
      }
    }
  }
  if (!cube.all_finite()) throw std::runtime_error("input contains non-finite values");
  if (normalize) {
    const double peak = *std::max_element(cube.data().begin(), cube.data().end());
    if (peak > 0.0) {
      for (double& v : cube.data()) v /= peak;
    }
  }
  spectral::write_cube(cube, out_path);
  out << fmt::format("wrote {} ({}x{}x{})\n", out_path, h, w, l);
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Mixture-Net spectral image recovery"};
  app.require_subcommand(1);
  // `--h` is the scene height, so help has no short form.
  app.set_help_flag("--help", "Print this help message and exit");
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  std::string out_dir = "out";
  std::uint64_t synth_seed = 0;
  SceneSize synth_size;
  auto* synth = app.add_subcommand("synth", "Write a synthetic linear-mixture scene");
  synth_size.add_to(*synth);
  synth->add_option("--seed", synth_seed, "Random seed");
  synth->add_option("--out-dir", out_dir, "Output directory");

  struct TaskCommand {
    const char* name;
    const char* help;
    recovery::Task task;
    bool unmix;
    CLI::App* app = nullptr;
    ConfigOptions config;
    DataOptions data;
  };
  std::vector<TaskCommand> tasks;
  tasks.reserve(4);
  tasks.push_back({"denoise", "Denoise a cube under Gaussian noise (SURE loss by default)", recovery::Task::denoise,
                   false, nullptr, {}, {}});
  tasks.push_back({"sr", "Spatial super-resolution from a blurred, downsampled cube", recovery::Task::sr, false, nullptr, {}, {}});
  tasks.push_back({"csi", "Compressive spectral imaging from a single CASSI snapshot", recovery::Task::csi, false, nullptr, {}, {}});
  tasks.push_back({"unmix", "CSI run that also exports thresholded abundance maps", recovery::Task::csi, true, nullptr, {}, {}});
  for (auto& t : tasks) {
    t.app = app.add_subcommand(t.name, t.help);
    t.config.add_to(*t.app, false);
    t.data.add_to(*t.app);
    t.app->add_option("--out-dir", out_dir, "Output directory");
  }

  std::string ref_path, est_path;
  double ratio = 1.0;
  auto* metrics_cmd = app.add_subcommand("metrics", "Compare two cubes");
  metrics_cmd->add_option("--ref", ref_path, "Reference cube")->required();
  metrics_cmd->add_option("--est", est_path, "Estimated cube")->required();
  metrics_cmd->add_option("--d", ratio, "Resolution ratio used by ERGAS")->check(CLI::Range(1.0, 1e6));

  std::string harness_name, grid_values;
  ConfigOptions sweep_config;
  DataOptions sweep_data;
  auto* sweep = app.add_subcommand("sweep", "Run a characterization grid and write sweep.csv");
  sweep->add_option("--harness", harness_name, "input_strategies|abundance_arch|rank|blocks|perturbation")
      ->required();
  sweep->add_option("--values", grid_values, "Comma-separated grid replacing the default one");
  sweep_config.add_to(*sweep, true);
  sweep_data.add_to(*sweep);
  sweep->add_option("--out-dir", out_dir, "Output directory");

  std::string convert_in, convert_out, convert_type = "f32", convert_layout = "bip";
  bool convert_normalize = false;
  SceneSize convert_size;
  auto* convert = app.add_subcommand("convert", "Convert a raw little-endian cube to SPC1");
  convert->add_option("--in", convert_in, "Raw input file")->required();
  convert->add_option("--out", convert_out, "SPC1 output file")->required();
  convert->add_option("--h", convert_size.h, "Height")->required()->check(CLI::PositiveNumber);
  convert->add_option("--w", convert_size.w, "Width")->required()->check(CLI::PositiveNumber);
  convert->add_option("--l", convert_size.l, "Bands")->required()->check(CLI::PositiveNumber);
  convert->add_option("--type", convert_type, "Sample type")->check(CLI::IsMember({"f32", "f64"}));
  convert->add_option("--layout", convert_layout, "Sample order: bip (band fastest), bil or bsq")
      ->check(CLI::IsMember({"bip", "bil", "bsq"}));
  convert->add_flag("--normalize", convert_normalize, "Divide by the maximum value");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    if (const auto* sub = app.get_subcommands().empty() ? nullptr : app.get_subcommands().front()) {
      err << "run '" << app.get_name() << " " << sub->get_name() << " --help' for usage\n";
    }
    return kExitUsage;
  }

  try {
    if (synth->parsed()) {
      if (synth_size.r > synth_size.l) throw UsageError("--r must not exceed --l");
      const auto scene = recovery::make_synthetic(synth_size.h, synth_size.w, synth_size.l, synth_size.r, synth_seed);
      fs::create_directories(out_dir);
      const fs::path dir(out_dir);
      spectral::write_cube(scene.cube, dir / "cube.spc");
      spectral::write_cube(scene.abundances, dir / "abundances.spc");
      spectral::export_csv(scene.endmembers, dir / "endmembers.csv");
      spectral::export_rgb_png(scene.cube, dir / "cube_rgb.png");
      out << fmt::format("wrote {}x{}x{} scene with {} endmembers to {}\n", synth_size.h, synth_size.w, synth_size.l,
                         synth_size.r, out_dir);
      return kExitOk;
    }
    for (const auto& t : tasks) {
      if (t.app->parsed()) return run_task(out, t.task, t.unmix, t.config, t.data, out_dir);
    }
    if (metrics_cmd->parsed()) {
      const auto ref = spectral::read_cube(ref_path);
      const auto est = spectral::read_cube(est_path);
      out << metrics::evaluate(ref, est, ratio).to_text();
      return kExitOk;
    }
    if (sweep->parsed()) {
      recovery::Harness harness;
      try {
        harness = recovery::parse_harness(harness_name);
      } catch (const std::invalid_argument& e) {
        throw recovery::ConfigError(e.what(), harness_name);
      }
      const RecoveryConfig base = sweep_config.build(std::nullopt);
      const Problem p = load_problem(sweep_data, base);
      if (!p.reference) throw UsageError("sweep needs a reference: pass --ref or omit --meas");
      const auto cells = recovery::sweep_grid(harness, base, grid_values);
      const auto rows = recovery::run_sweep(cells, p.y, *p.model, *p.reference);
      const std::string csv = recovery::sweep_csv(rows);
      fs::create_directories(out_dir);
      std::ofstream(fs::path(out_dir) / "sweep.csv", std::ios::binary) << csv;
      out << csv;
      return kExitOk;
    }
    if (convert->parsed()) {
      return run_convert(out, convert_in, convert_out, convert_size, convert_type, convert_layout, convert_normalize);
    }
  } catch (const recovery::ConfigError& e) {
    err << "error: " << e.what() << " (offending token: '" << e.token() << "')\n";
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericError& e) {
    err << "error: " << e.what() << " (iteration " << e.iteration() << ")\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace mixnet::cli
