#include "cfm_cli/commands.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "cfm/analysis.hpp"
#include "cfm/error.hpp"
#include "cfm/io.hpp"
#include "cfm/measurement.hpp"
#include "cfm/patterns.hpp"
#include "cfm/phantoms.hpp"
#include "cfm/recovery.hpp"

namespace cfm::cli {

namespace {

constexpr const char* kExitCodes =
    "Exit codes:\n"
    "  0  success\n"
    "  1  internal error\n"
    "  2  usage error (unknown flag, bad value)\n"
    "  3  io error (file cannot be read or written)\n"
    "  4  format error (malformed container, header or pattern-hash mismatch)\n"
    "  5  shape error (dimension mismatch between inputs)\n"
    "  6  config error (invalid parameters)\n"
    "  7  data error (negative scene, nonfinite readings)\n"
    "Failures print one line: error[<category>]: <message>";

struct PhantomArgs {
  std::string kind = "spikes";
  std::size_t count = 0;
  std::uint64_t seed = 0;
  std::size_t width = 64;
  std::size_t height = 64;
  double radius = 2.0;
  double sigma_min = 1.0;
  double sigma_max = 2.0;
  double amp_min = 1.0;
  double amp_max = 1.0;
  std::size_t channels = 1;
  std::string spectra = "random";
  double jitter = 0.0;
  double linewidth = 1.0;
  std::string out;
};

struct PatternArgs {
  std::string ensemble = "bernoulli";
  std::size_t m = 0;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  double density = 0.5;
  bool differential = false;
  bool permute = false;
  std::string out;
};

struct AcquireArgs {
  std::string scene;
  std::vector<std::string> patterns;
  std::string noise = "noiseless";
  double sigma = 0.0;
  double budget = 1e5;
  std::uint64_t seed = 0;
  std::string out;
};

struct ReconstructArgs {
  std::string measurements;
  std::vector<std::string> patterns;
  std::string solver = "l1";
  std::string basis = "identity";
  unsigned levels = 3;
  std::string lambda = "auto";
  double tol = 1e-8;
  std::size_t max_iters = 5000;
  bool nonneg = false;
  bool no_nonneg = false;
  bool mean_removal = false;
  double tv_weight = 0.0;
  std::string acceleration = "fista";
  bool no_continuation = false;
  std::optional<std::size_t> channel;
  std::size_t width = 0;
  std::size_t height = 0;
  std::string out;
  std::string diagnostics;
};

struct SweepArgs {
  std::string spec;
  std::string out = "-";
  std::size_t threads = 0;
  bool no_timing = false;
};

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

int fail(std::ostream& err, int code, const char* category, const std::string& msg) {
  err << "error[" << category << "]: " << one_line(msg) << '\n';
  return code;
}

PhantomSpec make_phantom(const PhantomArgs& a) {
  if (a.kind == "spikes") return PhantomSpec::spikes(a.count, a.seed, a.amp_min, a.amp_max);
  if (a.kind == "beads") return PhantomSpec::beads(a.count, a.radius, a.amp_min, a.amp_max, a.seed);
  return PhantomSpec::blobs(a.count, a.sigma_min, a.sigma_max, a.amp_min, a.amp_max, a.seed);
}

void cmd_phantom(const PhantomArgs& a, std::ostream& out) {
  const PhantomSpec spec = make_phantom(a);
  if (a.channels == 0) throw ConfigError("--channels must be at least 1");
  SpectralCube cube;
  if (a.channels == 1) {
    cube = to_cube(generate_scene(spec, a.width, a.height));
  } else {
    const SpectraModel model = a.spectra == "lines"
                                   ? SpectraModel::emission_lines(a.jitter, a.linewidth)
                                   : SpectraModel::random_spectra();
    cube = generate_cube(spec, a.width, a.height, a.channels, model);
  }
  write_cfm1(a.out, cube);
  out << "wrote " << a.out << " (" << a.width << "x" << a.height << "x" << a.channels << ")\n";
}

void cmd_patterns(const PatternArgs& a, std::ostream& out) {
  Ensemble e;
  e.kind = parse_ensemble_tag(a.ensemble);
  e.density = a.density;
  e.permute = a.permute;
  const PatternSet set = generate_patterns(e, a.m, a.n, a.seed, a.differential);
  write_cfmp1(a.out, set);
  out << "wrote " << a.out << " (M=" << set.m() << ", N=" << set.n()
      << ", physical readings=" << set.physical_readings() << ", hash=" << std::hex
      << set.content_hash() << std::dec << ")\n";
}

std::vector<PatternSet> load_patterns(const std::vector<std::string>& paths) {
  std::vector<PatternSet> sets;
  for (const auto& p : paths) sets.push_back(read_cfmp1(std::filesystem::path(p)));
  return sets;
}

void cmd_acquire(const AcquireArgs& a, std::ostream& out) {
  const SpectralCube cube = read_cfm1(std::filesystem::path(a.scene));
  const auto sets = load_patterns(a.patterns);
  NoiseModel noise;
  noise.kind = parse_noise_kind(a.noise);
  noise.sigma = a.sigma;
  noise.photon_budget = noise.uses_poisson() ? a.budget : 0.0;
  noise.seed = a.seed;
  noise.validate();
  std::vector<MeasurementRecord> records;
  if (cube.channels == 1) {
    if (sets.size() != 1) throw ShapeError("a single-channel scene takes exactly one pattern set");
    records.push_back(measure(cube.channel_scene(0), sets[0], noise));
  } else {
    records = measure_cube(cube, sets, noise);
  }
  write_measurements(a.out, records);
  std::size_t readings = 0;
  for (const auto& s : sets) readings += s.physical_readings();
  if (sets.size() == 1) readings *= cube.channels;
  out << "wrote " << a.out << " (" << records.size() << " channel(s), " << readings
      << " physical detector readings)\n";
}

std::optional<TransformKind> parse_basis(const std::string& name, unsigned levels) {
  if (name == "identity") return std::nullopt;
  if (name == "haar") return TransformKind::haar(levels);
  if (name == "dct") return TransformKind::dct2();
  return TransformKind::walsh_hadamard();
}

template <class Image>
void report(std::ostream& out, const RecoveryResult<Image>& r, const std::string& path) {
  out << "wrote " << path << " (iterations=" << r.iterations
      << ", converged=" << (r.converged ? "true" : "false") << ", lambda=" << r.lambda << ")\n";
}

void cmd_reconstruct(const ReconstructArgs& a, std::ostream& out) {
  auto records = read_measurements(std::filesystem::path(a.measurements));
  auto sets = load_patterns(a.patterns);

  SolverConfig cfg;
  if (a.lambda != "auto") {
    try {
      std::size_t used = 0;
      cfg.lambda = std::stod(a.lambda, &used);
      if (used != a.lambda.size()) throw std::invalid_argument(a.lambda);
    } catch (const std::logic_error&) {
      throw ConfigError("--lambda must be 'auto' or a number, got '" + a.lambda + "'");
    }
  }
  cfg.tol = a.tol;
  cfg.max_iters = a.max_iters;
  if (a.nonneg && a.no_nonneg) throw ConfigError("--nonneg and --no-nonneg are exclusive");
  if (a.nonneg) cfg.nonnegative = true;
  if (a.no_nonneg) cfg.nonnegative = false;
  cfg.basis = parse_basis(a.basis, a.levels);
  cfg.acceleration = a.acceleration == "ista" ? Acceleration::ista : Acceleration::fista;
  cfg.continuation = !a.no_continuation;
  cfg.dc = a.mean_removal ? DcStrategy::mean_removal : DcStrategy::none;

  if (a.channel) {
    const std::size_t c = *a.channel;
    if (c >= records.size()) throw ShapeError("--channel is out of range");
    records = {records[c]};
    if (sets.size() > 1) {
      if (c >= sets.size()) throw ShapeError("no pattern set for the requested channel");
      sets = {sets[c]};
    }
  }
  const std::size_t width = a.width ? a.width : records[0].width;
  const std::size_t height = a.height ? a.height : records[0].height;
  if (width == 0 || height == 0) {
    throw ShapeError("image shape unknown; pass --width and --height");
  }
  const std::string diag = a.diagnostics.empty() ? a.out + ".diag.csv" : a.diagnostics;

  if (a.solver == "joint") {
    const auto r = reconstruct_joint_spectral(records, sets, cfg, std::nullopt, width, height);
    write_cfm1(std::filesystem::path(a.out), r.estimate);
    write_diagnostics(diag, r, "joint");
    report(out, r, a.out);
    return;
  }
  if (records.size() != 1) {
    throw ShapeError("solver '" + a.solver + "' takes one channel; pass --channel or use joint");
  }
  if (sets.size() != 1) throw ShapeError("solver '" + a.solver + "' takes one pattern set");
  const auto r = a.solver == "tv"
                     ? reconstruct_tv(records[0], sets[0], cfg, a.tv_weight, width, height)
                     : reconstruct_l1(records[0], sets[0], cfg, width, height);
  write_cfm1(std::filesystem::path(a.out), r.estimate);
  write_diagnostics(diag, r, a.solver);
  report(out, r, a.out);
}

void cmd_sweep(const SweepArgs& a, std::ostream& out) {
  std::ifstream f(a.spec);
  if (!f) throw IoError("cannot open '" + a.spec + "' for reading");
  std::stringstream text;
  text << f.rdbuf();
  SweepSpec spec = sweep_spec_from_json(text.str());
  if (a.threads) spec.threads = a.threads;
  if (a.no_timing) spec.record_timing = false;
  const SweepReport rep = run_sweep(spec);
  if (a.out == "-") {
    write_sweep_csv(out, rep);
    return;
  }
  std::ofstream o(a.out, std::ios::binary | std::ios::trunc);
  if (!o) throw IoError("cannot open '" + a.out + "' for writing");
  write_sweep_csv(o, rep);
  o.flush();
  if (!o) throw IoError("write to '" + a.out + "' failed");
  for (const auto& c : rep.cells) {
    out << "ratio " << c.ratio << " " << noise_kind_tag(c.noise.kind) << " "
        << c.noise.parameter() << ": success " << c.success_fraction << ", median rel error "
        << c.median_rel_error << '\n';
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"cfm: compressive fluorescence microscopy simulator and solvers", "cfm"};
  app.footer(kExitCodes);
  app.require_subcommand(1);

  PhantomArgs ph;
  auto* phantom = app.add_subcommand("phantom", "Generate a synthetic scene or cube (CFM1)");
  phantom->add_option("--kind", ph.kind, "spikes, beads or blobs")
      ->check(CLI::IsMember({"spikes", "beads", "blobs"}));
  phantom->add_option("--count", ph.count, "Number of objects")->required();
  phantom->add_option("--seed", ph.seed, "Seed");
  phantom->add_option("--width", ph.width, "Width (power of two)");
  phantom->add_option("--height", ph.height, "Height (power of two)");
  phantom->add_option("--radius", ph.radius, "Bead radius in pixels");
  phantom->add_option("--sigma-min", ph.sigma_min, "Smallest blob sigma in pixels");
  phantom->add_option("--sigma-max", ph.sigma_max, "Largest blob sigma in pixels");
  phantom->add_option("--amp-min", ph.amp_min, "Smallest amplitude");
  phantom->add_option("--amp-max", ph.amp_max, "Largest amplitude");
  phantom->add_option("--channels", ph.channels, "Spectral channels L");
  phantom->add_option("--spectra", ph.spectra, "random or lines")
      ->check(CLI::IsMember({"random", "lines"}));
  phantom->add_option("--jitter", ph.jitter, "Emission line center jitter in channels");
  phantom->add_option("--linewidth", ph.linewidth, "Emission line width in channels");
  phantom->add_option("--out", ph.out, "Output CFM1 file")->required();

  PatternArgs pa;
  auto* patterns = app.add_subcommand("patterns", "Generate illumination patterns (CFMP1)");
  patterns->add_option("--ensemble", pa.ensemble, "bernoulli, hadamard or raster")
      ->check(CLI::IsMember({"bernoulli", "hadamard", "raster"}));
  patterns->add_option("--m", pa.m, "Logical pattern count M")->required();
  patterns->add_option("--n", pa.n, "Pixels per pattern N")->required();
  patterns->add_option("--seed", pa.seed, "Seed");
  patterns->add_option("--density", pa.density, "Bernoulli on-probability");
  patterns->add_flag("--differential", pa.differential,
                     "Acquire each pattern as a complementary pair");
  patterns->add_flag("--permute", pa.permute, "Scramble Hadamard pixel order");
  patterns->add_option("--out", pa.out, "Output CFMP1 file")->required();

  AcquireArgs ac;
  auto* acquire = app.add_subcommand("acquire", "Simulate detector readings");
  acquire->add_option("--scene", ac.scene, "CFM1 scene or cube")->required();
  acquire->add_option("--patterns", ac.patterns,
                      "CFMP1 file; repeat once per channel for per-channel patterns")
      ->required();
  acquire->add_option("--noise", ac.noise, "noiseless, gaussian, poisson or poisson_gaussian")
      ->check(CLI::IsMember({"noiseless", "gaussian", "poisson", "poisson_gaussian"}));
  acquire->add_option("--sigma", ac.sigma, "Gaussian sigma");
  acquire->add_option("--budget", ac.budget, "Photon budget at full illumination");
  acquire->add_option("--seed", ac.seed, "Noise seed");
  acquire->add_option("--out", ac.out, "Measurement CSV (sidecar written to <out>.json)")
      ->required();

  ReconstructArgs rc;
  auto* reconstruct = app.add_subcommand("reconstruct", "Recover a scene from readings");
  reconstruct->add_option("--measurements", rc.measurements, "Measurement CSV")->required();
  reconstruct->add_option("--patterns", rc.patterns, "CFMP1 file(s) used for acquisition")
      ->required();
  reconstruct->add_option("--solver", rc.solver, "l1, tv or joint")
      ->check(CLI::IsMember({"l1", "tv", "joint"}));
  reconstruct->add_option("--basis", rc.basis, "identity, haar, dct or walsh")
      ->check(CLI::IsMember({"identity", "haar", "dct", "walsh"}));
  reconstruct->add_option("--levels", rc.levels, "Haar levels");
  reconstruct->add_option("--lambda", rc.lambda, "AUTO or a nonnegative weight")
      ->transform([](std::string s) {
        std::string lower = s;
        std::transform(lower.begin(), lower.end(), lower.begin(), ::tolower);
        return lower == "auto" ? lower : s;
      });
  reconstruct->add_option("--tol", rc.tol, "Relative objective-change tolerance");
  reconstruct->add_option("--max-iters", rc.max_iters, "Iteration cap");
  reconstruct->add_flag("--nonneg", rc.nonneg, "Force nonnegativity (identity basis only)");
  reconstruct->add_flag("--no-nonneg", rc.no_nonneg, "Disable nonnegativity");
  reconstruct->add_flag("--mean-removal", rc.mean_removal,
                        "Center readings and operator (non-differential patterns)");
  reconstruct->add_option("--tv-weight", rc.tv_weight, "TV weight for --solver tv");
  reconstruct->add_option("--acceleration", rc.acceleration, "fista or ista")
      ->check(CLI::IsMember({"fista", "ista"}));
  reconstruct->add_flag("--no-continuation", rc.no_continuation,
                        "Solve at the final lambda from the start");
  reconstruct->add_option("--channel", rc.channel, "Reconstruct only this channel");
  reconstruct->add_option("--width", rc.width, "Image width when the sidecar lacks it");
  reconstruct->add_option("--height", rc.height, "Image height when the sidecar lacks it");
  reconstruct->add_option("--out", rc.out, "Output CFM1 estimate")->required();
  reconstruct->add_option("--diagnostics", rc.diagnostics,
                          "Diagnostics CSV (default <out>.diag.csv)");

  SweepArgs sw;
  auto* sweep = app.add_subcommand("sweep", "Run an undersampling sweep from a JSON spec");
  sweep->add_option("--spec", sw.spec, "Sweep spec JSON")->required();
  sweep->add_option("--out", sw.out, "Report CSV, '-' for stdout");
  sweep->add_option("--threads", sw.threads, "Worker threads (overrides the JSON value)");
  sweep->add_flag("--no-timing", sw.no_timing, "Write wall_ms as 0");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);
    return fail(err, kUsage, "usage", e.what());
  }

  try {
    if (*phantom) {
      cmd_phantom(ph, out);
    } else if (*patterns) {
      cmd_patterns(pa, out);
    } else if (*acquire) {
      cmd_acquire(ac, out);
    } else if (*reconstruct) {
      cmd_reconstruct(rc, out);
    } else if (*sweep) {
      cmd_sweep(sw, out);
    }
  } catch (const IoError& e) {
    return fail(err, kIo, "io", e.what());
  } catch (const FormatError& e) {
    return fail(err, kFormat, "format", e.what());
  } catch (const ShapeError& e) {
    return fail(err, kShape, "shape", e.what());
  } catch (const ConfigError& e) {
    return fail(err, kConfig, "config", e.what());
  } catch (const LengthError& e) {
    return fail(err, kConfig, "config", e.what());
  } catch (const DataError& e) {
    return fail(err, kData, "data", e.what());
  } catch (const std::exception& e) {
    return fail(err, kInternal, "internal", e.what());
  }
  return kOk;
}

}  // namespace cfm::cli
