#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "cfm/analysis.hpp"
#include "cfm/error.hpp"
#include "cfm/rng.hpp"
#include "text.hpp"

namespace cfm {

namespace {

using detail::format_double;

double median_of(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end(), [](double a, double b) {
    // NaN (failed trials) sorts last.
    if (std::isnan(a)) return false;
    if (std::isnan(b)) return true;
    return a < b;
  });
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

void SweepSpec::validate() const {
  if (ratios.empty()) throw ConfigError("sweep: at least one ratio is required");
  for (double r : ratios) {
    if (!(r >= 1.0) || !std::isfinite(r)) throw ConfigError("sweep: ratios must be >= 1");
  }
  if (noise_ladder.empty()) throw ConfigError("sweep: at least one noise level is required");
  for (const auto& nm : noise_ladder) nm.validate();
  if (trials < 1) throw ConfigError("sweep: trials must be at least 1");
  if (threads < 1) throw ConfigError("sweep: threads must be at least 1");
  if (success_threshold && !(*success_threshold >= 0.0)) {
    throw ConfigError("sweep: success threshold must be nonnegative");
  }
  if (!(support_fraction >= 0.0)) throw ConfigError("sweep: support fraction must be nonnegative");
  validate_dimensions(width, height);
  phantom.validate();
  solver.validate();
}

double SweepSpec::threshold_for(const NoiseModel& noise) const {
  if (success_threshold) return *success_threshold;
  return noise.kind == NoiseModel::Kind::noiseless ? 1e-3 : 0.1;
}

std::pair<std::size_t, std::size_t> pattern_budget(std::size_t n, double ratio,
                                                   bool differential) {
  auto physical = static_cast<std::size_t>(std::llround(static_cast<double>(n) / ratio));
  physical = std::max<std::size_t>(physical, differential ? 2 : 1);
  if (!differential) return {physical, physical};
  const std::size_t logical = physical / 2;
  return {2 * logical, logical};
}

std::uint64_t trial_seed(std::uint64_t spec_seed, std::size_t cell, std::size_t trial) {
  return derive_key(derive_key(spec_seed, cell + 1), trial);
}

SweepRow run_trial(const SweepSpec& spec, std::size_t ratio_index, std::size_t noise_index,
                   std::size_t trial) {
  const std::size_t cell = ratio_index * spec.noise_ladder.size() + noise_index;
  const std::size_t n = spec.width * spec.height;
  const NoiseModel& level = spec.noise_ladder[noise_index];

  SweepRow row;
  row.ratio = spec.ratios[ratio_index];
  row.noise_kind = level.kind;
  row.noise_param = level.parameter();
  row.trial = trial;
  std::tie(row.physical_m, row.logical_patterns) =
      pattern_budget(n, row.ratio, spec.differential);

  const auto start = std::chrono::steady_clock::now();
  try {
    // The phantom depends on the trial only, so every cell sees the same scenes.
    PhantomSpec ph = spec.phantom;
    ph.seed = derive_key(derive_key(spec.seed, 0), trial);
    const Scene truth = generate_scene(ph, spec.width, spec.height);

    const std::uint64_t ts = trial_seed(spec.seed, cell, trial);
    const PatternSet patterns = generate_patterns(spec.ensemble, row.logical_patterns, n,
                                                  derive_key(ts, 1), spec.differential);
    NoiseModel noise = level;
    noise.seed = derive_key(derive_key(ts, 2), level.seed);
    const MeasurementRecord record = measure(truth, patterns, noise);

    const SceneRecovery rec =
        spec.solver_kind == SolverKind::tv
            ? reconstruct_tv(record, patterns, spec.solver, spec.tv_weight, spec.width,
                             spec.height)
            : reconstruct_l1(record, patterns, spec.solver, spec.width, spec.height);

    double peak = 0.0;
    for (double v : truth.values) peak = std::max(peak, v);
    const double psnr_peak = peak > 0.0 ? peak : 1.0;
    row.rel_error = rel_error(truth.values, rec.estimate.values);
    row.psnr_db = psnr(truth.values, rec.estimate.values, psnr_peak);
    row.support_f1 = support_f1(truth.values, rec.estimate.values, spec.support_fraction * peak);
    row.iterations = rec.iterations;
    row.success = row.rel_error <= spec.threshold_for(level);
  } catch (const std::exception& e) {
    row.rel_error = std::nan("");
    row.psnr_db = std::nan("");
    row.support_f1 = std::nan("");
    row.iterations = 0;
    row.success = false;
    row.error = e.what();
  }
  if (spec.record_timing) {
    row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                            start)
                      .count();
  }
  return row;
}

SweepReport run_sweep(const SweepSpec& spec) {
  spec.validate();
  const std::size_t noise_count = spec.noise_ladder.size();
  const std::size_t cells = spec.ratios.size() * noise_count;
  const std::size_t total = cells * spec.trials;

  SweepReport report;
  report.rows.resize(total);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < total; k = next++) {
      const std::size_t cell = k / spec.trials;
      report.rows[k] = run_trial(spec, cell / noise_count, cell % noise_count, k % spec.trials);
    }
  };
  const std::size_t workers = std::min(spec.threads, total);
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }

  for (std::size_t c = 0; c < cells; ++c) {
    SweepCell cell;
    cell.ratio = spec.ratios[c / noise_count];
    cell.noise = spec.noise_ladder[c % noise_count];
    std::vector<double> errs;
    std::size_t ok = 0;
    for (std::size_t t = 0; t < spec.trials; ++t) {
      const SweepRow& r = report.rows[c * spec.trials + t];
      ok += r.success;
      errs.push_back(r.rel_error);
    }
    cell.success_fraction = static_cast<double>(ok) / static_cast<double>(spec.trials);
    cell.median_rel_error = median_of(std::move(errs));
    report.cells.push_back(cell);
  }
  return report;
}

void write_sweep_csv(std::ostream& out, const SweepReport& report) {
  out << kSweepCsvHeader << '\n';
  for (const SweepRow& r : report.rows) {
    out << format_double(r.ratio) << ',' << noise_kind_tag(r.noise_kind) << ','
        << format_double(r.noise_param) << ',' << r.trial << ',' << format_double(r.rel_error)
        << ',' << format_double(r.psnr_db) << ',' << format_double(r.support_f1) << ','
        << r.iterations << ',' << format_double(r.wall_ms) << ',' << r.physical_m << ','
        << r.logical_patterns << ',' << (r.success ? 1 : 0) << '\n';
  }
}

std::string sweep_csv(const SweepReport& report) {
  std::ostringstream ss;
  write_sweep_csv(ss, report);
  return ss.str();
}

std::vector<SweepRow> parse_sweep_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kSweepCsvHeader) {
    throw FormatError("sweep csv: unexpected header");
  }
  std::vector<SweepRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_csv(line);
    SweepRow r;
    int success = 0;
    bool ok = f.size() == 12 && detail::parse_double(f[0], r.ratio) &&
              detail::parse_double(f[2], r.noise_param) && detail::parse_int(f[3], r.trial) &&
              detail::parse_double(f[4], r.rel_error) && detail::parse_double(f[5], r.psnr_db) &&
              detail::parse_double(f[6], r.support_f1) && detail::parse_int(f[7], r.iterations) &&
              detail::parse_double(f[8], r.wall_ms) && detail::parse_int(f[9], r.physical_m) &&
              detail::parse_int(f[10], r.logical_patterns) && detail::parse_int(f[11], success) &&
              (success == 0 || success == 1);
    if (ok) {
      try {
        r.noise_kind = parse_noise_kind(f[1]);
      } catch (const ConfigError&) {
        ok = false;
      }
    }
    if (!ok) throw FormatError("sweep csv: malformed row at line " + std::to_string(line_no));
    r.success = success == 1;
    rows.push_back(std::move(r));
  }
  return rows;
}

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, std::initializer_list<const char*> allowed,
                    const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      throw ConfigError(where + ": unknown key '" + key + "'");
    }
  }
}

PhantomSpec phantom_from_json(const json& j) {
  reject_unknown(j, {"kind", "count", "radius", "sigma", "amplitude"}, "phantom");
  PhantomSpec p;
  const std::string kind = j.value("kind", "spikes");
  if (kind == "spikes") {
    p.kind = PhantomSpec::Kind::spikes;
  } else if (kind == "beads") {
    p.kind = PhantomSpec::Kind::beads;
  } else if (kind == "blobs") {
    p.kind = PhantomSpec::Kind::blobs;
  } else {
    throw ConfigError("phantom: unknown kind '" + kind + "'");
  }
  p.count = j.value("count", std::size_t{16});
  p.radius_px = j.value("radius", p.radius_px);
  if (j.contains("sigma")) {
    const auto s = j.at("sigma").get<std::vector<double>>();
    if (s.size() != 2) throw ConfigError("phantom: sigma must be [min, max]");
    p.sigma_min_px = s[0];
    p.sigma_max_px = s[1];
  }
  if (j.contains("amplitude")) {
    const auto a = j.at("amplitude").get<std::vector<double>>();
    if (a.size() != 2) throw ConfigError("phantom: amplitude must be [min, max]");
    p.amplitude_min = a[0];
    p.amplitude_max = a[1];
  }
  return p;
}

NoiseModel noise_from_json(const json& j) {
  reject_unknown(j, {"kind", "sigma", "budget", "seed"}, "noise");
  NoiseModel nm;
  nm.kind = parse_noise_kind(j.value("kind", "noiseless"));
  nm.sigma = j.value("sigma", 0.0);
  nm.photon_budget = j.value("budget", nm.uses_poisson() ? 1e5 : 0.0);
  nm.seed = j.value("seed", std::uint64_t{0});
  return nm;
}

std::optional<TransformKind> basis_from_name(const std::string& name, unsigned levels) {
  if (name == "identity") return std::nullopt;
  if (name == "haar") return TransformKind::haar(levels);
  if (name == "dct") return TransformKind::dct2();
  if (name == "walsh") return TransformKind::walsh_hadamard();
  throw ConfigError("unknown basis '" + name + "'");
}

}  // namespace

SweepSpec sweep_spec_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("sweep spec: ") + e.what());
  }
  SweepSpec s;
  try {
    reject_unknown(j,
                   {"phantom", "width", "height", "ensemble", "differential", "dc", "ratios",
                    "noise", "trials", "solver", "success_threshold", "support_fraction", "seed",
                    "threads", "timing"},
                   "sweep spec");
    if (j.contains("phantom")) s.phantom = phantom_from_json(j.at("phantom"));
    s.width = j.value("width", s.width);
    s.height = j.value("height", s.height);
    if (j.contains("ensemble")) {
      const json& e = j.at("ensemble");
      reject_unknown(e, {"kind", "density", "permute"}, "ensemble");
      s.ensemble.kind = parse_ensemble_tag(e.value("kind", "bernoulli"));
      s.ensemble.density = e.value("density", 0.5);
      s.ensemble.permute = e.value("permute", false);
    }
    s.differential = j.value("differential", s.differential);
    const std::string dc = j.value("dc", "none");
    if (dc == "none") {
      s.solver.dc = DcStrategy::none;
    } else if (dc == "mean_removal") {
      s.solver.dc = DcStrategy::mean_removal;
    } else {
      throw ConfigError("unknown dc strategy '" + dc + "'");
    }
    if (j.contains("ratios")) s.ratios = j.at("ratios").get<std::vector<double>>();
    if (j.contains("noise")) {
      s.noise_ladder.clear();
      for (const auto& n : j.at("noise")) s.noise_ladder.push_back(noise_from_json(n));
    }
    s.trials = j.value("trials", s.trials);
    if (j.contains("solver")) {
      const json& sv = j.at("solver");
      reject_unknown(sv,
                     {"kind", "lambda", "max_iters", "tol", "nonnegative", "basis", "levels",
                      "acceleration", "tv_weight"},
                     "solver");
      const std::string kind = sv.value("kind", "l1");
      if (kind == "l1") {
        s.solver_kind = SolverKind::l1;
      } else if (kind == "tv") {
        s.solver_kind = SolverKind::tv;
      } else {
        throw ConfigError("solver: unknown kind '" + kind + "'");
      }
      if (sv.contains("lambda") && !(sv.at("lambda").is_string() && sv.at("lambda") == "auto")) {
        s.solver.lambda = sv.at("lambda").get<double>();
      }
      s.solver.max_iters = sv.value("max_iters", s.solver.max_iters);
      s.solver.tol = sv.value("tol", s.solver.tol);
      if (sv.contains("nonnegative")) s.solver.nonnegative = sv.at("nonnegative").get<bool>();
      s.solver.basis = basis_from_name(sv.value("basis", "identity"), sv.value("levels", 3u));
      const std::string acc = sv.value("acceleration", "fista");
      if (acc == "fista") {
        s.solver.acceleration = Acceleration::fista;
      } else if (acc == "ista") {
        s.solver.acceleration = Acceleration::ista;
      } else {
        throw ConfigError("solver: unknown acceleration '" + acc + "'");
      }
      s.tv_weight = sv.value("tv_weight", 0.0);
    }
    if (j.contains("success_threshold")) {
      s.success_threshold = j.at("success_threshold").get<double>();
    }
    s.support_fraction = j.value("support_fraction", s.support_fraction);
    s.seed = j.value("seed", s.seed);
    s.threads = j.value("threads", s.threads);
    s.record_timing = j.value("timing", s.record_timing);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("sweep spec: ") + e.what());
  } catch (const FormatError& e) {
    throw ConfigError(std::string("sweep spec: ") + e.what());
  }
  s.validate();
  return s;
}

}  // namespace cfm
