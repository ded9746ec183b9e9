#include "cfm/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "cfm/error.hpp"
#include "text.hpp"

namespace cfm {

namespace {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open '" + path.string() + "' for writing");
  return f;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path.string() + "' for reading");
  return f;
}

void finish(std::ostream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

std::vector<std::string> header_fields(std::istream& in, const char* magic) {
  std::string line;
  // Headers are short; refuse to scan an arbitrary binary file for a newline.
  char c = 0;
  while (line.size() < 256 && in.get(c) && c != '\n') line.push_back(c);
  if (c != '\n') throw FormatError(std::string(magic) + ": missing or overlong header line");
  std::vector<std::string> fields;
  std::size_t pos = 0;
  while (pos <= line.size()) {
    const std::size_t sp = line.find(' ', pos);
    fields.push_back(line.substr(pos, sp == std::string::npos ? std::string::npos : sp - pos));
    if (sp == std::string::npos) break;
    pos = sp + 1;
  }
  if (fields.empty() || fields[0] != magic) {
    throw FormatError(std::string("expected ") + magic + " header");
  }
  return fields;
}

std::size_t positive_field(const std::string& s, const char* what) {
  std::size_t v = 0;
  if (!detail::parse_int(s, v) || v == 0) {
    throw FormatError(std::string("header field ") + what + " must be a positive integer, got '" +
                      s + "'");
  }
  return v;
}

void expect_eof(std::istream& in, const char* magic) {
  if (in.peek() != std::char_traits<char>::eof()) {
    throw FormatError(std::string(magic) + ": trailing bytes after payload");
  }
}

std::uint64_t to_le(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) return __builtin_bswap64(v);
  return v;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream ss;
  ss << std::hex << std::setw(16) << std::setfill('0') << v;
  return ss.str();
}

std::uint64_t parse_hex64(const std::string& s) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v, 16);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw FormatError("bad patterns_hash '" + s + "'");
  }
  return v;
}

json noise_to_json(const NoiseModel& nm) {
  return json{{"kind", noise_kind_tag(nm.kind)},
              {"sigma", nm.sigma},
              {"budget", nm.photon_budget},
              {"seed", nm.seed}};
}

NoiseModel noise_from_json(const json& j) {
  NoiseModel nm;
  nm.kind = parse_noise_kind(j.at("kind").get<std::string>());
  nm.sigma = j.value("sigma", 0.0);
  nm.photon_budget = j.value("budget", 0.0);
  nm.seed = j.value("seed", std::uint64_t{0});
  return nm;
}

}  // namespace

void write_cfm1(std::ostream& out, const SpectralCube& cube) {
  if (cube.width == 0 || cube.height == 0 || cube.channels == 0 ||
      cube.values.size() != cube.width * cube.height * cube.channels) {
    throw ShapeError("cfm1: cube dimensions do not match its values");
  }
  out << "CFM1 " << cube.width << ' ' << cube.height << ' ' << cube.channels << '\n';
  std::vector<char> buf(cube.values.size() * 8);
  for (std::size_t i = 0; i < cube.values.size(); ++i) {
    const std::uint64_t bits = to_le(std::bit_cast<std::uint64_t>(cube.values[i]));
    std::memcpy(buf.data() + 8 * i, &bits, 8);
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

SpectralCube read_cfm1(std::istream& in) {
  const auto f = header_fields(in, "CFM1");
  if (f.size() != 4) throw FormatError("CFM1 header needs width, height and channels");
  const std::size_t w = positive_field(f[1], "width");
  const std::size_t h = positive_field(f[2], "height");
  const std::size_t c = positive_field(f[3], "channels");
  SpectralCube cube(w, h, c);
  std::vector<char> buf(cube.values.size() * 8);
  in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (static_cast<std::size_t>(in.gcount()) != buf.size()) {
    throw FormatError("CFM1: payload shorter than " + std::to_string(buf.size()) + " bytes");
  }
  expect_eof(in, "CFM1");
  for (std::size_t i = 0; i < cube.values.size(); ++i) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, buf.data() + 8 * i, 8);
    cube.values[i] = std::bit_cast<double>(to_le(bits));
  }
  return cube;
}

void write_cfm1(const std::filesystem::path& path, const SpectralCube& cube) {
  auto f = open_out(path);
  write_cfm1(f, cube);
  finish(f, path);
}

void write_cfm1(const std::filesystem::path& path, const Scene& scene) {
  write_cfm1(path, to_cube(scene));
}

SpectralCube read_cfm1(const std::filesystem::path& path) {
  auto f = open_in(path);
  return read_cfm1(f);
}

void write_cfmp1(std::ostream& out, const PatternSet& patterns) {
  out << "CFMP1 " << patterns.m() << ' ' << patterns.n() << ' '
      << ensemble_tag(patterns.ensemble().kind) << ' ' << (patterns.differential() ? 1 : 0)
      << '\n';
  const auto& packed = patterns.packed();
  out.write(reinterpret_cast<const char*>(packed.data()),
            static_cast<std::streamsize>(packed.size()));
}

PatternSet read_cfmp1(std::istream& in) {
  const auto f = header_fields(in, "CFMP1");
  if (f.size() != 5) throw FormatError("CFMP1 header needs M, N, ensemble and differential");
  const std::size_t m = positive_field(f[1], "M");
  const std::size_t n = positive_field(f[2], "N");
  Ensemble ensemble;
  ensemble.kind = parse_ensemble_tag(f[3]);
  if (f[4] != "0" && f[4] != "1") throw FormatError("CFMP1 differential flag must be 0 or 1");
  const std::size_t stride = (n + 7) / 8;
  std::vector<std::uint8_t> packed(m * stride);
  in.read(reinterpret_cast<char*>(packed.data()), static_cast<std::streamsize>(packed.size()));
  if (static_cast<std::size_t>(in.gcount()) != packed.size()) {
    throw FormatError("CFMP1: payload shorter than " + std::to_string(packed.size()) + " bytes");
  }
  expect_eof(in, "CFMP1");
  PatternSet set(m, n, ensemble, f[4] == "1", std::move(packed));
  if (ensemble.kind == Ensemble::Kind::hadamard_rows) set.detect_hadamard_structure();
  return set;
}

void write_cfmp1(const std::filesystem::path& path, const PatternSet& patterns) {
  auto f = open_out(path);
  write_cfmp1(f, patterns);
  finish(f, path);
}

PatternSet read_cfmp1(const std::filesystem::path& path) {
  auto f = open_in(path);
  return read_cfmp1(f);
}

std::filesystem::path sidecar_path(const std::filesystem::path& csv) {
  std::filesystem::path p = csv;
  p += ".json";
  return p;
}

void write_measurements(const std::filesystem::path& csv,
                        std::span<const MeasurementRecord> records) {
  if (records.empty()) throw ShapeError("no measurement records to write");
  {
    auto f = open_out(csv);
    f << "index,value\n";
    std::size_t k = 0;
    for (const auto& r : records) {
      for (double v : r.y) f << k++ << ',' << detail::format_double(v) << '\n';
    }
    finish(f, csv);
  }
  json meta;
  meta["format"] = "cfm-measurements-1";
  meta["channels"] = records.size();
  meta["width"] = records[0].width;
  meta["height"] = records[0].height;
  json chans = json::array();
  for (const auto& r : records) {
    json c;
    c["readings"] = r.y.size();
    c["channel"] = r.channel;
    c["patterns_hash"] = hex64(r.patterns_hash);
    c["differential_combined"] = r.differential_combined;
    c["noise"] = r.noise ? noise_to_json(*r.noise) : json(nullptr);
    c["total_flux"] = r.total_flux ? json(*r.total_flux) : json(nullptr);
    chans.push_back(std::move(c));
  }
  meta["records"] = std::move(chans);
  const auto side = sidecar_path(csv);
  auto f = open_out(side);
  f << meta.dump(2) << '\n';
  finish(f, side);
}

std::vector<MeasurementRecord> read_measurements(const std::filesystem::path& csv) {
  std::vector<double> values;
  {
    auto f = open_in(csv);
    std::string line;
    if (!std::getline(f, line) || line != "index,value") {
      throw FormatError("measurement csv '" + csv.string() + "': expected header 'index,value'");
    }
    std::size_t line_no = 1;
    while (std::getline(f, line)) {
      ++line_no;
      if (line.empty()) continue;
      const auto comma = line.find(',');
      std::size_t idx = 0;
      double v = 0.0;
      if (comma == std::string::npos ||
          !detail::parse_int(std::string_view(line).substr(0, comma), idx) ||
          !detail::parse_double(std::string_view(line).substr(comma + 1), v) ||
          idx != values.size()) {
        throw FormatError("measurement csv: malformed row at line " + std::to_string(line_no));
      }
      values.push_back(v);
    }
  }

  const auto side = sidecar_path(csv);
  if (!std::filesystem::exists(side)) {
    MeasurementRecord r;
    r.y = std::move(values);
    return {std::move(r)};
  }

  json meta;
  {
    auto f = open_in(side);
    try {
      meta = json::parse(f);
    } catch (const json::parse_error& e) {
      throw FormatError("measurement sidecar: " + std::string(e.what()));
    }
  }
  std::vector<MeasurementRecord> out;
  try {
    const std::size_t width = meta.value("width", std::size_t{0});
    const std::size_t height = meta.value("height", std::size_t{0});
    std::size_t offset = 0;
    for (const auto& c : meta.at("records")) {
      MeasurementRecord r;
      const std::size_t count = c.at("readings").get<std::size_t>();
      if (offset + count > values.size()) {
        throw FormatError("measurement sidecar lists more readings than the csv holds");
      }
      r.y.assign(values.begin() + static_cast<std::ptrdiff_t>(offset),
                 values.begin() + static_cast<std::ptrdiff_t>(offset + count));
      offset += count;
      r.channel = c.value("channel", out.size());
      r.patterns_hash = parse_hex64(c.at("patterns_hash").get<std::string>());
      r.differential_combined = c.value("differential_combined", false);
      if (!c.at("noise").is_null()) r.noise = noise_from_json(c.at("noise"));
      if (c.contains("total_flux") && !c.at("total_flux").is_null()) {
        r.total_flux = c.at("total_flux").get<double>();
      }
      r.width = width;
      r.height = height;
      out.push_back(std::move(r));
    }
    if (offset != values.size()) {
      throw FormatError("measurement csv holds readings the sidecar does not list");
    }
    if (meta.at("channels").get<std::size_t>() != out.size()) {
      throw FormatError("measurement sidecar channel count disagrees with its records");
    }
  } catch (const json::exception& e) {
    throw FormatError("measurement sidecar: " + std::string(e.what()));
  } catch (const ConfigError& e) {
    throw FormatError("measurement sidecar: " + std::string(e.what()));
  }
  return out;
}

template <class Image>
void write_diagnostics(const std::filesystem::path& csv, const RecoveryResult<Image>& result,
                       const std::string& solver) {
  {
    auto f = open_out(csv);
    f << "iter,objective,residual\n";
    for (std::size_t i = 0; i < result.objective_trace.size(); ++i) {
      const double res = i < result.residual_trace.size() ? result.residual_trace[i] : 0.0;
      f << i + 1 << ',' << detail::format_double(result.objective_trace[i]) << ','
        << detail::format_double(res) << '\n';
    }
    finish(f, csv);
  }
  json meta;
  meta["format"] = "cfm-diagnostics-1";
  meta["solver"] = solver;
  meta["lambda"] = result.lambda;
  meta["step"] = result.step;
  meta["iterations"] = result.iterations;
  meta["converged"] = result.converged;
  meta["residual_norm"] = result.residual_norm;
  const auto side = sidecar_path(csv);
  auto f = open_out(side);
  f << meta.dump(2) << '\n';
  finish(f, side);
}

template void write_diagnostics<Scene>(const std::filesystem::path&, const SceneRecovery&,
                                       const std::string&);
template void write_diagnostics<SpectralCube>(const std::filesystem::path&,
                                              const CubeRecovery&, const std::string&);

}  // namespace cfm
