#include "vortexlab/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace vortexlab::io {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

constexpr const char* kFormat = "vortexlab-state";
constexpr int kVersion = 1;

void put_le(std::string& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xff));
}

double get_le(const unsigned char* p) {
  std::uint64_t bits = 0;
  for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(p[b]) << (8 * b);
  return std::bit_cast<double>(bits);
}

ojson bundle_json(const ConnectionState& c) {
  ojson j;
  j["rank"] = c.bundle.rank;
  j["degree"] = c.bundle.degree;
  j["label"] = c.bundle.label;
  j["charges"] = c.charges;
  return j;
}

ConnectionState bundle_from(const ojson& j, const TorusGeometry& geom) {
  BundleSpec b{j.at("rank").get<int>(), j.at("degree").get<int>(), j.at("label").get<std::string>()};
  return background_connection(b, geom, j.at("charges").get<std::vector<int>>());
}

[[noreturn]] void corrupt(const std::string& what) { throw Error(ErrorCode::ArtifactCorrupt, what); }

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_atomic(const fs::path& path, const std::string& bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorCode::ArtifactMissing, "cannot open " + tmp.string() + " for writing");
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw Error(ErrorCode::ArtifactMissing, "write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::ArtifactMissing, "cannot read " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string encode_state(const FieldState& s, const TorusGeometry& geom, std::uint64_t seed) {
  validate(s, geom);
  ojson h;
  h["format"] = kFormat;
  h["version"] = kVersion;
  h["geometry"] = ojson::parse(geom.to_json());
  h["geometry_hash"] = geom.hash();
  h["seed"] = seed;
  h["bundle1"] = bundle_json(s.a1);
  if (s.a2) h["bundle2"] = bundle_json(*s.a2);
  h["dtype"] = "complex128-le";

  std::vector<std::pair<std::string, const MatField*>> arrays;
  for (int ax = 0; ax < geom.real_dim(); ++ax)
    arrays.push_back({"a1." + std::to_string(ax), &s.a1.a[ax]});
  if (s.a2)
    for (int ax = 0; ax < geom.real_dim(); ++ax)
      arrays.push_back({"a2." + std::to_string(ax), &s.a2->a[ax]});
  arrays.push_back({"phi", &s.phi});
  h["arrays"] = ojson::array();
  for (const auto& [name, m] : arrays)
    h["arrays"].push_back({{"name", name}, {"entries", m->size()}, {"points", geom.size()}});

  std::string out = h.dump();
  out.push_back('\n');
  for (const auto& [name, m] : arrays)
    for (const Field& f : *m)
      for (const cplx& z : f) {
        put_le(out, z.real());
        put_le(out, z.imag());
      }
  return out;
}

void save_state(const fs::path& path, const FieldState& s, const TorusGeometry& geom,
                std::uint64_t seed) {
  write_atomic(path, encode_state(s, geom, seed));
}

LoadedState decode_state(const std::string& bytes) {
  const auto nl = bytes.find('\n');
  if (nl == std::string::npos) corrupt("missing header line");
  ojson h;
  try {
    h = ojson::parse(bytes.substr(0, nl));
  } catch (const nlohmann::json::exception& e) {
    corrupt(std::string("header is not JSON: ") + e.what());
  }
  LoadedState out;
  try {
    if (h.at("format") != kFormat || h.at("version") != kVersion) corrupt("unknown container format");
    const std::string gtext = h.at("geometry").dump();
    out.geometry = std::make_shared<const TorusGeometry>(TorusGeometry::from_json(gtext));
    if (out.geometry->hash() != h.at("geometry_hash").get<std::string>())
      corrupt("geometry hash mismatch");
    out.seed = h.at("seed").get<std::uint64_t>();
    const auto& g = *out.geometry;
    out.state.a1 = bundle_from(h.at("bundle1"), g);
    if (h.contains("bundle2")) out.state.a2 = bundle_from(h.at("bundle2"), g);
    out.state.phi = mat::zeros(out.state.rows(), out.state.cols(), g.size());

    std::vector<MatField*> targets;
    for (auto& m : out.state.a1.a) targets.push_back(&m);
    if (out.state.a2)
      for (auto& m : out.state.a2->a) targets.push_back(&m);
    targets.push_back(&out.state.phi);
    const auto& arrays = h.at("arrays");
    if (arrays.size() != targets.size()) corrupt("array count does not match the bundles");

    std::size_t need = 0;
    for (std::size_t i = 0; i < targets.size(); ++i) {
      if (arrays[i].at("entries").get<std::size_t>() != targets[i]->size() ||
          arrays[i].at("points").get<std::size_t>() != g.size())
        corrupt("array " + arrays[i].at("name").get<std::string>() + " has the wrong shape");
      need += targets[i]->size() * g.size() * 16;
    }
    if (bytes.size() - nl - 1 != need) corrupt("payload size mismatch");

    auto p = reinterpret_cast<const unsigned char*>(bytes.data()) + nl + 1;
    for (MatField* m : targets)
      for (Field& f : *m)
        for (cplx& z : f) {
          z = {get_le(p), get_le(p + 8)};
          p += 16;
        }
  } catch (const nlohmann::json::exception& e) {
    corrupt(std::string("bad header: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ArtifactCorrupt) throw;
    corrupt(e.what());
  }
  return out;
}

LoadedState load_state(const fs::path& path) {
  if (!fs::exists(path)) throw Error(ErrorCode::ArtifactMissing, path.string() + " does not exist");
  return decode_state(read_file(path));
}

std::string certificate_json(const VortexSolution& sol, const TorusGeometry& geom,
                             std::uint64_t seed, double residual_tol) {
  ojson j;
  j["status"] = sol.status;
  j["residual_tol"] = residual_tol;
  j["iterations"] = sol.iterations;
  j["residuals"] = ojson::object();
  for (const auto& [name, v] : sol.residuals.values) j["residuals"][name] = v;
  j["residual_max"] = sol.residuals.max();
  j["energy"] = ojson::parse(to_json(sol.energy));
  j["certificate_gap"] = sol.certificate_gap;
  j["params"] = ojson::parse(to_json(sol.params));
  j["geometry"] = ojson::parse(geom.to_json());
  j["geometry_hash"] = geom.hash();
  j["seed"] = seed;
  return j.dump(2) + "\n";
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out =
      "tau,total,curvature1,curvature2,kinetic,potential1,potential2,minimum,defect,threshold,status\n";
  for (const auto& r : rows) {
    const double nan = std::nan("");
    const auto& e = r.energy;
    const double vals[] = {r.has_energy ? e.total : nan,        r.has_energy ? e.curvature1 : nan,
                           r.has_energy ? e.curvature2 : nan,   r.has_energy ? e.kinetic : nan,
                           r.has_energy ? e.potential1 : nan,   r.has_energy ? e.potential2 : nan,
                           r.has_energy ? e.topological_minimum : nan,
                           r.has_energy ? e.defect : nan};
    out += format_double(r.tau);
    for (double v : vals) out += "," + format_double(v);
    out += "," + r.threshold + "," + r.status + "\n";
  }
  return out;
}

}  // namespace vortexlab::io
