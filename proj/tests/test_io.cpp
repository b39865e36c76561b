#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "vortexlab/io.hpp"

using namespace vortexlab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const char* name) {
  auto p = fs::temp_directory_path() / "vortexlab_test_io" / name;
  fs::remove_all(p.parent_path() / name);
  return p;
}

void check_same(const FieldState& a, const FieldState& b) {
  REQUIRE(a.a1.a.size() == b.a1.a.size());
  CHECK(a.a1.charges == b.a1.charges);
  CHECK(a.a1.bundle.degree == b.a1.bundle.degree);
  for (std::size_t ax = 0; ax < a.a1.a.size(); ++ax) CHECK(a.a1.a[ax] == b.a1.a[ax]);
  CHECK(a.is_triple() == b.is_triple());
  if (a.a2)
    for (std::size_t ax = 0; ax < a.a2->a.size(); ++ax) CHECK(a.a2->a[ax] == b.a2->a[ax]);
  CHECK(a.phi == b.phi);
}

}  // namespace

TEST_CASE("state container round trip is bit exact") {
  auto g = build_torus({1.0}, {16}, 1.5);
  for (auto b2 : {std::optional<BundleSpec>{}, std::optional<BundleSpec>{BundleSpec{1, 0, "E2"}}}) {
    auto s = random_state(11, 4.0, {2, 2, "E1"}, b2, *g);
    auto bytes = io::encode_state(s, *g, 42);
    auto back = io::decode_state(bytes);
    CHECK(*back.geometry == *g);
    CHECK(back.seed == 42);
    check_same(s, back.state);
    CHECK(io::encode_state(back.state, *back.geometry, 42) == bytes);
  }
}

TEST_CASE("files are written atomically and read back") {
  auto g = build_torus({1.0}, {8});
  auto s = random_state(2, 4.0, {1, 1, "L"}, std::nullopt, *g);
  auto path = scratch("atomic") / "state.bin";
  io::save_state(path, s, *g, 7);
  CHECK(fs::exists(path));
  CHECK_FALSE(fs::exists(path.string() + ".tmp"));
  check_same(s, io::load_state(path).state);
}

TEST_CASE("tampering and missing files are detected") {
  auto g = build_torus({1.0}, {8});
  auto s = random_state(3, 4.0, {1, 1, "L"}, std::nullopt, *g);
  auto bytes = io::encode_state(s, *g, 1);

  auto expect = [](const std::string& b, ErrorCode code) {
    try {
      io::decode_state(b);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == code);
    }
  };
  auto hash_at = bytes.find(g->hash());
  REQUIRE(hash_at != std::string::npos);
  std::string bad_hash = bytes;
  bad_hash[hash_at] = bad_hash[hash_at] == '0' ? '1' : '0';
  expect(bad_hash, ErrorCode::ArtifactCorrupt);

  std::string bad_geom = bytes;
  auto grid_at = bad_geom.find("\"grid\":[8]");
  REQUIRE(grid_at != std::string::npos);
  bad_geom.replace(grid_at, 10, "\"grid\":[9]");
  expect(bad_geom, ErrorCode::ArtifactCorrupt);

  expect(bytes.substr(0, bytes.size() - 3), ErrorCode::ArtifactCorrupt);
  expect("not a container", ErrorCode::ArtifactCorrupt);

  try {
    io::load_state(scratch("missing") / "nothing.bin");
    FAIL("expected ArtifactMissing");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ArtifactMissing);
  }
}

TEST_CASE("certificate and sweep csv") {
  auto g = build_torus({1.0}, {16});
  auto v = solve_abelian_vortex({1, 0, "L"}, 2.0, *g, {});
  auto cert = io::certificate_json(v, *g, 5);
  CHECK(cert.find("\"residuals\"") != std::string::npos);
  CHECK(cert.find("\"certificate_gap\"") != std::string::npos);
  CHECK(cert == io::certificate_json(v, *g, 5));

  io::SweepRow ok{1.0, "Solvable", "converged", true, v.energy};
  io::SweepRow bad{0.5, "Obstructed", "Diverged", false, {}};
  auto csv = io::sweep_csv({ok, bad});
  CHECK(csv.rfind("tau,total,", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
  CHECK(csv.find("0.5,nan,") != std::string::npos);
  CHECK(io::format_double(0.1) == "0.1");
  CHECK(std::stod(io::format_double(M_PI)) == M_PI);
}
