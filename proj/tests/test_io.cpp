#include <doctest.h>

#include "h22/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace h22;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("h22_test_" + std::to_string(std::rand()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("config round trip with comments and overrides") {
  TempDir tmp;
  {
    std::ofstream out(tmp.file("run.cfg"));
    out << "# comment line\n"
        << "wbar = 0.5\n"
        << "rho=2.5   # trailing comment\n"
        << "level = 9\n"
        << "seed = 1234\n"
        << "suite = laplace\n";
  }
  const RunConfig c = load_config(tmp.file("run.cfg"));
  CHECK(c.wbar == 0.5);
  CHECK(c.rho == 2.5);
  CHECK(c.level == 9);
  CHECK(c.seed == 1234);
  CHECK(c.suite == "laplace");
  c.validate();

  save_config(c, tmp.file("saved.cfg"));
  const RunConfig c2 = load_config(tmp.file("saved.cfg"));
  CHECK(c2.wbar == c.wbar);
  CHECK(c2.rho == c.rho);
  CHECK(c2.level == c.level);

  {
    std::ofstream out(tmp.file("bad.cfg"));
    out << "nonsense = 1\n";
  }
  CHECK_THROWS(load_config(tmp.file("bad.cfg")));
}

TEST_CASE("realization save -> load -> save is byte identical") {
  TempDir tmp;
  CascadeRealization r = init_root({1.0, 2.0, 0}, 99, 3, 8);
  grow_to_level(r, 6);
  save_realization(r, tmp.file("r.json"));
  const CascadeRealization r2 = load_realization(tmp.file("r.json"));
  save_realization(r2, tmp.file("r2.json"));
  CHECK(slurp(tmp.file("r.json")) == slurp(tmp.file("r2.json")));

  // loaded realization carries identical numbers
  CHECK(r2.gamma == r.gamma);
  for (int n = 0; n <= 6; ++n)
    CHECK((r2.levels[size_t(n)].u - r.levels[size_t(n)].u).cwiseAbs().maxCoeff() == 0.0);

  // growth continues identically after reload
  CascadeRealization r3 = r2;
  grow_one_level(r3);
  CascadeRealization ref = r;
  grow_one_level(ref);
  CHECK((r3.levels[7].u - ref.levels[7].u).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("loading re-validates invariants") {
  TempDir tmp;
  CascadeRealization r = init_root({1.0, 2.0, 0}, 7, 1, 6);
  grow_to_level(r, 4);
  nlohmann::ordered_json j = realization_to_json(r);
  j["levels"][3]["beta"][1] = j["levels"][3]["beta"][1].get<double>() * 1.02;
  {
    std::ofstream out(tmp.file("bad.json"));
    out << j.dump();
  }
  CHECK_THROWS_AS(load_realization(tmp.file("bad.json")), consistency_error);

  j["format_version"] = 77;
  {
    std::ofstream out(tmp.file("vers.json"));
    out << j.dump();
  }
  CHECK_THROWS(load_realization(tmp.file("vers.json")));
}

TEST_CASE("measure CSV: row count, conservation of the mass column") {
  CascadeRealization r = init_root({1.0, 2.0, 0}, 3, 3, 6);
  grow_to_level(r, 5);
  const EmpiricalMeasure m = measure_density(r, 5);
  std::ostringstream csv;
  write_measure_csv(m, csv);
  std::istringstream in(csv.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "cell,left,density,mass");
  long rows = 0;
  double mass_sum = 0.0;
  while (std::getline(in, line)) {
    ++rows;
    const auto last = line.rfind(',');
    mass_sum += std::stod(line.substr(last + 1));
  }
  CHECK(rows == 32);
  CHECK(mass_sum == doctest::Approx(r.total_mass()).epsilon(1e-10));

  // depth 0: single row carrying the full mass
  std::ostringstream csv0;
  write_measure_csv(measure_density(r, 0), csv0);
  std::istringstream in0(csv0.str());
  std::getline(in0, line);
  std::getline(in0, line);
  CHECK(std::stod(line.substr(line.rfind(',') + 1)) == doctest::Approx(r.total_mass()));
  CHECK_FALSE(std::getline(in0, line));
}

TEST_CASE("SVG output is self-contained") {
  CascadeRealization r = init_root({1.0, 2.0, 0}, 3, 3, 5);
  grow_to_level(r, 4);
  std::ostringstream svg;
  write_measure_svg(measure_density(r, 4), svg);
  const std::string s = svg.str();
  CHECK(s.find("<svg") == 0);
  CHECK(s.find("</svg>") != std::string::npos);
  CHECK(s.find("rect") != std::string::npos);
}
