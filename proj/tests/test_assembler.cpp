#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <unistd.h>
#include <vector>

#include "spt/assembler.hpp"
#include "spt/geometry.hpp"
#include "spt/interaction.hpp"
#include "spt/model.hpp"
#include "spt/pauli.hpp"
#include "spt/spectrum.hpp"

using namespace spt;
namespace fs = std::filesystem;

namespace {

template <typename E, typename F>
bool throws_with(F&& f, const std::string& fragment) {
  try {
    f();
  } catch (const E& e) {
    return std::string(e.what()).find(fragment) != std::string::npos;
  } catch (...) {
    return false;
  }
  return false;
}

// Scratch directory unique to this process, removed on destruction.
struct TempDir {
  fs::path path;
  TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / (tag + "-" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string str() const { return path.string(); }
};

std::string write_file(const TempDir& dir, const std::string& name, const std::string& body) {
  const fs::path p = dir.path / name;
  std::ofstream out(p);
  out << body;
  return p.string();
}

SystemSpec harmonic_spec(int n_up, int n_down, double lambda) {
  SystemSpec spec;
  spec.n_up = n_up;
  spec.n_down = n_down;
  spec.interaction = InteractionModel::harmonic_pair(lambda);
  return spec;
}

SweepRow make_row(int n, double energy, bool ok = true) {
  SweepRow row;
  row.n = n;
  row.energy.total_unscaled = energy;
  row.ok = ok;
  return row;
}

BenchmarkRecord make_record(int n, double e_ref, double sigma, std::string label = "ref") {
  BenchmarkRecord rec;
  rec.n_particles = n;
  rec.energy_ref = e_ref;
  rec.uncertainty = sigma;
  rec.source_label = std::move(label);
  return rec;
}

}  // namespace

TEST_CASE("energy assembly on a hand-built spectrum") {
  const ScalingFrame frame = build_scaling_frame(3, 1.0);

  SymmetricMinimum minimum;
  minimum.n = 4;
  minimum.e_infinity = 10.0;

  NormalModeSpectrum modes;
  modes.n = 4;
  modes.omega = {{"0+", 4.0}, {"0-", 3.0}, {"1+", 4.4}, {"1-", 3.6}, {"2", 3.2}};
  modes.multiplicity = {{"0+", 1}, {"0-", 1}, {"1+", 3}, {"1-", 3}, {"2", 2}};
  modes.v0 = -7.0;

  OccupancyState occ;
  occ.n0m = 2;
  occ.n2 = 1;

  const EnergyResult e = assemble_energy(minimum, modes, occ, frame);

  // Per-mode scaled contributions delta * (n + d/2) * omega with delta = 1/3:
  //   0+: 0.5*4/3   0-: 2.5*3/3   1+: 1.5*4.4/3   1-: 1.5*3.6/3   2: 2*3.2/3
  // plus v0 -> -7/3. Sum: (2 + 7.5 + 6.6 + 5.4 + 6.4 - 7)/3 = 20.9/3.
  REQUIRE(e.breakdown.size() == 6);
  CHECK(e.breakdown.at("0+") == doctest::Approx(2.0 / 3.0).epsilon(1e-13));
  CHECK(e.breakdown.at("0-") == doctest::Approx(2.5).epsilon(1e-13));
  CHECK(e.breakdown.at("1+") == doctest::Approx(2.2).epsilon(1e-13));
  CHECK(e.breakdown.at("1-") == doctest::Approx(1.8).epsilon(1e-13));
  CHECK(e.breakdown.at("2") == doctest::Approx(6.4 / 3.0).epsilon(1e-13));
  CHECK(e.breakdown.at("v0") == doctest::Approx(-7.0 / 3.0).epsilon(1e-13));
  CHECK(e.e_infinity_scaled == doctest::Approx(10.0).epsilon(1e-15));
  CHECK(e.harmonic_term_scaled == doctest::Approx(20.9 / 3.0).epsilon(1e-13));
  CHECK(e.total_scaled == doctest::Approx(10.0 + 20.9 / 3.0).epsilon(1e-13));
  CHECK(e.total_unscaled == doctest::Approx(25.45).epsilon(1e-13));

  double breakdown_sum = 0.0;
  for (const auto& [label, value] : e.breakdown) breakdown_sum += value;
  CHECK(breakdown_sum == doctest::Approx(e.harmonic_term_scaled).epsilon(1e-14));

  // Particle-count and multiplicity bookkeeping is validated.
  NormalModeSpectrum wrong_n = modes;
  wrong_n.n = 5;
  CHECK(throws_with<std::invalid_argument>(
      [&] { assemble_energy(minimum, wrong_n, occ, frame); }, "particle-count mismatch"));
  NormalModeSpectrum wrong_mult = modes;
  wrong_mult.multiplicity["2"] = 3;
  CHECK(throws_with<std::invalid_argument>(
      [&] { assemble_energy(minimum, wrong_mult, occ, frame); }, "multiplicities"));
}

TEST_CASE("pipeline resolves parity-obstructed fillings by promotion") {
  PipelineOptions opts;
  opts.use_cache = false;

  // N = 3: the minimal filling carries one angular shell quantum (odd), so
  // one extra shell quantum must be promoted.
  const PipelineResult r = run_pipeline(harmonic_spec(2, 1, 0.1), opts);
  CHECK_FALSE(r.from_cache);
  CHECK(r.energy.promoted_quanta == 1);
  CHECK(r.selection.feasible);
  CHECK(r.selection.configuration.angular_sum % 2 == 0);

  // Internal consistency of the assembled result.
  double breakdown_sum = 0.0;
  for (const auto& [label, value] : r.energy.breakdown) breakdown_sum += value;
  CHECK(breakdown_sum == doctest::Approx(r.energy.harmonic_term_scaled).epsilon(1e-12));
  CHECK(r.energy.total_scaled ==
        doctest::Approx(r.energy.e_infinity_scaled + r.energy.harmonic_term_scaled)
            .epsilon(1e-14));
  CHECK(r.energy.total_unscaled ==
        doctest::Approx(unscale_energy(r.energy.total_scaled, r.frame)).epsilon(1e-14));
}

TEST_CASE("pipeline occupancy override reproduces the symmetric closed form") {
  // With every occupation number zero the harmonic-pair model has the exact
  // energy (3/2) + (3/2)(N-1) sqrt(1 + N lambda).
  PipelineOptions opts;
  opts.use_cache = false;
  opts.occupancy_override = OccupancyState{};

  const double lambda = 0.1;
  const PipelineResult r = run_pipeline(harmonic_spec(2, 1, lambda), opts);
  const double closed = 1.5 + 1.5 * 2.0 * std::sqrt(1.0 + 3.0 * lambda);
  CHECK(r.energy.total_unscaled == doctest::Approx(closed).epsilon(1e-8));
  CHECK(r.selection.quanta_energy == 0.0);
  CHECK(r.energy.promoted_quanta == 0);
}

TEST_CASE("pipeline failures carry the stage name") {
  SystemSpec bad;
  bad.n_up = 0;
  bad.n_down = 0;
  CHECK(throws_with<std::invalid_argument>([&] { run_pipeline(bad); }, "stage validate:"));
}

TEST_CASE("pipeline dense-oracle spot check runs clean") {
  PipelineOptions opts;
  opts.use_cache = false;
  opts.oracle_check = true;
  const PipelineResult r = run_pipeline(harmonic_spec(2, 2, 0.1), opts);
  CHECK_FALSE(r.from_cache);
  CHECK(r.spectrum.omega.size() == 5);
}

TEST_CASE("pipeline cache round trip") {
  TempDir dir("spt-test-cache");
  PipelineOptions opts;
  opts.cache_dir = dir.str();

  const SystemSpec spec = harmonic_spec(2, 1, 0.1);
  const PipelineResult first = run_pipeline(spec, opts);
  CHECK_FALSE(first.from_cache);
  CHECK(cache_list(dir.str()).size() == 1);

  const PipelineResult second = run_pipeline(spec, opts);
  CHECK(second.from_cache);
  CHECK(second.energy.total_unscaled ==
        doctest::Approx(first.energy.total_unscaled).epsilon(1e-12));
  CHECK(second.energy.promoted_quanta == first.energy.promoted_quanta);
  CHECK(second.selection.occupancy == first.selection.occupancy);
  CHECK(second.minimum.r_infinity ==
        doctest::Approx(first.minimum.r_infinity).epsilon(1e-12));
  REQUIRE(second.spectrum.omega.size() == first.spectrum.omega.size());
  for (const auto& [mode, omega] : first.spectrum.omega)
    CHECK(second.spectrum.omega.at(mode) == doctest::Approx(omega).epsilon(1e-12));
  // Mode metadata is reattached on restore.
  CHECK(second.spectrum.multiplicity == first.spectrum.multiplicity);

  // A different interaction strength misses the cache.
  const PipelineResult other = run_pipeline(harmonic_spec(2, 1, 0.2), opts);
  CHECK_FALSE(other.from_cache);
  CHECK(cache_list(dir.str()).size() == 2);

  // Requesting the dense oracle forces recomputation even on a cache hit.
  PipelineOptions oracle_opts = opts;
  oracle_opts.oracle_check = true;
  CHECK_FALSE(run_pipeline(spec, oracle_opts).from_cache);

  CHECK(cache_clear(dir.str()) == 2);
  CHECK(cache_list(dir.str()).empty());

  // With caching disabled nothing is written.
  PipelineOptions no_cache = opts;
  no_cache.use_cache = false;
  CHECK_FALSE(run_pipeline(spec, no_cache).from_cache);
  CHECK(cache_list(dir.str()).empty());
}

TEST_CASE("default cache directory honors the environment override") {
  const char* saved = std::getenv("SPT_CACHE_DIR");
  const std::string saved_value = saved ? saved : "";

  ::setenv("SPT_CACHE_DIR", "/tmp/spt-env-cache-test", 1);
  CHECK(default_cache_dir() == "/tmp/spt-env-cache-test");
  ::unsetenv("SPT_CACHE_DIR");
  CHECK(default_cache_dir() != "/tmp/spt-env-cache-test");
  CHECK(!default_cache_dir().empty());

  if (saved) ::setenv("SPT_CACHE_DIR", saved_value.c_str(), 1);
}

TEST_CASE("reference table parsing") {
  TempDir dir("spt-test-csv");

  SUBCASE("valid file with comments and header, sorted on load") {
    const std::string path = write_file(dir, "refs.csv",
                                        "# benchmark energies\n"
                                        "N,E_ref,sigma,source\n"
                                        "6,8.48,0.08,AFMC\n"
                                        "\n"
                                        "3,4.27,0.05,FN-DMC\n");
    const auto records = load_reference_csv(path);
    REQUIRE(records.size() == 2);
    CHECK(records[0].n_particles == 3);
    CHECK(records[0].energy_ref == doctest::Approx(4.27));
    CHECK(records[0].uncertainty == doctest::Approx(0.05));
    CHECK(records[0].source_label == "FN-DMC");
    CHECK(records[1].n_particles == 6);
    CHECK(records[1].energy_ref == doctest::Approx(8.48));
  }

  SUBCASE("missing file") {
    CHECK(throws_with<std::runtime_error>(
        [&] { load_reference_csv((dir.path / "absent.csv").string()); }, "cannot open"));
  }

  SUBCASE("short row reports the line number") {
    const std::string path = write_file(dir, "short.csv", "N,E_ref,sigma,source\n4,5.0,0.1\n");
    CHECK(throws_with<std::runtime_error>([&] { load_reference_csv(path); },
                                          "line 2: expected 4 comma-separated fields"));
  }

  SUBCASE("malformed numeric field") {
    const std::string path = write_file(dir, "badnum.csv", "4,abc,0.1,src\n");
    CHECK(throws_with<std::runtime_error>([&] { load_reference_csv(path); },
                                          "line 1: malformed numeric field"));
    const std::string path2 = write_file(dir, "badnum2.csv", "4x,5.0,0.1,src\n");
    CHECK(throws_with<std::runtime_error>([&] { load_reference_csv(path2); },
                                          "malformed numeric field"));
  }

  SUBCASE("particle number must be positive") {
    const std::string path = write_file(dir, "badn.csv", "0,5.0,0.1,src\n");
    CHECK(throws_with<std::runtime_error>([&] { load_reference_csv(path); },
                                          "particle number must be >= 1"));
  }
}

TEST_CASE("sweep sorts, deduplicates and attaches first differences") {
  PipelineOptions opts;
  opts.use_cache = false;
  const SystemSpec tmpl = harmonic_spec(1, 1, 0.1);

  const auto rows = sweep(tmpl, {4, 3, 6, 3}, opts);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].n == 3);
  CHECK(rows[1].n == 4);
  CHECK(rows[2].n == 6);
  for (const auto& row : rows) CHECK(row.ok);
  CHECK(rows[0].first_difference == 0.0);
  CHECK(rows[1].first_difference ==
        doctest::Approx(rows[1].energy.total_unscaled - rows[0].energy.total_unscaled)
            .epsilon(1e-14));
  CHECK(rows[2].first_difference ==
        doctest::Approx(rows[2].energy.total_unscaled - rows[1].energy.total_unscaled)
            .epsilon(1e-14));
  CHECK(rows[0].energy.total_unscaled < rows[1].energy.total_unscaled);
  CHECK(rows[1].energy.total_unscaled < rows[2].energy.total_unscaled);

  CHECK_THROWS_AS(sweep(tmpl, {}, opts), std::invalid_argument);
  CHECK_THROWS_AS(sweep(tmpl, {1, 4}, opts), std::invalid_argument);
}

TEST_CASE("comparison report against benchmark records") {
  const std::vector<BenchmarkRecord> refs = {
      make_record(4, 5.2, 0.1), make_record(6, 7.0, 0.1), make_record(20, 40.0, 0.5)};

  SUBCASE("within-tolerance bookkeeping and growth flag") {
    // Failed rows and unmatched particle numbers are skipped.
    const std::vector<SweepRow> table = {make_row(4, 5.0), make_row(6, 8.0),
                                         make_row(7, 12.0, /*ok=*/false)};
    const ComparisonReport report = compare(table, refs);
    REQUIRE(report.rows.size() == 2);
    CHECK_FALSE(report.empty_overlap);

    // |5.0 - 5.2| = 0.2 <= 0.1 + 0.3 + 0.05*5.2 = 0.66 -> within.
    CHECK(report.rows[0].n == 4);
    CHECK(report.rows[0].abs_dev == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(report.rows[0].rel_dev == doctest::Approx(0.2 / 5.2).epsilon(1e-12));
    CHECK(report.rows[0].within_tolerance);
    // |8.0 - 7.0| = 1.0 > 0.1 + 0.3 + 0.35 = 0.75 -> outside.
    CHECK(report.rows[1].n == 6);
    CHECK_FALSE(report.rows[1].within_tolerance);

    CHECK(report.n_within == 1);
    CHECK(report.max_abs_dev == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(report.deviation_grows_with_n);  // 0.2 at N=4 -> 1.0 at N=6

    // Wider absolute tolerance admits the second row too.
    const ComparisonReport loose = compare(table, refs, 1.0, 0.0);
    CHECK(loose.n_within == 2);
  }

  SUBCASE("shrinking deviations clear the growth flag") {
    const std::vector<SweepRow> table = {make_row(4, 6.2), make_row(6, 7.2)};
    const ComparisonReport report = compare(table, refs);
    REQUIRE(report.rows.size() == 2);
    CHECK(report.rows[0].abs_dev == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(report.rows[1].abs_dev == doctest::Approx(0.2).epsilon(1e-12));
    CHECK_FALSE(report.deviation_grows_with_n);
  }

  SUBCASE("no overlapping particle numbers") {
    const ComparisonReport report = compare({make_row(5, 7.0)}, refs);
    CHECK(report.empty_overlap);
    CHECK(report.rows.empty());
    CHECK(report.n_within == 0);
    CHECK_FALSE(report.deviation_grows_with_n);
  }
}

TEST_CASE("zero-range extrapolation over tuned wells") {
  PipelineOptions opts;
  opts.use_cache = false;

  SystemSpec tmpl;
  tmpl.n_up = 2;
  tmpl.n_down = 1;
  tmpl.interaction = InteractionModel::square_well(0.01, 0.0);  // depth resolved per radius

  const ExtrapolationResult fit = extrapolate_zero_range(tmpl, {0.02, 0.005, 0.01}, opts);
  REQUIRE(fit.points.size() == 3);
  CHECK(fit.points[0].first == doctest::Approx(0.005));
  CHECK(fit.points[1].first == doctest::Approx(0.01));
  CHECK(fit.points[2].first == doctest::Approx(0.02));
  CHECK(fit.monotone);
  CHECK((fit.order == 1 || fit.order == 2));
  // The well radii are tiny on the trap scale: E(R) is nearly linear, the
  // intercept sits within the sampled spread of the data.
  const double span = std::abs(fit.points[2].second - fit.points[0].second);
  CHECK(fit.residual <= 0.1 * std::max(span, 1e-12));
  CHECK(std::abs(fit.e0 - fit.points[0].second) <= span + 1e-9);

  CHECK_THROWS_AS(extrapolate_zero_range(tmpl, {0.01, 0.02}, opts), std::invalid_argument);
  CHECK_THROWS_AS(extrapolate_zero_range(tmpl, {0.0, 0.01, 0.02}, opts), std::invalid_argument);
  CHECK_THROWS_AS(
      extrapolate_zero_range(harmonic_spec(2, 1, 0.1), {0.005, 0.01, 0.02}, opts),
      std::invalid_argument);
}
