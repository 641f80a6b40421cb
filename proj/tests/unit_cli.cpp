#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "sslab/boundary.hpp"
#include "sslab/runner.hpp"

using namespace sslab;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::vector<std::pair<std::string, std::string>> tiny_run_pairs() {
  return parse_flat_config(
      "scheme = truncated_gaussian\n"
      "total_steps = 20\n"
      "eval_interval = 10\n"
      "n_per_moon = 30\n"
      "unlabeled_batch = 8\n"
      "hidden_dims = 8,8\n"
      "seed = 5\n");
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("flat config grammar") {
  SUBCASE("comments, blanks, and whitespace") {
    const auto pairs = parse_flat_config(
        "# a comment\n"
        "\n"
        "scheme = threshold  # trailing comment\n"
        "  tau =   0.9\n");
    REQUIRE(pairs.size() == 2);
    CHECK(pairs[0] == std::pair<std::string, std::string>{"scheme", "threshold"});
    CHECK(pairs[1] == std::pair<std::string, std::string>{"tau", "0.9"});
  }
  SUBCASE("missing equals rejected") {
    CHECK_THROWS_AS(parse_flat_config("scheme threshold\n"), ConfigError);
  }
  SUBCASE("duplicate keys rejected") {
    CHECK_THROWS_AS(parse_flat_config("tau = 0.9\ntau = 0.8\n"), ConfigError);
  }
  SUBCASE("unknown key named in the error") {
    try {
      config_from_pairs(parse_flat_config("foo = 1\n"));
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("foo") != std::string::npos);
    }
  }
  SUBCASE("typed values parse and land in the config") {
    const auto cfg = config_from_pairs(parse_flat_config(
        "scheme = threshold\n"
        "tau = 0.87\n"
        "lambda_max = 2\n"
        "use_da = true\n"
        "hidden_dims = 16,8\n"
        "seed = 42\n"));
    const auto* threshold = std::get_if<Threshold>(&cfg.scheme);
    REQUIRE(threshold != nullptr);
    CHECK(threshold->tau == 0.87);
    CHECK(threshold->lambda_max == 2.0);
    CHECK(cfg.use_da);
    CHECK(cfg.hidden_dims == std::vector<int>{16, 8});
    CHECK(cfg.seed == 42);
  }
  SUBCASE("invalid values rejected with the key named") {
    CHECK_THROWS_AS(config_from_pairs(parse_flat_config("lr = fast\n")), ConfigError);
    CHECK_THROWS_AS(config_from_pairs(parse_flat_config("ua_target = sideways\n")),
                    ConfigError);
    CHECK_THROWS_AS(config_from_pairs(parse_flat_config("scheme = magic\n")),
                    ConfigError);
  }
  SUBCASE("overrides replace or append") {
    auto pairs = parse_flat_config("tau = 0.9\n");
    apply_override(pairs, "tau=0.5");
    apply_override(pairs, "seed=9");
    const auto cfg = config_from_pairs(pairs);
    CHECK(cfg.seed == 9);
  }
}

TEST_CASE("run id is stable and seed-sensitive") {
  const auto cfg = config_from_pairs(tiny_run_pairs());
  CHECK(run_id_string(cfg) == run_id_string(cfg));

  auto pairs = tiny_run_pairs();
  apply_override(pairs, "seed=6");
  const auto other = config_from_pairs(pairs);
  CHECK(run_id_string(cfg) != run_id_string(other));

  // canonical text round-trips through the parser
  const auto reparsed = config_from_pairs(parse_flat_config(canonical_config_text(cfg)));
  CHECK(run_id_string(reparsed) == run_id_string(cfg));
}

TEST_CASE("run directory artifacts and byte-identical reruns") {
  TempDir dir_a("sslab_test_run_a");
  TempDir dir_b("sslab_test_run_b");
  const auto cfg = config_from_pairs(tiny_run_pairs());

  const auto a = run_to_directory(cfg, dir_a.path.string());
  const auto b = run_to_directory(cfg, dir_b.path.string());

  for (const char* name : {"metrics.csv", "outcomes_final.csv", "dataset.csv",
                           "model_final.txt", "model_ema.txt"}) {
    CAPTURE(name);
    REQUIRE(fs::exists(dir_a.path / name));
    REQUIRE(slurp(dir_a.path / name) == slurp(dir_b.path / name));
  }

  const std::string metrics = slurp(dir_a.path / "metrics.csv");
  CHECK(metrics.rfind(
            "step,sup_loss,unsup_loss,quantity,quality,eval_error,mu_hat,var_hat,qc_0,"
            "qc_1",
            0) == 0);
  CHECK(a.run_id == b.run_id);

  SUBCASE("outcomes round-trip through the reader") {
    const auto outcomes = read_outcomes_csv((dir_a.path / "outcomes_final.csv").string());
    REQUIRE(!outcomes.empty());
    CHECK(outcomes.front().true_label.has_value());
  }
  SUBCASE("manifest carries the id and the config snapshot") {
    const auto manifest = read_manifest((dir_a.path / "manifest").string());
    CHECK(manifest.run_id == a.run_id);
    const auto cfg2 = config_from_pairs(parse_flat_config(manifest.config_text));
    CHECK(run_id_string(cfg2) == a.run_id);
  }
}

TEST_CASE("sweep grid") {
  TempDir dir("sslab_test_sweep");
  auto base = tiny_run_pairs();
  apply_override(base, "total_steps=10");

  SweepAxis scheme_axis{"scheme", {"fixed", "threshold"}};
  const auto result = run_sweep(base, {scheme_axis}, {1, 2, 3}, dir.path.string(), 2);

  CHECK(result.cells.size() == 6);
  CHECK(result.failures == 0);
  int dirs = 0;
  for (const auto& cell : result.cells) {
    REQUIRE(cell.status == "ok");
    if (fs::exists(dir.path / cell.dir_name / "metrics.csv")) ++dirs;
  }
  CHECK(dirs == 6);

  const std::string summary = slurp(dir.path / "summary.csv");
  CHECK(std::count(summary.begin(), summary.end(), '\n') == 7);  // header + 6 rows
  REQUIRE(fs::exists(dir.path / "summary_agg.csv"));
  const std::string agg = slurp(dir.path / "summary_agg.csv");
  CHECK(std::count(agg.begin(), agg.end(), '\n') == 3);  // header + 2 groups

  SUBCASE("failed cells are recorded, sweep continues") {
    SweepAxis bad_axis{"scheme", {"fixed", "nonsense"}};
    const auto mixed = run_sweep(base, {bad_axis}, {1}, (dir.path / "mixed").string(), 1);
    REQUIRE(mixed.cells.size() == 2);
    CHECK(mixed.failures == 1);
    CHECK(mixed.cells[0].status == "ok");
    CHECK(mixed.cells[1].status == "config_error");
  }
}

TEST_CASE("boundary grid and svg") {
  const auto base = two_moons(40, 0.1, 13);
  const auto ds = select_labels(base, 4, LabelMode::kBalanced, 13);

  SUBCASE("zero model: uniform predictions, no contour") {
    const MlpModel model = MlpModel::zeros({2, 8, 2});
    const GridEval grid = evaluate_grid(model, ds, 32);
    CHECK(decision_boundary_segments(grid).empty());
  }
  SUBCASE("resolution 100 yields 10000 rows") {
    Rng rng(3);
    const MlpModel model = MlpModel::he_uniform({2, 8, 2}, rng);
    const GridEval grid = evaluate_grid(model, ds, 100);
    TempDir dir("sslab_test_boundary");
    write_grid_csv((dir.path / "grid.csv").string(), grid);
    const std::string text = slurp(dir.path / "grid.csv");
    CHECK(std::count(text.begin(), text.end(), '\n') == 10001);  // header + rows
    write_boundary_svg((dir.path / "boundary.svg").string(), grid, ds);
    const std::string svg = slurp(dir.path / "boundary.svg");
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("polygon") != std::string::npos);  // labeled markers present
  }
  SUBCASE("resolution below 16 rejected") {
    const MlpModel model = MlpModel::zeros({2, 8, 2});
    CHECK_THROWS_AS(evaluate_grid(model, ds, 8), std::invalid_argument);
  }
}

TEST_CASE("marching squares on a known field") {
  // f(x, y) = x - 0.5 on [0,1]^2: a vertical line at x = 0.5
  const int n = 21;
  VectorXd xs = VectorXd::LinSpaced(n, 0.0, 1.0);
  VectorXd ys = VectorXd::LinSpaced(n, 0.0, 1.0);
  MatrixXd field(n, n);
  for (int iy = 0; iy < n; ++iy) {
    for (int ix = 0; ix < n; ++ix) field(iy, ix) = xs[ix] - 0.5;
  }
  const auto segments = marching_squares(field, xs, ys);
  REQUIRE(!segments.empty());
  for (const auto& s : segments) {
    CHECK(s.x0 == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(s.x1 == doctest::Approx(0.5).epsilon(1e-12));
  }
}

TEST_CASE("histogram csv matches the metrics histogram") {
  TempDir dir("sslab_test_hist");
  std::vector<BatchOutcome> outcomes;
  Rng rng(19);
  for (int i = 0; i < 200; ++i) {
    BatchOutcome o;
    o.confidence = rng.uniform();
    o.pseudo_label = i % 2;
    o.weight = rng.uniform();
    o.true_label = (i % 3 == 0) ? 1 - (i % 2) : i % 2;
    outcomes.push_back(o);
  }
  const auto hist = confidence_histogram(outcomes, 20);
  write_histogram_csv((dir.path / "hist.csv").string(), outcomes, 20, nullptr, nullptr);

  std::ifstream in(dir.path / "hist.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line == "bin_lo,bin_hi,count_all,count_wrong,weight_curve");
  int rows = 0;
  long total_all = 0, total_wrong = 0;
  while (std::getline(in, line)) {
    std::istringstream row(line);
    std::string field;
    std::getline(row, field, ',');
    std::getline(row, field, ',');
    std::getline(row, field, ',');
    total_all += std::stol(field);
    std::getline(row, field, ',');
    total_wrong += std::stol(field);
    ++rows;
  }
  CHECK(rows == 20);
  long expect_all = 0, expect_wrong = 0;
  for (int b = 0; b < 20; ++b) {
    expect_all += hist.all[b];
    expect_wrong += hist.wrong[b];
  }
  CHECK(total_all == expect_all);
  CHECK(total_wrong == expect_wrong);

  SUBCASE("empty outcomes produce all-zero bins") {
    write_histogram_csv((dir.path / "empty.csv").string(), {}, 5, nullptr, nullptr);
    std::ifstream ein(dir.path / "empty.csv");
    std::getline(ein, line);
    int zero_rows = 0;
    while (std::getline(ein, line)) {
      CHECK(line.find(",0,0,") != std::string::npos);
      ++zero_rows;
    }
    CHECK(zero_rows == 5);
  }
}
