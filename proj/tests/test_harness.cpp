#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "sfr/errors.hpp"
#include "sfr/harness.hpp"

using namespace sfr;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("sfr_harness_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string config_field_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "<accepted>";
}

ExperimentConfig tiny_config(const fs::path& out) {
  ExperimentConfig c;
  c.grid_nx = c.grid_ny = 6;
  c.frequencies_hz = {390.625};
  c.mic_counts = {10};
  c.folds = 1;
  c.methods = {Method::pibi};
  c.solver.steps = 5;
  c.solver.n_int = 40;
  c.solver.n_coll = 20;
  c.room.max_order = 4;
  c.output_dir = out.string();
  return c;
}

std::string without_timing(const std::string& csv) {
  std::istringstream in(csv);
  std::string line, out;
  while (std::getline(in, line)) {
    std::vector<std::string> cols;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cols.push_back(cell);
    for (std::size_t i = 0; i < cols.size(); ++i) {
      if (i != 7) out += cols[i] + ",";
    }
    out += "\n";
  }
  return out;
}

}  // namespace

TEST(Config, EmptyObjectGivesDefaults) {
  const auto c = parse_config("{}");
  EXPECT_EQ(c, ExperimentConfig{});
  EXPECT_EQ(c.room.length_x, 5.0);
  EXPECT_EQ(c.room.length_y, 4.0);
  EXPECT_EQ(c.room.source, (Point2{3.2, 1.0}));
  EXPECT_EQ(c.room.t60, 0.4);
  EXPECT_FALSE(c.room.beta.has_value());
  EXPECT_EQ(c.region, (Region{{0.5, 0.5}, 2.0, 2.0}));
  EXPECT_EQ(c.grid_nx, 30);
  EXPECT_EQ(c.grid_ny, 30);
  EXPECT_EQ(c.mic_counts, std::vector<int>{50});
  EXPECT_EQ(c.solver.steps, 5000);
  EXPECT_EQ(c.solver.lr, 1e-3);
  EXPECT_EQ(c.solver.lambda, 1e-3);
  EXPECT_EQ(c.solver.n_int, 200);
  EXPECT_EQ(c.solver.n_coll, 200);
  EXPECT_EQ(c.folds, 5);
  EXPECT_EQ(c.solver.representation, BieRepresentation::single_layer);
  ASSERT_EQ(c.frequencies_hz.size(), 65u);
  EXPECT_EQ(c.frequencies_hz.front(), 46.875);
  EXPECT_EQ(c.frequencies_hz.back(), 1046.875);
  EXPECT_NEAR(c.room_spec().beta, 0.7432776, 1e-7);
}

TEST(Config, RoundTrip) {
  ExperimentConfig c;
  EXPECT_EQ(parse_config(serialize_config(c)), c);
  c.room.t60.reset();
  c.room.beta = 0.61;
  c.n_points_list = std::vector<int>{25, 50};
  c.snr_db = 30.0;
  c.frequencies_hz = {109.375, 1.0 / 3.0 * 1000.0};
  c.base_seed = 0xFFFFFFFFFFFFFFFFULL;
  c.methods = {Method::pinn};
  c.solver.representation = BieRepresentation::direct_two_density;
  c.solver.offset = 0.05;
  c.save_fields = false;
  c.threads = 2;
  const auto text = serialize_config(c);
  EXPECT_EQ(parse_config(text), c);
  EXPECT_EQ(serialize_config(parse_config(text)), text);
}

TEST(Config, ValidationNamesField) {
  EXPECT_EQ(config_field_of(R"({"folds": -1})"), "folds");
  EXPECT_EQ(config_field_of(R"({"folds": 0})"), "folds");
  EXPECT_EQ(config_field_of(R"({"mic_counts": [901]})"), "mic_counts");
  EXPECT_EQ(config_field_of(R"({"frequencies_hz": []})"), "frequencies_hz");
  EXPECT_EQ(config_field_of(R"({"methods": ["pibi", "bem"]})"), "methods");
  EXPECT_EQ(config_field_of(R"({"solver": {"steps": "many"}})"), "solver.steps");
  EXPECT_EQ(config_field_of(R"({"solver": {"offset": 0.6}})"), "solver.offset");
  EXPECT_EQ(config_field_of(R"({"room": {"t60": 0.4, "beta": 0.5}})"), "room.beta");
  EXPECT_EQ(config_field_of(R"({"room": {"beta": 0.5}})"), "<accepted>");
  EXPECT_EQ(config_field_of(R"({"region": {"origin": [2.5, 0.5]}})"), "region");
  EXPECT_EQ(config_field_of(R"({"grid": {"nx": 1}})"), "grid.nx");
  EXPECT_EQ(config_field_of(R"({"colour": 1})"), "colour");
  EXPECT_EQ(config_field_of(R"({"solver": {"stpes": 10}})"), "solver.stpes");
}

TEST(Config, ParseErrorReportsLine) {
  try {
    parse_config("{\n  \"folds\": 3,\n  \"steps\" 5\n}");
    FAIL() << "expected a parse error";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(Config, LoadFromFile) {
  const auto dir = fresh_dir("load");
  std::ofstream(dir / "c.json") << R"({"folds": 2, "base_seed": 9})";
  const auto c = load_config(dir / "c.json");
  EXPECT_EQ(c.folds, 2);
  EXPECT_EQ(c.base_seed, 9u);
  EXPECT_THROW(load_config(dir / "missing.json"), ConfigError);
}

TEST(FoldMics, WholeGrid) {
  const auto grid = make_grid({{0.5, 0.5}, 2.0, 2.0}, 5, 5);
  const auto all = select_fold_mic_indices(grid.size(), 25, 0, 0);
  EXPECT_EQ(std::set<std::size_t>(all.begin(), all.end()).size(), 25u);
}

TEST(FoldMics, DeterministicDistinctAndFoldDependent) {
  const ExperimentConfig c;
  const auto grid = make_grid(c.region, c.grid_nx, c.grid_ny);
  const auto a = select_fold_mics(grid, 50, 0, c.base_seed);
  EXPECT_EQ(a, select_fold_mics(grid, 50, 0, c.base_seed));
  EXPECT_NE(a, select_fold_mics(grid, 50, 1, c.base_seed));
  const auto idx = select_fold_mic_indices(grid.size(), 50, 0, c.base_seed);
  EXPECT_EQ(std::set<std::size_t>(idx.begin(), idx.end()).size(), 50u);
  EXPECT_THROW(select_fold_mic_indices(10, 11, 0, 0), DomainError);
}

TEST(FoldMics, UniformCoverage) {
  std::vector<int> hits(100, 0);
  for (int fold = 0; fold < 2000; ++fold) {
    for (auto i : select_fold_mic_indices(100, 10, fold, 4)) hits[i]++;
  }
  // Each index is drawn with probability 0.1 per fold: mean 200, sd ~13.4.
  for (int h : hits) EXPECT_NEAR(h, 200, 5 * 13.4);
}

TEST(ResultsCsv, RoundTrip) {
  const auto dir = fresh_dir("csv");
  std::vector<ResultRow> rows{{Method::pibi, 390.625, 50, 200, 0, -17.123456789012345, 0.987654321, 1.5, 0.25, ""},
                              {Method::pinn, 1.0 / 3.0, 20, 25, 4, std::nan(""), std::nan(""), 0.0, std::nan(""),
                               "training diverged"}};
  write_results_csv(dir / "r.csv", rows);
  const auto back = read_results_csv(dir / "r.csv");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].nmse_db, rows[0].nmse_db);
  EXPECT_EQ(back[0].ncc, rows[0].ncc);
  EXPECT_EQ(back[1].frequency_hz, rows[1].frequency_hz);
  EXPECT_TRUE(std::isnan(back[1].ncc));
  EXPECT_EQ(back[1].error, "training diverged");
  EXPECT_EQ(slurp(dir / "r.csv").substr(0, std::string(kResultsHeader).size()), kResultsHeader);
}

TEST(RunSweep, SingleRow) {
  const auto dir = fresh_dir("single");
  const auto rows = run_sweep(tiny_config(dir));
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_TRUE(rows[0].error.empty()) << rows[0].error;
  EXPECT_EQ(read_results_csv(dir / "results.csv").size(), 1u);
  EXPECT_TRUE(fs::exists(dir / "fields" / "truth_f390.625.csv"));
  EXPECT_TRUE(fs::exists(dir / "fields" / "pibi_f390.625_m10_n40_fold0.csv"));
}

TEST(RunSweep, CardinalityResumeAndRanges) {
  const auto dir = fresh_dir("card");
  auto c = tiny_config(dir);
  c.methods = {Method::pibi, Method::pinn};
  c.frequencies_hz = {109.375, 390.625};
  c.mic_counts = {5, 10};
  c.n_points_list = std::vector<int>{8, 12};
  c.folds = 2;
  RunStats stats;
  const auto rows = run_sweep(c, {}, &stats);
  EXPECT_EQ(rows.size(), 2u * (2 * 2 * 2) * 2);
  EXPECT_EQ(stats.trained, rows.size());
  for (const auto& r : rows) {
    EXPECT_TRUE(r.error.empty()) << r.error;
    EXPECT_GE(r.ncc, 0.0);
    EXPECT_LE(r.ncc, 1.0);
    EXPECT_GE(r.nmse_db, -300.0);
  }
  const auto first = read_results_csv(dir / "results.csv");
  EXPECT_EQ(first.size(), rows.size());

  RunStats again;
  const auto rows2 = run_sweep(c, {}, &again);
  EXPECT_EQ(again.trained, 0u);
  EXPECT_EQ(again.resumed, rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) EXPECT_EQ(rows2[i].nmse_db, rows[i].nmse_db);
}

TEST(RunSweep, Deterministic) {
  const auto d1 = fresh_dir("det1"), d2 = fresh_dir("det2");
  auto c1 = tiny_config(d1), c2 = tiny_config(d2);
  c1.methods = c2.methods = {Method::pibi, Method::pinn};
  c1.folds = c2.folds = 2;
  c1.snr_db = c2.snr_db = 20.0;
  run_sweep(c1);
  run_sweep(c2);
  const auto a = slurp(d1 / "results.csv"), b = slurp(d2 / "results.csv");
  EXPECT_EQ(without_timing(a), without_timing(b));
  EXPECT_EQ(slurp(d1 / "fields" / "pinn_f390.625_m10_n20_fold1.csv"),
            slurp(d2 / "fields" / "pinn_f390.625_m10_n20_fold1.csv"));
}

TEST(RunSweep, RowFailuresAreRecorded) {
  const auto dir = fresh_dir("fail");
  auto c = tiny_config(dir);
  c.solver.offset = 0.0;  // every microphone on the grid edge sits on the contour
  c.mic_counts = {36};
  const auto rows = run_sweep(c);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_FALSE(rows[0].error.empty());
  const auto back = read_results_csv(dir / "results.csv");
  ASSERT_EQ(back.size(), 1u);
  EXPECT_FALSE(back[0].error.empty());
}

TEST(Summarize, MeanAndSampleStd) {
  std::vector<ResultRow> rows;
  for (int f = 0; f < 3; ++f) rows.push_back({Method::pibi, 100.0, 50, 200, f, -10.0 - f, 0.9 + 0.01 * f, 0, 0, ""});
  rows.push_back({Method::pibi, 100.0, 50, 200, 3, 0, 0, 0, 0, "failed"});
  rows.push_back({Method::pinn, 100.0, 50, 200, 0, -3.0, 0.5, 0, 0, ""});
  const auto s = summarize(rows);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].method, Method::pibi);
  EXPECT_EQ(s[0].folds, 3);
  EXPECT_NEAR(s[0].nmse_mean, -11.0, 1e-12);
  EXPECT_NEAR(s[0].nmse_std, 1.0, 1e-12);
  EXPECT_NEAR(s[0].ncc_mean, 0.91, 1e-12);
  EXPECT_EQ(s[1].folds, 1);
  EXPECT_EQ(s[1].nmse_std, 0.0);
}

TEST(FieldExport, TwoByTwoRoundTrip) {
  const auto dir = fresh_dir("field");
  const auto grid = make_grid({{0.5, 0.5}, 2.0, 2.0}, 2, 2);
  const std::vector<Complex> values{{0.1, 1.0 / 3.0}, {-2.5, 0.0}, {1e-300, -7.0}, {3.14159265358979, 2.0}};
  export_field_csv(grid, values, dir / "f.csv");
  std::ifstream in(dir / "f.csv");
  int lines = 0;
  for (std::string l; std::getline(in, l);) ++lines;
  EXPECT_EQ(lines, 5);
  const auto back = load_field_csv(dir / "f.csv");
  EXPECT_EQ(back.grid, grid);
  EXPECT_EQ(back.values, values);
  EXPECT_THROW(export_field_csv(grid, std::vector<Complex>(3), dir / "g.csv"), ShapeError);
}

TEST(Heatmap, ConstantFieldIsUniformMidScale) {
  const auto dir = fresh_dir("heat");
  const auto grid = make_grid({{0.0, 0.0}, 1.0, 1.0}, 3, 2);
  render_heatmap(grid, std::vector<Complex>(6, Complex(0.0, 5.0)), dir / "c.ppm");
  const auto img = slurp(dir / "c.ppm");
  const std::string header = "P6\n3 2\n255\n";
  ASSERT_EQ(img.size(), header.size() + 18);
  EXPECT_EQ(img.substr(0, header.size()), header);
  for (std::size_t i = header.size(); i < img.size(); ++i) EXPECT_EQ(static_cast<unsigned char>(img[i]), 255);
}

TEST(Heatmap, SymmetricMapAndOrientation) {
  const auto dir = fresh_dir("heat2");
  const auto grid = make_grid({{0.0, 0.0}, 1.0, 1.0}, 2, 2);
  // bottom row: -1, 0; top row: 0.5, 0 -> top-left pixel light red, bottom-left pure blue
  render_heatmap(grid, std::vector<Complex>{-1.0, 0.0, 0.5, 0.0}, dir / "h.ppm");
  const auto img = slurp(dir / "h.ppm");
  const auto px = [&](int row, int col) {
    const std::size_t off = std::string("P6\n2 2\n255\n").size() + 3 * (2 * row + col);
    return std::array<int, 3>{static_cast<unsigned char>(img[off]), static_cast<unsigned char>(img[off + 1]),
                              static_cast<unsigned char>(img[off + 2])};
  };
  EXPECT_EQ(px(1, 0), (std::array<int, 3>{0, 0, 255}));
  EXPECT_EQ(px(0, 0), (std::array<int, 3>{255, 128, 128}));
  EXPECT_EQ(px(0, 1), (std::array<int, 3>{255, 255, 255}));
}
