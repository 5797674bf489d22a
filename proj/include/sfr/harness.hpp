#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sfr/geometry.hpp"
#include "sfr/pibi.hpp"
#include "sfr/roomsim.hpp"

namespace sfr {

enum class Method { pibi, pinn };

std::string to_string(Method m);
Method parse_method(const std::string& name);

/// Room section of an experiment. Exactly one of t60 / beta is set.
struct RoomConfig {
  double length_x = 5.0;
  double length_y = 4.0;
  Point2 source{3.2, 1.0};
  std::optional<double> t60 = 0.4;
  std::optional<double> beta;
  double c = 343.0;
  int max_order = 40;

  friend bool operator==(const RoomConfig&, const RoomConfig&) = default;
};

struct SolverConfig {
  int steps = 5000;
  double lr = 1e-3;
  double lambda = 1e-3;
  int n_int = 200;
  int n_coll = 200;
  double offset = 0.1;
  BieRepresentation representation = BieRepresentation::single_layer;

  friend bool operator==(const SolverConfig&, const SolverConfig&) = default;
};

/// Frequencies 46.875, 62.5, ..., 1046.875 Hz (multiples of 15.625 Hz).
std::vector<double> default_frequencies();

struct ExperimentConfig {
  RoomConfig room;
  Region region{{0.5, 0.5}, 2.0, 2.0};
  int grid_nx = 30;
  int grid_ny = 30;
  std::vector<double> frequencies_hz = default_frequencies();
  std::vector<int> mic_counts{50};
  /// Sets n_int (PIBI) and n_coll (PINN) together; when absent each method
  /// uses its solver count.
  std::optional<std::vector<int>> n_points_list;
  int folds = 5;
  std::uint64_t base_seed = 0;
  std::vector<Method> methods{Method::pibi, Method::pinn};
  SolverConfig solver;
  std::optional<double> snr_db;
  std::string output_dir = "results";
  bool save_fields = true;
  int threads = 1;

  /// Room with the reflection coefficient resolved from t60 when needed.
  RoomSpec room_spec() const;
  /// Throws ConfigError naming the first invalid field.
  void validate() const;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Parses a JSON experiment file; absent keys take the defaults above.
/// Parse errors report line and column; unknown keys and invalid values
/// raise ConfigError naming the field.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Serializes every field; parse_config(serialize_config(c)) == c.
std::string serialize_config(const ExperimentConfig& config);

/// m distinct grid indices drawn uniformly without replacement, a pure
/// function of (base_seed, fold).
std::vector<std::size_t> select_fold_mic_indices(std::size_t grid_size, int m, int fold, std::uint64_t base_seed);
std::vector<Point2> select_fold_mics(std::span<const Point2> grid, int m, int fold, std::uint64_t base_seed);

struct ResultRow {
  Method method = Method::pibi;
  double frequency_hz = 0.0;
  int m_mics = 0;
  int n_points = 0;
  int fold = 0;
  double nmse_db = 0.0;
  double ncc = 0.0;
  double train_seconds = 0.0;
  double final_loss = 0.0;
  std::string error;  // empty on success
};

/// Column order of results.csv.
inline constexpr const char* kResultsHeader =
    "method,frequency_hz,m_mics,n_points,fold,nmse_db,ncc,train_seconds,final_loss,error";

std::vector<ResultRow> read_results_csv(const std::filesystem::path& path);
void write_results_csv(const std::filesystem::path& path, std::span<const ResultRow> rows);

struct RunOptions {
  std::ostream* log = nullptr;  // progress lines, optional
};

struct RunStats {
  std::size_t trained = 0;  // rows computed in this call
  std::size_t resumed = 0;  // rows taken from an existing results.csv
};

/// Runs every (method, frequency, mic count, point count, fold) combination:
/// simulates the ground truth, selects the fold's microphones, trains,
/// reconstructs on the grid and scores. Rows are appended to
/// <output_dir>/results.csv as they finish; completed rows already present
/// are not recomputed. On return the file holds all rows sorted by key.
/// Failures are recorded in the row's error column.
std::vector<ResultRow> run_sweep(const ExperimentConfig& config, const RunOptions& options = {},
                                 RunStats* stats = nullptr);

/// Mean and sample standard deviation over folds for one sweep point.
struct SummaryRow {
  Method method = Method::pibi;
  double frequency_hz = 0.0;
  int m_mics = 0;
  int n_points = 0;
  int folds = 0;
  double nmse_mean = 0.0;
  double nmse_std = 0.0;
  double ncc_mean = 0.0;
  double ncc_std = 0.0;
};

/// Aggregates successful rows, ordered by (method, frequency, mics, points).
std::vector<SummaryRow> summarize(std::span<const ResultRow> rows);

/// CSV with header x,y,re,im, one line per grid point in grid order.
void export_field_csv(std::span<const Point2> grid, std::span<const Complex> values,
                      const std::filesystem::path& path);

struct FieldData {
  std::vector<Point2> grid;
  std::vector<Complex> values;
};

FieldData load_field_csv(const std::filesystem::path& path);

/// Binary PPM of the real part on a row-major grid, one pixel per point, top
/// row = largest y. Blue-white-red map over [-max|re|, +max|re|].
void render_heatmap(std::span<const Point2> grid, std::span<const Complex> values,
                    const std::filesystem::path& path);

}  // namespace sfr
