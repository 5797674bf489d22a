#include "sfr/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <map>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include "sfr/errors.hpp"
#include "sfr/metrics.hpp"
#include "sfr/pinn.hpp"
#include "sfr/random.hpp"

namespace sfr {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(Method m) { return m == Method::pibi ? "pibi" : "pinn"; }

Method parse_method(const std::string& name) {
  if (name == "pibi") return Method::pibi;
  if (name == "pinn") return Method::pinn;
  throw std::invalid_argument("unknown method '" + name + "'");
}

std::vector<double> default_frequencies() {
  std::vector<double> f;
  for (int i = 3; i <= 67; ++i) f.push_back(15.625 * i);
  return f;
}

RoomSpec ExperimentConfig::room_spec() const {
  RoomSpec spec;
  spec.length_x = room.length_x;
  spec.length_y = room.length_y;
  spec.source = room.source;
  spec.c = room.c;
  spec.beta = room.beta ? *room.beta : reflection_from_t60(room.length_x, room.length_y, room.t60.value(), room.c).beta;
  return spec;
}

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& msg) {
  throw ConfigError(field, "config field '" + field + "': " + msg);
}

std::string join_key(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

void check_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& prefix) {
  if (!obj.is_object()) fail(prefix.empty() ? "<root>" : prefix, "expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    const bool known = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return it.key() == a; });
    if (!known) fail(join_key(prefix, it.key()), "unknown key");
  }
}

double read_number(const json& v, const std::string& field) {
  if (!v.is_number()) fail(field, "expected a number");
  return v.get<double>();
}

std::int64_t read_integer(const json& v, const std::string& field) {
  if (!v.is_number_integer()) fail(field, "expected an integer");
  return v.get<std::int64_t>();
}

int read_int(const json& v, const std::string& field) {
  const auto i = read_integer(v, field);
  if (i < std::numeric_limits<int>::min() || i > std::numeric_limits<int>::max()) fail(field, "out of range");
  return static_cast<int>(i);
}

Point2 read_pair(const json& v, const std::string& field) {
  if (!v.is_array() || v.size() != 2) fail(field, "expected a two-element array");
  return {read_number(v[0], field), read_number(v[1], field)};
}

template <typename T, typename F>
std::vector<T> read_list(const json& v, const std::string& field, F&& read) {
  if (!v.is_array()) fail(field, "expected an array");
  std::vector<T> out;
  for (const auto& item : v) out.push_back(read(item, field));
  return out;
}

std::pair<std::size_t, std::size_t> line_and_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace

void ExperimentConfig::validate() const {
  if (!(room.length_x > 0.0) || !(room.length_y > 0.0)) fail("room.dims", "must be positive");
  if (!(room.source.x > 0.0 && room.source.x < room.length_x && room.source.y > 0.0 &&
        room.source.y < room.length_y)) {
    fail("room.source", "must lie strictly inside the room");
  }
  if (room.t60.has_value() == room.beta.has_value()) fail("room.beta", "specify exactly one of t60 and beta");
  if (room.t60 && !(*room.t60 > 0.0)) fail("room.t60", "must be positive");
  if (room.beta && !(*room.beta >= 0.0 && *room.beta < 1.0)) fail("room.beta", "must be in [0, 1)");
  if (!(room.c > 0.0)) fail("room.c", "must be positive");
  if (room.max_order < 0) fail("room.max_order", "must be non-negative");
  try {
    validate_region(region, room_spec());
  } catch (const DomainError& e) {
    fail("region", e.what());
  }
  if (grid_nx < 2) fail("grid.nx", "must be at least 2");
  if (grid_ny < 2) fail("grid.ny", "must be at least 2");
  if (frequencies_hz.empty()) fail("frequencies_hz", "must not be empty");
  for (double f : frequencies_hz) {
    if (!(f > 0.0) || !std::isfinite(f)) fail("frequencies_hz", "frequencies must be positive");
  }
  if (mic_counts.empty()) fail("mic_counts", "must not be empty");
  for (int m : mic_counts) {
    if (m < 1 || m > grid_nx * grid_ny) fail("mic_counts", "each count must be in [1, grid size]");
  }
  if (n_points_list) {
    if (n_points_list->empty()) fail("n_points_list", "must not be empty");
    for (int n : *n_points_list) {
      if (n < 4) fail("n_points_list", "each entry must be at least 4");
    }
  }
  if (folds < 1) fail("folds", "must be at least 1");
  if (methods.empty()) fail("methods", "must not be empty");
  if (std::set<Method>(methods.begin(), methods.end()).size() != methods.size()) fail("methods", "duplicate method");
  if (solver.steps < 0) fail("solver.steps", "must be non-negative");
  if (!(solver.lr > 0.0)) fail("solver.lr", "must be positive");
  if (!(solver.lambda >= 0.0)) fail("solver.lambda", "must be non-negative");
  if (solver.n_int < 4) fail("solver.n_int", "must be at least 4");
  if (solver.n_coll < 1) fail("solver.n_coll", "must be at least 1");
  if (!(solver.offset >= 0.0)) fail("solver.offset", "must be non-negative");
  try {
    discretize_boundary(region, 4, solver.offset, room_spec());
  } catch (const DomainError& e) {
    fail("solver.offset", e.what());
  }
  if (snr_db && !std::isfinite(*snr_db)) fail("snr_db", "must be finite");
  if (output_dir.empty()) fail("output_dir", "must not be empty");
  if (threads < 1) fail("threads", "must be at least 1");
}

ExperimentConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_and_column(text, e.byte);
    throw ConfigError("<parse>", "config parse error at line " + std::to_string(line) + ", column " +
                                     std::to_string(col) + ": " + e.what());
  }
  ExperimentConfig cfg;
  check_keys(root,
             {"room", "region", "grid", "frequencies_hz", "mic_counts", "n_points_list", "folds", "base_seed",
              "methods", "solver", "snr_db", "output_dir", "save_fields", "threads"},
             "");

  if (root.contains("room")) {
    const auto& r = root["room"];
    check_keys(r, {"dims", "source", "t60", "beta", "c", "max_order"}, "room");
    if (r.contains("dims")) {
      const auto d = read_pair(r["dims"], "room.dims");
      cfg.room.length_x = d.x;
      cfg.room.length_y = d.y;
    }
    if (r.contains("source")) cfg.room.source = read_pair(r["source"], "room.source");
    const bool has_t60 = r.contains("t60") && !r["t60"].is_null();
    const bool has_beta = r.contains("beta") && !r["beta"].is_null();
    if (has_t60 && has_beta) fail("room.beta", "specify exactly one of t60 and beta");
    if (has_beta) {
      cfg.room.beta = read_number(r["beta"], "room.beta");
      cfg.room.t60.reset();
    }
    if (has_t60) cfg.room.t60 = read_number(r["t60"], "room.t60");
    if (r.contains("c")) cfg.room.c = read_number(r["c"], "room.c");
    if (r.contains("max_order")) cfg.room.max_order = read_int(r["max_order"], "room.max_order");
  }
  if (root.contains("region")) {
    const auto& g = root["region"];
    check_keys(g, {"origin", "sides"}, "region");
    if (g.contains("origin")) cfg.region.origin = read_pair(g["origin"], "region.origin");
    if (g.contains("sides")) {
      const auto s = read_pair(g["sides"], "region.sides");
      cfg.region.side_x = s.x;
      cfg.region.side_y = s.y;
    }
  }
  if (root.contains("grid")) {
    const auto& g = root["grid"];
    check_keys(g, {"nx", "ny"}, "grid");
    if (g.contains("nx")) cfg.grid_nx = read_int(g["nx"], "grid.nx");
    if (g.contains("ny")) cfg.grid_ny = read_int(g["ny"], "grid.ny");
  }
  if (root.contains("frequencies_hz")) {
    cfg.frequencies_hz = read_list<double>(root["frequencies_hz"], "frequencies_hz", read_number);
  }
  if (root.contains("mic_counts")) cfg.mic_counts = read_list<int>(root["mic_counts"], "mic_counts", read_int);
  if (root.contains("n_points_list") && !root["n_points_list"].is_null()) {
    cfg.n_points_list = read_list<int>(root["n_points_list"], "n_points_list", read_int);
  }
  if (root.contains("folds")) cfg.folds = read_int(root["folds"], "folds");
  if (root.contains("base_seed")) {
    const auto& v = root["base_seed"];
    if (!v.is_number_unsigned()) fail("base_seed", "expected a non-negative integer");
    cfg.base_seed = v.get<std::uint64_t>();
  }
  if (root.contains("methods")) {
    cfg.methods = read_list<Method>(root["methods"], "methods", [](const json& v, const std::string& field) {
      if (!v.is_string()) fail(field, "expected a string");
      try {
        return parse_method(v.get<std::string>());
      } catch (const std::invalid_argument& e) {
        fail(field, e.what());
      }
    });
  }
  if (root.contains("solver")) {
    const auto& s = root["solver"];
    check_keys(s, {"steps", "lr", "lambda", "n_int", "n_coll", "offset", "representation"}, "solver");
    if (s.contains("steps")) cfg.solver.steps = read_int(s["steps"], "solver.steps");
    if (s.contains("lr")) cfg.solver.lr = read_number(s["lr"], "solver.lr");
    if (s.contains("lambda")) cfg.solver.lambda = read_number(s["lambda"], "solver.lambda");
    if (s.contains("n_int")) cfg.solver.n_int = read_int(s["n_int"], "solver.n_int");
    if (s.contains("n_coll")) cfg.solver.n_coll = read_int(s["n_coll"], "solver.n_coll");
    if (s.contains("offset")) cfg.solver.offset = read_number(s["offset"], "solver.offset");
    if (s.contains("representation")) {
      if (!s["representation"].is_string()) fail("solver.representation", "expected a string");
      try {
        cfg.solver.representation = parse_representation(s["representation"].get<std::string>());
      } catch (const std::invalid_argument& e) {
        fail("solver.representation", e.what());
      }
    }
  }
  if (root.contains("snr_db") && !root["snr_db"].is_null()) cfg.snr_db = read_number(root["snr_db"], "snr_db");
  if (root.contains("output_dir")) {
    if (!root["output_dir"].is_string()) fail("output_dir", "expected a string");
    cfg.output_dir = root["output_dir"].get<std::string>();
  }
  if (root.contains("save_fields")) {
    if (!root["save_fields"].is_boolean()) fail("save_fields", "expected true or false");
    cfg.save_fields = root["save_fields"].get<bool>();
  }
  if (root.contains("threads")) cfg.threads = read_int(root["threads"], "threads");
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const ExperimentConfig& c) {
  json room{{"dims", {c.room.length_x, c.room.length_y}},
            {"source", {c.room.source.x, c.room.source.y}},
            {"c", c.room.c},
            {"max_order", c.room.max_order}};
  if (c.room.t60) room["t60"] = *c.room.t60;
  if (c.room.beta) room["beta"] = *c.room.beta;
  json methods = json::array();
  for (auto m : c.methods) methods.push_back(to_string(m));
  json root{{"room", room},
            {"region", {{"origin", {c.region.origin.x, c.region.origin.y}}, {"sides", {c.region.side_x, c.region.side_y}}}},
            {"grid", {{"nx", c.grid_nx}, {"ny", c.grid_ny}}},
            {"frequencies_hz", c.frequencies_hz},
            {"mic_counts", c.mic_counts},
            {"folds", c.folds},
            {"base_seed", c.base_seed},
            {"methods", methods},
            {"solver",
             {{"steps", c.solver.steps},
              {"lr", c.solver.lr},
              {"lambda", c.solver.lambda},
              {"n_int", c.solver.n_int},
              {"n_coll", c.solver.n_coll},
              {"offset", c.solver.offset},
              {"representation", to_string(c.solver.representation)}}},
            {"output_dir", c.output_dir},
            {"save_fields", c.save_fields},
            {"threads", c.threads}};
  if (c.n_points_list) root["n_points_list"] = *c.n_points_list;
  if (c.snr_db) root["snr_db"] = *c.snr_db;
  return root.dump(2) + "\n";
}

std::vector<std::size_t> select_fold_mic_indices(std::size_t grid_size, int m, int fold, std::uint64_t base_seed) {
  if (m < 0 || static_cast<std::size_t>(m) > grid_size) throw DomainError("select_fold_mics: m exceeds grid size");
  std::vector<std::size_t> idx(grid_size);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(derive_seed({base_seed, static_cast<std::uint64_t>(fold), 0xF01DULL}));
  // Partial Fisher-Yates shuffle.
  for (std::size_t i = 0; i < static_cast<std::size_t>(m); ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(grid_size - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(static_cast<std::size_t>(m));
  return idx;
}

std::vector<Point2> select_fold_mics(std::span<const Point2> grid, int m, int fold, std::uint64_t base_seed) {
  std::vector<Point2> out;
  for (auto i : select_fold_mic_indices(grid.size(), m, fold, base_seed)) out.push_back(grid[i]);
  return out;
}

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string sanitize(std::string s) {
  for (auto& ch : s) {
    if (ch == ',' || ch == '\n' || ch == '\r') ch = ch == ',' ? ';' : ' ';
  }
  return s;
}

std::string row_to_csv(const ResultRow& r) {
  std::ostringstream os;
  os << to_string(r.method) << ',' << format_double(r.frequency_hz) << ',' << r.m_mics << ',' << r.n_points << ','
     << r.fold << ',' << format_double(r.nmse_db) << ',' << format_double(r.ncc) << ','
     << format_double(r.train_seconds) << ',' << format_double(r.final_loss) << ',' << sanitize(r.error);
  return os.str();
}

using RowKey = std::tuple<Method, double, int, int, int>;

RowKey key_of(const ResultRow& r) { return {r.method, r.frequency_hz, r.m_mics, r.n_points, r.fold}; }

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s, const std::string& what) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str()) throw std::runtime_error("malformed number in " + what + ": '" + s + "'");
  return v;
}

}  // namespace

std::vector<ResultRow> read_results_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kResultsHeader) {
    throw std::runtime_error(path.string() + ": unexpected results header");
  }
  std::vector<ResultRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 10) throw std::runtime_error(path.string() + ": malformed row '" + line + "'");
    ResultRow r;
    r.method = parse_method(f[0]);
    r.frequency_hz = parse_double(f[1], "frequency_hz");
    r.m_mics = std::stoi(f[2]);
    r.n_points = std::stoi(f[3]);
    r.fold = std::stoi(f[4]);
    r.nmse_db = parse_double(f[5], "nmse_db");
    r.ncc = parse_double(f[6], "ncc");
    r.train_seconds = parse_double(f[7], "train_seconds");
    r.final_loss = parse_double(f[8], "final_loss");
    r.error = f[9];
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_results_csv(const fs::path& path, std::span<const ResultRow> rows) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << kResultsHeader << '\n';
    for (const auto& r : rows) out << row_to_csv(r) << '\n';
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

namespace {

struct Job {
  Method method;
  std::size_t freq_index;
  int m_mics;
  int n_points;
  int fold;
};

std::string field_name(const Job& job, double freq) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%s_f%.10g_m%d_n%d_fold%d.csv", to_string(job.method).c_str(), freq, job.m_mics,
                job.n_points, job.fold);
  return buf;
}

ResultRow run_job(const ExperimentConfig& cfg, const Job& job, double freq, std::span<const Point2> grid,
                  const std::vector<Complex>& truth, const fs::path& fields_dir) {
  ResultRow row{job.method, freq, job.m_mics, job.n_points, job.fold, std::nan(""), std::nan(""), 0.0, std::nan(""),
                {}};
  try {
    const auto idx = select_fold_mic_indices(grid.size(), job.m_mics, job.fold, cfg.base_seed);
    Measurements meas;
    meas.frequency_hz = freq;
    for (auto i : idx) {
      meas.positions.push_back(grid[i]);
      meas.values.push_back(truth[i]);
    }
    if (cfg.snr_db) {
      const auto noise_seed = derive_seed({cfg.base_seed, static_cast<std::uint64_t>(job.fold),
                                           std::bit_cast<std::uint64_t>(freq), static_cast<std::uint64_t>(job.m_mics)});
      meas.values = add_measurement_noise(meas.values, *cfg.snr_db, noise_seed);
    }
    const auto train_seed = derive_seed({cfg.base_seed, static_cast<std::uint64_t>(job.fold), 0x7EA1ULL});

    const auto t0 = std::chrono::steady_clock::now();
    std::vector<Complex> estimate;
    if (job.method == Method::pibi) {
      PibiConfig pc;
      pc.n_int = job.n_points;
      pc.offset = cfg.solver.offset;
      pc.steps = cfg.solver.steps;
      pc.lr = cfg.solver.lr;
      pc.seed = train_seed;
      pc.representation = cfg.solver.representation;
      pc.c = cfg.room.c;
      const auto res = train_pibi(cfg.region, meas, pc);
      row.final_loss = res.loss_trace.back();
      estimate = reconstruct(res.model, grid).values;
    } else {
      PinnConfig pc;
      pc.n_coll = job.n_points;
      pc.steps = cfg.solver.steps;
      pc.lr = cfg.solver.lr;
      pc.lambda = cfg.solver.lambda;
      pc.seed = train_seed;
      pc.c = cfg.room.c;
      const auto res = train_pinn(cfg.region, meas, pc);
      row.final_loss = res.loss_trace.back();
      estimate = evaluate_pinn(res.model, grid);
    }
    row.train_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    row.nmse_db = nmse_db(truth, estimate);
    row.ncc = ncc(truth, estimate);
    if (cfg.save_fields) export_field_csv(grid, estimate, fields_dir / field_name(job, freq));
  } catch (const std::exception& e) {
    row.error = sanitize(e.what());
  }
  return row;
}

}  // namespace

std::vector<ResultRow> run_sweep(const ExperimentConfig& cfg, const RunOptions& options, RunStats* stats) {
  cfg.validate();
  const fs::path out_dir(cfg.output_dir);
  const fs::path fields_dir = out_dir / "fields";
  fs::create_directories(out_dir);
  if (cfg.save_fields) fs::create_directories(fields_dir);
  const fs::path results_path = out_dir / "results.csv";

  std::map<RowKey, ResultRow> all_rows;
  if (fs::exists(results_path)) {
    for (auto& r : read_results_csv(results_path)) all_rows[key_of(r)] = std::move(r);
  } else {
    write_results_csv(results_path, {});
  }

  const auto room = cfg.room_spec();
  const auto grid = make_grid(cfg.region, cfg.grid_nx, cfg.grid_ny);

  std::vector<Job> jobs;
  for (std::size_t fi = 0; fi < cfg.frequencies_hz.size(); ++fi) {
    for (int m : cfg.mic_counts) {
      const std::size_t n_sweep = cfg.n_points_list ? cfg.n_points_list->size() : 1;
      for (std::size_t ni = 0; ni < n_sweep; ++ni) {
        for (int fold = 0; fold < cfg.folds; ++fold) {
          for (auto method : cfg.methods) {
            const int n = cfg.n_points_list ? (*cfg.n_points_list)[ni]
                                             : (method == Method::pibi ? cfg.solver.n_int : cfg.solver.n_coll);
            jobs.push_back({method, fi, m, n, fold});
          }
        }
      }
    }
  }

  std::vector<ResultRow> results(jobs.size());
  std::vector<std::size_t> pending;
  std::set<std::size_t> pending_freqs;
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    const auto& job = jobs[j];
    const ResultRow probe{job.method, cfg.frequencies_hz[job.freq_index], job.m_mics, job.n_points, job.fold, 0.0, 0.0, 0.0, 0.0, {}};
    const auto it = all_rows.find(key_of(probe));
    if (it != all_rows.end() && it->second.error.empty()) {
      results[j] = it->second;
    } else {
      pending.push_back(j);
      pending_freqs.insert(job.freq_index);
    }
  }
  if (stats) *stats = {pending.size(), jobs.size() - pending.size()};
  if (options.log) {
    *options.log << "sweep: " << jobs.size() << " rows, " << jobs.size() - pending.size() << " already complete\n";
  }

  std::map<std::size_t, std::vector<Complex>> truth;
  for (auto fi : pending_freqs) {
    const double f = cfg.frequencies_hz[fi];
    truth[fi] = image_source_field(room, grid, Wavenumber::from_frequency(f, room.c), cfg.room.max_order);
    if (cfg.save_fields) {
      char name[64];
      std::snprintf(name, sizeof name, "truth_f%.10g.csv", f);
      export_field_csv(grid, truth[fi], fields_dir / name);
    }
  }

  std::mutex io_mutex;
  std::atomic<std::size_t> next{0};
  std::size_t done = 0;
  auto worker = [&] {
    for (std::size_t p = next++; p < pending.size(); p = next++) {
      const std::size_t j = pending[p];
      const auto& job = jobs[j];
      const double f = cfg.frequencies_hz[job.freq_index];
      auto row = run_job(cfg, job, f, grid, truth.at(job.freq_index), fields_dir);
      std::lock_guard lock(io_mutex);
      std::ofstream app(results_path, std::ios::app);
      app << row_to_csv(row) << '\n';
      ++done;
      if (options.log) {
        *options.log << "[" << done << "/" << pending.size() << "] " << to_string(row.method) << " f=" << f
                     << " M=" << row.m_mics << " N=" << row.n_points << " fold=" << row.fold;
        if (row.error.empty()) {
          *options.log << ": NMSE " << row.nmse_db << " dB, NCC " << row.ncc << " (" << row.train_seconds << " s)\n";
        } else {
          *options.log << ": error: " << row.error << "\n";
        }
      }
      results[j] = std::move(row);
    }
  };
  const int n_threads = std::min<int>(cfg.threads, static_cast<int>(std::max<std::size_t>(pending.size(), 1)));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  for (const auto& r : results) all_rows[key_of(r)] = r;
  std::vector<ResultRow> sorted;
  sorted.reserve(all_rows.size());
  for (const auto& [key, row] : all_rows) sorted.push_back(row);
  write_results_csv(results_path, sorted);
  return results;
}

std::vector<SummaryRow> summarize(std::span<const ResultRow> rows) {
  std::map<std::tuple<Method, double, int, int>, std::vector<const ResultRow*>> groups;
  for (const auto& r : rows) {
    if (r.error.empty()) groups[{r.method, r.frequency_hz, r.m_mics, r.n_points}].push_back(&r);
  }
  std::vector<SummaryRow> out;
  for (const auto& [key, members] : groups) {
    SummaryRow s{std::get<0>(key), std::get<1>(key), std::get<2>(key), std::get<3>(key),
                 static_cast<int>(members.size())};
    const double n = static_cast<double>(members.size());
    for (const auto* r : members) {
      s.nmse_mean += r->nmse_db / n;
      s.ncc_mean += r->ncc / n;
    }
    if (members.size() > 1) {
      for (const auto* r : members) {
        s.nmse_std += (r->nmse_db - s.nmse_mean) * (r->nmse_db - s.nmse_mean);
        s.ncc_std += (r->ncc - s.ncc_mean) * (r->ncc - s.ncc_mean);
      }
      s.nmse_std = std::sqrt(s.nmse_std / (n - 1.0));
      s.ncc_std = std::sqrt(s.ncc_std / (n - 1.0));
    }
    out.push_back(s);
  }
  return out;
}

void export_field_csv(std::span<const Point2> grid, std::span<const Complex> values, const fs::path& path) {
  if (grid.size() != values.size()) throw ShapeError("export_field_csv: grid and values differ in length");
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "x,y,re,im\n";
  for (std::size_t i = 0; i < grid.size(); ++i) {
    out << format_double(grid[i].x) << ',' << format_double(grid[i].y) << ',' << format_double(values[i].real())
        << ',' << format_double(values[i].imag()) << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

FieldData load_field_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "x,y,re,im") throw std::runtime_error(path.string() + ": bad field header");
  FieldData data;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 4) throw std::runtime_error(path.string() + ": malformed line '" + line + "'");
    data.grid.push_back({parse_double(f[0], "x"), parse_double(f[1], "y")});
    data.values.push_back({parse_double(f[2], "re"), parse_double(f[3], "im")});
  }
  return data;
}

void render_heatmap(std::span<const Point2> grid, std::span<const Complex> values, const fs::path& path) {
  if (grid.size() != values.size() || grid.empty()) throw ShapeError("render_heatmap: grid and values differ");
  std::size_t nx = 1;
  while (nx < grid.size() && grid[nx].y == grid[0].y) ++nx;
  if (grid.size() % nx != 0) throw ShapeError("render_heatmap: grid is not row-major rectangular");
  const std::size_t ny = grid.size() / nx;

  double vmax = 0.0;
  for (const auto& v : values) vmax = std::max(vmax, std::abs(v.real()));
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "P6\n" << nx << ' ' << ny << "\n255\n";
  for (std::size_t row = 0; row < ny; ++row) {
    const std::size_t iy = ny - 1 - row;
    for (std::size_t ix = 0; ix < nx; ++ix) {
      const double re = values[iy * nx + ix].real();
      const double t = vmax > 0.0 ? std::clamp(0.5 + 0.5 * re / vmax, 0.0, 1.0) : 0.5;
      // blue (0) -> white (0.5) -> red (1)
      double r, g, b;
      if (t < 0.5) {
        r = g = 2.0 * t;
        b = 1.0;
      } else {
        r = 1.0;
        g = b = 2.0 * (1.0 - t);
      }
      const unsigned char px[3] = {static_cast<unsigned char>(std::lround(255.0 * r)),
                                   static_cast<unsigned char>(std::lround(255.0 * g)),
                                   static_cast<unsigned char>(std::lround(255.0 * b))};
      out.write(reinterpret_cast<const char*>(px), 3);
    }
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace sfr
