#include "poissonlab/harness.hpp"

#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "poissonlab/clark_ocone.hpp"
#include "poissonlab/parallel.hpp"

namespace plab {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

class CsvWriter {
 public:
  CsvWriter(const fs::path& path, const std::vector<std::string>& header) : path_(path) {
    row(header);
  }
  void row(const std::vector<std::string>& fields) {
    std::string line;
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) line += ',';
      line += csv_field(fields[i]);
    }
    line += "\r\n";
    body_ += line;
  }
  void flush() {
    std::ofstream out(path_, std::ios::binary);
    out << body_;
  }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
  std::string body_;
};

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

Box parse_box(const json& j, int dim) {
  if (!j.contains("lo") || !j.contains("hi")) throw ConfigError("box needs lo/hi arrays");
  const auto lo = j["lo"].get<std::vector<double>>();
  const auto hi = j["hi"].get<std::vector<double>>();
  if (static_cast<int>(lo.size()) != dim || static_cast<int>(hi.size()) != dim)
    throw ConfigError("box lo/hi must have one entry per dimension");
  Box b;
  b.dim = dim;
  for (int i = 0; i < dim; ++i) {
    b.axes[i] = Interval{lo[static_cast<std::size_t>(i)], hi[static_cast<std::size_t>(i)]};
    if (!(b.axes[i].lo < b.axes[i].hi)) throw ConfigError("box axis must be nonempty");
  }
  return b;
}

struct Experiment {
  json cfg;
  std::uint64_t seed = 0;
  int workers = 1;
  std::string out_dir = "results";
  int dim = 1;
  std::shared_ptr<const IntensityModel> model;
  Window window;
  std::array<double, 3> padding{0, 0, 0};
  bool auto_padding = true;

  bool has_functional = false;
  Functional F;
  std::optional<Cylindrical> cyl;

  std::vector<Control> controls;
  std::vector<std::string> control_names;
  std::optional<ControlFamily> family;

  // budgets
  int replicates = 100000;
  int n_outer = 500;
  int n_inner = 200;
  int grid_m = 32;
  int grid_m_coarse = 8;
  int dual_n = 20000;
  int optimizer_budget = 120;
  int restarts = 3;
  std::vector<double> tilt_thetas{-0.5, 0.5, 1.0};
};

MarkTimeFunction parse_shape(const json& j, int dim) {
  const Box box = parse_box(j, dim);
  const double amp = j.value("amplitude", 1.0);
  const std::string shape = j.value("shape", "bump");
  if (shape == "bump") return bump_function(box, amp);
  if (shape == "indicator") return indicator_function(box, amp);
  throw ConfigError("unknown shape: " + shape);
}

void parse_functional(Experiment& ex, const json& j) {
  const std::string name = j.at("name").get<std::string>();
  if (name == "count") {
    const Box box = parse_box(j, ex.dim);
    ex.F = count_functional(box, j.value("c", 1.0), j.value("cap", 64.0));
    ex.cyl.reset();
  } else if (name == "linear") {
    const MarkTimeFunction f = parse_shape(j, ex.dim);
    Cylindrical c = linear_functional(f, j.value("bound", 64.0));
    ex.F = c.as_functional();
    ex.cyl = std::move(c);
  } else if (name == "quadratic") {
    const MarkTimeFunction f = parse_shape(j, ex.dim);
    Cylindrical c = quadratic_functional(f, j.value("clip_lo", 64.0), j.value("clip_hi", 96.0));
    ex.F = c.as_functional();
    ex.cyl = std::move(c);
  } else if (name == "tanh") {
    const MarkTimeFunction f = parse_shape(j, ex.dim);
    Cylindrical c = tanh_functional(f);
    ex.F = c.as_functional();
    ex.cyl = std::move(c);
  } else {
    throw ConfigError("unknown functional: " + name);
  }
  ex.has_functional = true;
}

Control parse_control(const json& j, int dim) {
  const Box support = parse_box(j.at("support"), dim);
  std::vector<double> knots = j.value("knots", std::vector<double>{0.0, 1.0});
  const double c0 = j.value("c0", -0.9);
  const double c1 = j.value("c1", 4.0);
  std::vector<ControlPiece> pieces;
  for (const json& pj : j.at("pieces")) {
    ControlPiece piece;
    for (const json& cj : pj.at("cells")) {
      const Box box = parse_box(cj, dim);
      const double value = cj.at("value").get<double>();
      if (cj.contains("when_count_at_least")) {
        // Past-dependent cell: `value` when the past has at least k points in
        // the probe box, `else_value` otherwise.
        const int k = cj["when_count_at_least"].get<int>();
        const Box probe = cj.contains("when_box") ? parse_box(cj["when_box"], dim) : box;
        const double else_value = cj.value("else_value", 0.0);
        ControlCell cell;
        cell.box = box;
        cell.vmin = std::min(value, else_value);
        cell.vmax = std::max(value, else_value);
        cell.value = [probe, k, value, else_value](const Configuration& past) {
          int n = 0;
          for (const Point& p : past.points())
            if (probe.contains(p.u)) ++n;
          return n >= k ? value : else_value;
        };
        piece.cells.push_back(std::move(cell));
        piece.past_dependent = true;
      } else {
        piece.cells.push_back(ControlCell::constant(box, value));
      }
    }
    pieces.push_back(std::move(piece));
  }
  return Control(knots, pieces, c0, c1, support);
}

Experiment parse_experiment(const std::string& config_json, const std::string& out_override,
                            long long seed_override, int workers_override) {
  json cfg;
  try {
    cfg = json::parse(config_json);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  Experiment ex;
  ex.cfg = cfg;
  if (seed_override >= 0) {
    ex.seed = static_cast<std::uint64_t>(seed_override);
  } else {
    if (!cfg.contains("seed")) throw ConfigError("config missing required field: seed");
    ex.seed = cfg["seed"].get<std::uint64_t>();
  }
  ex.workers = workers_override > 0 ? workers_override : cfg.value("workers", 1);
  ex.out_dir = !out_override.empty() ? out_override : cfg.value("out", std::string("results"));

  const json mj = cfg.value("model", json{{"name", "lebesgue"}, {"dimension", 1}});
  ex.dim = mj.value("dimension", 1);
  const std::string mname = mj.value("name", "lebesgue");
  double param = 1.0;
  if (mj.contains("rate")) param = mj["rate"].get<double>();
  if (mj.contains("sigma")) param = mj["sigma"].get<double>();

  if (!cfg.contains("window")) throw ConfigError("config missing required field: window");
  ex.window.marks = parse_box(cfg["window"], ex.dim);
  if (cfg["window"].contains("time")) {
    const auto tv = cfg["window"]["time"].get<std::vector<double>>();
    if (tv.size() != 2 || tv[0] < 0.0 || tv[1] > 1.0 || tv[0] >= tv[1])
      throw ConfigError("window.time must be a nonempty interval inside [0,1]");
    ex.window.time = Interval{tv[0], tv[1]};
  }

  // Generous declared region: transports and paddings stay well inside.
  std::array<double, 3> gen{0, 0, 0};
  for (int i = 0; i < ex.dim; ++i) gen[i] = 8.0 * (ex.window.marks.axes[i].length() + 1.0);
  Box declared = ex.window.marks.expanded(gen);
  for (int i = 0; i < ex.dim; ++i) {
    declared.axes[i].lo = std::min(declared.axes[i].lo, -1.0);
    declared.axes[i].hi = std::max(declared.axes[i].hi, 1.0);
  }
  ex.model = make_catalog_model(mname, param, ex.dim, declared);

  if (cfg.contains("functional")) parse_functional(ex, cfg["functional"]);
  if (cfg.contains("controls"))
    for (const json& cj : cfg["controls"]) {
      ex.controls.push_back(parse_control(cj, ex.dim));
      ex.control_names.push_back(cj.value("name", "control_" +
                                                      std::to_string(ex.controls.size() - 1)));
    }
  if (cfg.contains("family")) {
    const json& fj = cfg["family"];
    ControlFamily fam;
    fam.support = parse_box(fj.at("support"), ex.dim);
    fam.knots = fj.value("knots", std::vector<double>{0.0, 1.0});
    if (fj.contains("cells")) {
      for (const json& cj : fj["cells"]) fam.mark_cells.push_back(parse_box(cj, ex.dim));
    } else {
      fam.mark_cells = {fam.support};
    }
    fam.lo = fj.value("lo", -0.9);
    fam.hi = fj.value("hi", 4.0);
    ex.family = std::move(fam);
  }

  const json bj = cfg.value("budgets", json::object());
  ex.replicates = bj.value("replicates", ex.replicates);
  ex.n_outer = bj.value("n_outer", ex.n_outer);
  ex.n_inner = bj.value("n_inner", ex.n_inner);
  ex.grid_m = bj.value("grid_m", ex.grid_m);
  ex.grid_m_coarse = bj.value("grid_m_coarse", ex.grid_m_coarse);
  ex.dual_n = bj.value("dual_n", ex.dual_n);
  ex.optimizer_budget = bj.value("optimizer", ex.optimizer_budget);
  ex.restarts = bj.value("restarts", ex.restarts);
  if (cfg.contains("tilt_thetas")) ex.tilt_thetas = cfg["tilt_thetas"].get<std::vector<double>>();

  // Padding: explicit array/number, or the displacement bound of everything
  // the experiment declares plus a bracket margin.
  if (cfg.contains("padding") && cfg["padding"].is_array()) {
    const auto pv = cfg["padding"].get<std::vector<double>>();
    for (std::size_t i = 0; i < pv.size() && i < 3; ++i) ex.padding[i] = pv[i];
    ex.auto_padding = false;
  } else if (cfg.contains("padding") && cfg["padding"].is_number()) {
    ex.padding[0] = cfg["padding"].get<double>();
    ex.auto_padding = false;
  } else {
    double r = 0.0;
    for (const Control& c : ex.controls)
      r = std::max(r, displacement_bound(c, *ex.model)[0]);
    if (ex.family) {
      const double amp = std::max(std::abs(ex.family->lo), std::abs(ex.family->hi));
      std::vector<ControlPiece> pieces;
      for (std::size_t i = 0; i + 1 < ex.family->knots.size(); ++i) {
        ControlPiece piece;
        for (const Box& cell : ex.family->mark_cells)
          piece.cells.push_back(ControlCell::constant(cell, amp));
        pieces.push_back(piece);
      }
      const Control envelope(ex.family->knots, pieces, 0.0, std::max(amp, 1e-9),
                             ex.family->support);
      r = std::max(r, displacement_bound(envelope, *ex.model)[0]);
    }
    ex.padding[0] = r + 0.1;  // one root-bracket width of slack
    if (ex.padding[0] > 100.0)
      throw ConfigError(
          "auto padding is impractical for this model (displacement bound " + fmt(r) +
          "); declare an explicit \"padding\"");
  }
  return ex;
}

void write_manifest(const Experiment& ex, const std::string& subcommand,
                    const std::vector<std::string>& files, double wall_ms, int exit_code) {
  json m;
  m["subcommand"] = subcommand;
  m["version"] = library_version();
  m["seed"] = ex.seed;
  m["workers"] = ex.workers;
  {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a(ex.cfg.dump())));
    m["config_fnv1a64"] = std::string(buf);
  }
  m["config"] = ex.cfg;
  m["files"] = files;
  m["wall_ms"] = wall_ms;
  m["exit_code"] = exit_code;
  std::ofstream out(fs::path(ex.out_dir) / "manifest.json");
  out << m.dump(2) << "\n";
}

void write_plot(const fs::path& path, const std::vector<std::pair<double, double>>& xy) {
  std::ofstream out(path, std::ios::binary);
  for (const auto& [x, y] : xy) out << fmt(x) << " " << fmt(y) << "\n";
}

// ---- subcommands ----------------------------------------------------------

int run_simulate(const Experiment& ex, std::ostringstream& report,
                 std::vector<std::string>& files) {
  const int n = std::min(ex.replicates, 200000);
  std::vector<std::string> rows(static_cast<std::size_t>(n));
  std::vector<double> counts(static_cast<std::size_t>(n));
  parallel_for(static_cast<std::size_t>(n), ex.workers, [&](std::size_t r) {
    Rng rng(StreamKey{ex.seed, StreamPurpose::simulate, r, 0});
    const Configuration w = simulate(*ex.model, ex.window, rng);
    counts[r] = static_cast<double>(w.size());
    std::string& s = rows[r];
    for (const Point& p : w.points()) {
      s += std::to_string(r);
      for (int i = 0; i < ex.dim; ++i) s += "," + fmt(p.u[i]);
      s += "," + fmt(p.t) + "\r\n";
    }
  });
  std::string header = "replicate";
  for (int i = 0; i < ex.dim; ++i) header += ",u" + std::to_string(i + 1);
  header += ",t\r\n";
  const fs::path points_path = fs::path(ex.out_dir) / "points.csv";
  {
    std::ofstream out(points_path, std::ios::binary);
    out << header;
    for (const std::string& s : rows) out << s;
  }
  files.push_back("points.csv");

  const double mass = window_mass(*ex.model, ex.window);
  const Estimate cnt = mean_se(counts);
  const double var = variance_of(counts);
  CsvWriter summary(fs::path(ex.out_dir) / "simulate_summary.csv",
                    {"quantity", "estimate", "se", "target", "pass"});
  const bool mean_ok = std::abs(cnt.value - mass) <= 4.0 * cnt.se;
  summary.row({"count_mean", fmt(cnt.value), fmt(cnt.se), fmt(mass), mean_ok ? "1" : "0"});
  summary.row({"count_variance", fmt(var), "", fmt(mass), ""});
  summary.flush();
  files.push_back("simulate_summary.csv");
  report << "simulate: " << n << " replicates, mean count " << cnt.value << " (target " << mass
         << ")\n";
  return mean_ok ? 0 : 1;
}

int run_clark_ocone(const Experiment& ex, std::ostringstream& report,
                    std::vector<std::string>& files) {
  if (!ex.has_functional) throw ConfigError("clark-ocone requires a functional");
  CsvWriter csv(fs::path(ex.out_dir) / "clark_ocone.csv",
                {"m", "n_inner", "n_outer", "residual", "se"});
  std::vector<std::pair<double, double>> plot;
  std::vector<ResidualReport> reps;
  const std::vector<int> grids = ex.grid_m_coarse < ex.grid_m
                                     ? std::vector<int>{ex.grid_m_coarse, ex.grid_m}
                                     : std::vector<int>{ex.grid_m};
  for (int m : grids) {
    ProjectionEngine eng(ex.F, ex.cyl, ex.model, ex.window, TimeGrid::uniform(m), ex.n_inner,
                         ex.seed);
    const int e_hat_n = std::max(10 * ex.n_outer, 10000);
    const ResidualReport rr = residual(eng, ex.n_outer, e_hat_n, ex.workers);
    reps.push_back(rr);
    csv.row({std::to_string(m), std::to_string(ex.n_inner), std::to_string(ex.n_outer),
             fmt(rr.residual), fmt(rr.se)});
    plot.emplace_back(m, rr.residual);
    report << "clark-ocone m=" << m << ": residual " << rr.residual << " (se " << rr.se
           << "), sd(F) " << rr.sd_F << "\n";
  }
  csv.flush();
  files.push_back("clark_ocone.csv");
  write_plot(fs::path(ex.out_dir) / "plot_residual_vs_m.txt", plot);
  files.push_back("plot_residual_vs_m.txt");

  int rc = 0;
  // Martingale part must be centered.
  for (const ResidualReport& rr : reps)
    if (std::abs(rr.mart_mean) > 4.0 * rr.mart_mean_se) rc = 1;
  // Refinement must not degrade the residual beyond noise.
  if (reps.size() == 2) {
    const double tol = 2.0 * std::sqrt(sq(reps[0].se) + sq(reps[1].se));
    if (reps[1].residual > reps[0].residual + tol) rc = 1;
  }
  return rc;
}

void require_full_time(const Experiment& ex, const char* what) {
  if (ex.window.time.lo != 0.0 || ex.window.time.hi != 1.0)
    throw ConfigError(std::string(what) + " requires window.time = [0, 1]");
}

int run_girsanov(const Experiment& ex, std::ostringstream& report,
                 std::vector<std::string>& files) {
  require_full_time(ex, "girsanov-check");
  CsvWriter csv(fs::path(ex.out_dir) / "girsanov_check.csv",
                {"estimator", "control", "value", "se", "agreement"});
  int rc = 0;
  const int n = std::min(ex.replicates, 200000);

  std::vector<Control> controls = ex.controls;
  std::vector<std::string> names = ex.control_names;
  if (controls.empty()) {
    for (double th : ex.tilt_thetas) {
      controls.push_back(Control::constant(th, ex.window.marks));
      names.push_back("theta=" + fmt(th));
    }
  }

  Functional one;
  one.eval = [](const Configuration&) { return 1.0; };
  one.bound = 1.0;
  one.dep_marks = ex.window.marks;
  const Functional count = count_functional(ex.window.marks, 1.0);
  const double lam = nu_mass(*ex.model, ex.window.marks);

  for (std::size_t c = 0; c < controls.size(); ++c) {
    const Control& phi = controls[c];
    const StreamKey key{ex.seed, StreamPurpose::simulate, 0, 100 + c};
    const Estimate unit = tilted_expectation_is(one, phi, *ex.model, ex.window, n, key);
    const bool unit_ok = std::abs(unit.value - 1.0) <= 4.0 * unit.se;
    csv.row({"doleans_mean", names[c], fmt(unit.value), fmt(unit.se), unit_ok ? "1" : "0"});
    if (!unit_ok) rc = 1;

    const Estimate is = tilted_expectation_is(count, phi, *ex.model, ex.window, n, key);
    if (phi.deterministic()) {
      const Estimate direct = tilted_expectation_direct(count, phi, *ex.model, ex.window, n, key);
      const double joint = std::sqrt(sq(is.se) + sq(direct.se));
      bool agree = std::abs(is.value - direct.value) <= 3.0 * joint;
      // Single-constant controls carry the closed-form tilted mean.
      if (phi.piece_count() == 1 && phi.pieces()[0].cells.size() == 1 &&
          phi.pieces()[0].cells[0].box.contains(ex.window.marks)) {
        const double target = lam * (1.0 + phi.pieces()[0].cells[0].vmin);
        agree = agree && std::abs(is.value - target) <= 3.0 * joint;
        csv.row({"tilted_count_closed_form", names[c], fmt(target), "0", agree ? "1" : "0"});
      }
      csv.row({"tilted_count_is", names[c], fmt(is.value), fmt(is.se), agree ? "1" : "0"});
      csv.row({"tilted_count_direct", names[c], fmt(direct.value), fmt(direct.se),
               agree ? "1" : "0"});
      if (!agree) rc = 1;

      const Estimate rel = relative_entropy(phi, *ex.model, ex.window, n, key);
      const double cost = entropy_cost(phi, nullptr, *ex.model);
      const bool rel_ok = std::abs(rel.value - cost) <= 3.0 * rel.se + 1e-12;
      csv.row({"relative_entropy", names[c], fmt(rel.value), fmt(rel.se), rel_ok ? "1" : "0"});
      csv.row({"entropy_cost", names[c], fmt(cost), "0", rel_ok ? "1" : "0"});
      if (!rel_ok) rc = 1;

      const MartingaleShiftReport ms = martingale_shift_check(
          indicator_function(ex.window.marks, 1.0), phi, *ex.model, ex.window, n, key);
      csv.row({"martingale_shift_is", names[c], fmt(ms.is.value), fmt(ms.is.se),
               ms.pass ? "1" : "0"});
      csv.row({"martingale_shift_direct", names[c], fmt(ms.direct.value), fmt(ms.direct.se),
               ms.pass ? "1" : "0"});
      if (!ms.pass) rc = 1;
    } else {
      csv.row({"tilted_count_is", names[c], fmt(is.value), fmt(is.se), "1"});
    }
  }
  csv.flush();
  files.push_back("girsanov_check.csv");
  report << "girsanov-check: " << controls.size() << " controls, "
         << (rc == 0 ? "all estimators agree" : "DISAGREEMENT FOUND") << "\n";
  return rc;
}

int run_transport(const Experiment& ex, std::ostringstream& report,
                  std::vector<std::string>& files) {
  int rc = 0;
  std::vector<Control> controls = ex.controls;
  std::vector<std::string> names = ex.control_names;
  if (controls.empty()) {
    controls.push_back(Control::constant(1.0, ex.window.marks));
    names.push_back("default_theta=1");
  }
  std::array<double, 3> padding = ex.padding;
  for (const Control& c : controls)
    padding[0] = std::max(padding[0], displacement_bound(c, *ex.model)[0] + 0.1);
  BufferPlan plan{ex.window, padding};
  auto eng = std::make_shared<const TransportEngine>(ex.model, plan);

  CsvWriter res_csv(fs::path(ex.out_dir) / "transport_pushforward.csv",
                    {"case", "residual", "pass"});
  // Weights from the declared controls plus a keyed random batch.
  std::vector<std::pair<std::string, RealizedWeight>> weights;
  const Configuration empty;
  for (std::size_t c = 0; c < controls.size(); ++c)
    for (std::size_t i = 0; i < controls[c].piece_count(); ++i)
      if (!controls[c].pieces()[i].past_dependent)
        weights.emplace_back(names[c] + "/piece" + std::to_string(i),
                             realize_weight(controls[c], i, empty));
  Rng wrng(StreamKey{ex.seed, StreamPurpose::test, 0, 7});
  const Interval sup0 = ex.window.marks.axes[0];
  while (weights.size() < 20) {
    RealizedWeight w;
    const double a = wrng.uniform(sup0.lo, sup0.hi - 0.1 * sup0.length());
    const double b = wrng.uniform(a + 0.05 * sup0.length(), sup0.hi);
    Box box = ex.window.marks;
    box.axes[0] = Interval{a, b};
    w.boxes.push_back(box);
    w.phi_values.push_back(wrng.uniform(-0.6, 2.0));
    weights.emplace_back("random_" + std::to_string(weights.size()), w);
  }
  for (std::size_t k = 0; k < weights.size(); ++k) {
    MarkTimeFunction f = bump_function(ex.window.marks, 1.0);
    const double r = pushforward_residual(
        *eng, weights[k].second, [&](const Mark& u) { return f(u, 0.0); }, ex.window.marks);
    const bool ok = r <= 1e-6;
    res_csv.row({weights[k].first, fmt(r), ok ? "1" : "0"});
    if (!ok) rc = 1;
  }
  res_csv.flush();
  files.push_back("transport_pushforward.csv");

  // Inverse composition on sampled points.
  CsvWriter comp_csv(fs::path(ex.out_dir) / "transport_composition.csv",
                     {"case", "max_error", "pass"});
  for (std::size_t k = 0; k < weights.size(); ++k) {
    const auto map = eng->map_for(weights[k].second, mark1(0.0));
    double worst = 0.0;
    Rng prng(StreamKey{ex.seed, StreamPurpose::test, 1, k});
    const Interval dom = eng->plan().padded().marks.axes[0];
    for (int s = 0; s < 64; ++s) {
      const double x = prng.uniform(dom.lo, dom.hi);
      worst = std::max(worst, std::abs(map->inverse(map->forward(x)) - x));
      worst = std::max(worst, std::abs(map->forward(map->inverse(x)) - x));
    }
    const bool ok = worst <= 1e-9;
    comp_csv.row({weights[k].first, fmt(worst), ok ? "1" : "0"});
    if (!ok) rc = 1;
  }
  comp_csv.flush();
  files.push_back("transport_composition.csv");

  // Map stability along (1 - 1/n) * phi.
  if (controls.front().deterministic()) {
    const Control& base = controls.front();
    std::vector<Control> seq;
    for (int nn : {2, 4, 8, 16}) {
      std::vector<ControlPiece> pieces;
      for (std::size_t i = 0; i < base.piece_count(); ++i) {
        ControlPiece piece;
        for (const ControlCell& cell : base.pieces()[i].cells)
          piece.cells.push_back(ControlCell::constant(
              cell.box, (1.0 - 1.0 / static_cast<double>(nn)) * cell.vmin));
        pieces.push_back(piece);
      }
      seq.push_back(Control(base.knots(), pieces, base.c0(), base.c1(), base.support()));
    }
    std::vector<double> sample_marks, sample_times{0.5};
    const Interval dom = eng->plan().padded().marks.axes[0];
    for (int s = 0; s <= 16; ++s)
      sample_marks.push_back(dom.lo + dom.length() * s / 16.0);
    const H2Report h2 = h2_stability_check(*eng, seq, base, sample_marks, sample_times, 1e-1);
    CsvWriter h2_csv(fs::path(ex.out_dir) / "transport_h2.csv",
                     {"n", "forward_discrepancy", "inverse_discrepancy"});
    const int ns[4] = {2, 4, 8, 16};
    std::vector<std::pair<double, double>> plot;
    for (std::size_t i = 0; i < h2.forward_discrepancy.size(); ++i) {
      h2_csv.row({std::to_string(ns[i]), fmt(h2.forward_discrepancy[i]),
                  fmt(h2.inverse_discrepancy[i])});
      plot.emplace_back(ns[i], h2.forward_discrepancy[i]);
    }
    h2_csv.flush();
    files.push_back("transport_h2.csv");
    write_plot(fs::path(ex.out_dir) / "plot_h2_discrepancy.txt", plot);
    files.push_back("plot_h2_discrepancy.txt");
    if (!h2.decreasing) rc = 1;
  }
  report << "transport-check: " << weights.size() << " weights, "
         << (rc == 0 ? "all residuals in tolerance" : "TOLERANCE FAILURE") << "\n";
  return rc;
}

int run_duality(const Experiment& ex, std::ostringstream& report,
                std::vector<std::string>& files) {
  if (!ex.has_functional) throw ConfigError("duality requires a functional");
  if (!ex.family) throw ConfigError("duality requires a control family");
  require_full_time(ex, "duality");
  BufferPlan plan{ex.window, ex.padding};
  auto eng = std::make_shared<const TransportEngine>(ex.model, plan);
  DualityBudgets budgets;
  budgets.n_lhs = ex.dual_n;
  budgets.n_dual = ex.dual_n;
  budgets.optimizer_budget = ex.optimizer_budget;
  budgets.restarts = ex.restarts;
  budgets.n_inner = ex.n_inner;
  const DualReport rep = duality_report(ex.F, *ex.family, eng, budgets, ex.seed);

  CsvWriter csv(fs::path(ex.out_dir) / "duality.csv",
                {"quantity", "estimate", "se", "target", "pass"});
  for (const DualityRow& row : rep.rows)
    csv.row({row.quantity, fmt(row.estimate), fmt(row.se),
             row.has_target ? fmt(row.target) : "", row.pass ? "1" : "0"});
  csv.flush();
  files.push_back("duality.csv");

  // Dual objective against the family parameter (common random numbers);
  // empty series when the family is not one-dimensional.
  std::vector<std::pair<double, double>> plot;
  if (ex.family->param_count() == 1) {
    const StreamKey crn{ex.seed, StreamPurpose::optimizer, 2, 0};
    for (int i = 0; i <= 24; ++i) {
      const double th = ex.family->lo + (ex.family->hi - ex.family->lo) * i / 24.0;
      const double v[1] = {th};
      plot.emplace_back(
          th, dual_transport(ex.F, ex.family->make(std::span<const double>(v, 1)), *eng,
                             std::max(ex.dual_n / 4, 1000), crn)
                  .value);
    }
  }
  write_plot(fs::path(ex.out_dir) / "plot_dual_vs_theta.txt", plot);
  files.push_back("plot_dual_vs_theta.txt");

  report << "duality: lhs " << rep.lhs.value << " +- " << rep.lhs.se << ", min dual "
         << rep.minimum.best.value << " +- " << rep.minimum.best.se << ", gap " << rep.gap
         << " +- " << rep.gap_se << (rep.minimum.converged ? "" : " [optimizer non-converged]")
         << "\n";
  for (const DualityRow& row : rep.rows)
    report << "  " << row.quantity << ": " << row.estimate << " +- " << row.se
           << (row.has_target ? (" target " + fmt(row.target)) : "")
           << (row.pass ? " [ok]" : " [FAIL]") << "\n";
  return rep.weak_duality_ok && rep.attained_ok ? 0 : 1;
}

}  // namespace

std::string library_version() { return "0.1.0"; }

RunOutcome run_subcommand(const std::string& subcommand, const std::string& config_json,
                          const std::string& out_dir_override, long long seed_override,
                          int workers_override) {
  const auto t0 = std::chrono::steady_clock::now();
  Experiment ex = parse_experiment(config_json, out_dir_override, seed_override,
                                   workers_override);
  fs::create_directories(ex.out_dir);

  std::ostringstream report;
  std::vector<std::string> files;
  int rc = 0;
  if (subcommand == "simulate") {
    rc = run_simulate(ex, report, files);
  } else if (subcommand == "clark-ocone") {
    rc = run_clark_ocone(ex, report, files);
  } else if (subcommand == "girsanov-check") {
    rc = run_girsanov(ex, report, files);
  } else if (subcommand == "transport-check") {
    rc = run_transport(ex, report, files);
  } else if (subcommand == "duality") {
    rc = run_duality(ex, report, files);
  } else {
    throw ConfigError("unknown subcommand: " + subcommand);
  }
  const double wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  write_manifest(ex, subcommand, files, wall_ms, rc);

  RunOutcome out;
  out.exit_code = rc;
  out.report = report.str();
  return out;
}

}  // namespace plab
