#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <boost/version.hpp>
#include <omp.h>

#include "isoquot/io.hpp"

using namespace isoquot;
namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kValidation = 2, kNumerical = 3, kIo = 4 };

struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

json default_config() {
  const char* env = std::getenv("ISOQUOT_OUT_DIR");
  return {{"m", 3},
          {"manifold", "sphere"},
          {"r", 1},
          {"t_values", {0.0, 0.05, 0.1}},
          {"seed", 42},
          {"family", nullptr},
          {"a", 0},
          {"b", -1},
          {"weights", {{1, 0}, {0, 1}, {1, 1}, {2, -1}, {3, 5}}},
          {"points", 200},
          {"volume_points", 1000},
          {"N", 4000},
          {"epsilon", nullptr},
          {"k", 10},
          {"seeds", {0, 1, 2, 3, 4}},
          {"sphere_dim", 2},
          {"save_cloud", false},
          {"tolerances", {{"isospectral", 1e-9}, {"separation", 1e-6}, {"generic", 1e-9}, {"residual", 1e-8}}},
          {"output_dir", env && *env ? env : "isoquot_out"}};
}

struct Run {
  std::string command;
  json config;
  fs::path out;

  int m() const { return config.at("m").get<int>(); }
  double tol(const char* key) const { return config.at("tolerances").at(key).get<double>(); }

  Manifold manifold() const {
    const std::string tag = config.at("manifold").get<std::string>();
    if (tag == "sphere") return Manifold::sphere(m());
    if (tag == "stiefel") {
      const int r = config.at("r").get<int>();
      if (r < 1 || r > m() + 2) throw ValidationError("r must satisfy 1 <= r <= m + 2");
      return Manifold::stiefel(m(), r);
    }
    throw ValidationError("manifold must be \"sphere\" or \"stiefel\"");
  }

  fs::path family_path() const {
    return config.at("family").is_null() ? out / "family.json" : fs::path(config.at("family").get<std::string>());
  }

  Family family() const {
    Family fam = family_from_json(read_json(family_path()));
    if (fam.members.empty()) throw ValidationError("family file has no members");
    return fam;
  }

  std::pair<int, int> pair_indices(const Family& fam) const {
    const int n = static_cast<int>(fam.members.size());
    auto fix = [n](int i) { return i < 0 ? n + i : i; };
    const int a = fix(config.at("a").get<int>());
    const int b = fix(config.at("b").get<int>());
    if (a < 0 || a >= n || b < 0 || b >= n) throw ValidationError("member index out of range");
    return {a, b};
  }

  FamilyOptions family_options() const {
    FamilyOptions o;
    o.isospectral_tol = tol("isospectral");
    o.separation_tol = tol("separation");
    o.generic_tol = tol("generic");
    return o;
  }

  json report(const json& results) const {
    return {{"command", command},
            {"config", config},
            {"config_hash", config_hash(config)},
            {"versions",
             {{"isoquot", kGeneratorVersion},
              {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                            std::to_string(EIGEN_MINOR_VERSION)},
              {"boost", BOOST_LIB_VERSION}}},
            {"results", results}};
  }

  void emit(const std::string& name, const json& results) const {
    write_json(out / (name + ".json"), report(results));
    std::cout << "wrote " << (out / (name + ".json")).string() << "\n";
  }
};

int validate_spectral_params(const json& c) {
  const int n = c.at("N").get<int>();
  const int k = c.at("k").get<int>();
  if (n < 2) throw ValidationError("N must be >= 2");
  if (k < 1 || k >= n) throw ValidationError("k must satisfy 1 <= k < N");
  if (!c.at("epsilon").is_null() && !(c.at("epsilon").get<double>() > 0.0)) throw ValidationError("epsilon must be > 0");
  return n;
}

std::optional<double> epsilon_of(const json& c) {
  if (c.at("epsilon").is_null()) return std::nullopt;
  return c.at("epsilon").get<double>();
}

std::vector<std::uint64_t> seeds_of(const json& c) { return c.at("seeds").get<std::vector<std::uint64_t>>(); }

int cmd_family_gen(Run& run) {
  if (run.m() < 3) throw ValidationError("family generation requires m >= 3 (got m = " + std::to_string(run.m()) + ")");
  const auto ts = run.config.at("t_values").get<std::vector<double>>();
  if (ts.empty()) throw ValidationError("t_values must not be empty");
  Family fam;
  try {
    fam = generate_family(run.m(), ts, run.config.at("seed").get<std::uint64_t>(), run.family_options());
  } catch (const ContinuationFailure& e) {
    run.emit("family_gen", {{"ok", false}, {"error", e.what()}});
    return kNumerical;
  }
  write_json(run.out / "family.json", family_to_json(fam));
  json files = json::array();
  for (std::size_t i = 0; i < fam.members.size(); ++i) {
    JMapProvenance prov;
    prov.seed = fam.seed;
    prov.t = fam.members[i].t;
    const fs::path p = run.out / ("jmap_" + std::to_string(i) + ".json");
    write_json(p, jmap_to_json(fam.members[i].j, prov));
    files.push_back(p.filename().string());
  }
  run.emit("family_gen", {{"ok", fam.validation.ok},
                          {"attempts", fam.attempts},
                          {"transverse_dimension", fam.transverse_dimension},
                          {"validation", validation_to_json(fam.validation)},
                          {"files", files}});
  return fam.validation.ok ? kOk : kNumerical;
}

int cmd_family_check(Run& run) {
  const Family fam = run.family();
  const FamilyOptions opts = run.family_options();
  const FamilyValidation v = validate_family(fam.members, opts);
  json pairs = json::array();
  const std::size_t n = fam.members.size();
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b) {
      const auto iso = is_isospectral(fam.members[a].j, fam.members[b].j, opts.isospectral_tol);
      pairs.push_back({{"a", a},
                       {"b", b},
                       {"max_isospectral_discrepancy", iso.max_discrepancy},
                       {"invariant_separation", invariant_separation(fam.members[a].j, fam.members[b].j)}});
    }
  json generic = json::array();
  for (const auto& mem : fam.members) generic.push_back(genericity_to_json(is_generic(mem.j, opts.generic_tol)));
  run.emit("family_check", {{"ok", v.ok}, {"validation", validation_to_json(v)}, {"pairs", pairs}, {"genericity", generic}});
  return v.ok ? kOk : kNumerical;
}

int cmd_verify(Run& run) {
  const Family fam = run.family();
  const Manifold mf = run.manifold();
  if (mf.m != fam.members.front().j.m()) throw ValidationError("config m does not match the family");
  const double tol = run.tol("residual");
  const int points = run.config.at("points").get<int>();
  const int vpoints = run.config.at("volume_points").get<int>();
  const std::uint64_t seed = run.config.at("seed").get<std::uint64_t>();
  bool ok = true;

  auto form_for = [&](const JMap& j) {
    return mf.kind == ManifoldKind::sphere ? FormSpec::sphere(j) : FormSpec::stiefel(j, mf.r);
  };
  json members = json::array();
  for (std::size_t i = 0; i < fam.members.size(); ++i) {
    const FormSpec f = form_for(fam.members[i].j);
    const auto adm = check_admissible(f, points, seed, tol);
    const auto vol = check_volume(f, vpoints, seed);
    ok = ok && adm.ok() && vol.max_deviation < tol;
    members.push_back({{"index", i},
                       {"t", fam.members[i].t},
                       {"admissibility", admissibility_to_json(adm)},
                       {"volume_max_deviation", vol.max_deviation}});
  }

  json intertwining = json::array();
  double worst = 0.0;
  for (std::size_t i = 1; i < fam.members.size(); ++i) {
    for (const auto& w : run.config.at("weights")) {
      const Weight mu{w.at(0).get<int>(), w.at(1).get<int>()};
      const auto rep = verify_intertwining(fam.members[0].j, fam.members[i].j, mu, mf, points, seed, tol);
      worst = std::max(worst, rep.residual);
      ok = ok && rep.ok;
      json entry = intertwining_to_json(rep);
      entry["pair"] = {0, i};
      entry["weight"] = {mu.p, mu.q};
      intertwining.push_back(std::move(entry));
    }
  }

  const double r1 = r1_reduction_residual(fam.members.front().j, vpoints, seed);
  ok = ok && r1 < 1e-12;
  json results = {{"ok", ok},
                  {"manifold", mf.name()},
                  {"members", members},
                  {"intertwining", intertwining},
                  {"max_intertwining_residual", worst},
                  {"r1_reduction_residual", r1},
                  {"orbifold", orbifold_to_json(orbifold_report(mf))}};
  if (mf.kind == ManifoldKind::stiefel)
    results["nonisometry"] = nonisometry_to_json(nonisometry_report(fam.members.front().j, fam.members.back().j, mf));
  run.emit("verify", results);
  std::cout << "max intertwining residual " << worst << (ok ? "  ok" : "  FAILED") << "\n";
  return ok ? kOk : kNumerical;
}

int cmd_strata(Run& run) {
  const Manifold mf = run.manifold();
  const int points = run.config.at("points").get<int>();
  Rng rng = derived_rng(run.config.at("seed").get<std::uint64_t>(), 0);
  int principal = 0;
  int agree = 0;
  for (int i = 0; i < points; ++i) {
    const CMat p = random_point(mf, rng);
    if (mf.r == 1) {
      const bool a = in_principal_hat(p);
      principal += a ? 1 : 0;
      agree += a == in_principal_hat_computed(p) ? 1 : 0;
    } else {
      principal += stabilizer_dim(mf, p) == 0 ? 1 : 0;
      agree += 1;
    }
  }
  run.emit("strata", {{"manifold", mf.name()},
                      {"orbifold", orbifold_to_json(orbifold_report(mf))},
                      {"sampled_points", points},
                      {"principal_fraction", static_cast<double>(principal) / points},
                      {"membership_tests_agree", agree == points}});
  return kOk;
}

int cmd_calibrate(Run& run) {
  const json& c = run.config;
  const int n = validate_spectral_params(c);
  const int dim = c.at("sphere_dim").get<int>();
  if (dim != 2 && dim != 3) throw ValidationError("sphere_dim must be 2 or 3");
  json per_seed = json::array();
  std::vector<StaircaseSeries> plot;
  const int k = c.at("k").get<int>();
  for (const auto s : seeds_of(c)) {
    const CalibrationReport rep = calibrate_round(dim, n, epsilon_of(c), k, s);
    write_text(run.out / ("calibrate_seed" + std::to_string(s) + ".csv"), eigenvalue_csv(rep.estimate, s));
    per_seed.push_back({{"seed", s}, {"report", calibration_to_json(rep)}});
    if (plot.empty()) {
      plot.push_back({"analytic S^" + std::to_string(dim), rep.analytic});
      plot.push_back({"estimate (seed " + std::to_string(s) + ")", rep.estimate.eigenvalues});
    }
  }
  RVec med(k);
  for (int i = 0; i < k; ++i) {
    std::vector<double> v;
    for (const auto& e : per_seed) v.push_back(e.at("report").at("estimate").at("eigenvalues").at(i).get<double>());
    std::sort(v.begin(), v.end());
    med(i) = v.size() % 2 ? v[v.size() / 2] : 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
  }
  std::vector<double> medv(med.data(), med.data() + med.size());
  write_text(run.out / "calibrate.svg", staircase_svg("round S^" + std::to_string(dim) + " calibration", plot));
  run.emit("calibrate", {{"seeds", per_seed}, {"median_eigenvalues", medv},
                         {"analytic", std::vector<double>(plot.front().values.data(), plot.front().values.data() + k)}});
  return kOk;
}

FormSpec form_on(const Manifold& mf, const JMap& j) {
  return mf.kind == ManifoldKind::sphere ? FormSpec::sphere(j) : FormSpec::stiefel(j, mf.r);
}

int cmd_estimate(Run& run) {
  const json& c = run.config;
  const int n = validate_spectral_params(c);
  const Family fam = run.family();
  const auto [a, b] = run.pair_indices(fam);
  (void)b;
  const Manifold mf = run.manifold();
  const FormSpec form = form_on(mf, fam.members[static_cast<std::size_t>(a)].j);
  json per_seed = json::array();
  for (const auto s : seeds_of(c)) {
    EstimateConfig ec;
    ec.n_points = n;
    ec.epsilon = epsilon_of(c);
    ec.k = c.at("k").get<int>();
    ec.seed = s;
    const SpectrumEstimate est = estimate_quotient_spectrum(form, ec);
    write_text(run.out / ("estimate_seed" + std::to_string(s) + ".csv"), eigenvalue_csv(est, s));
    if (c.at("save_cloud").get<bool>())
      write_text(run.out / ("cloud_seed" + std::to_string(s) + ".txt"), cloud_to_text(sample_uniform(mf, n, s)));
    per_seed.push_back({{"seed", s}, {"estimate", spectrum_to_json(est)}});
  }
  run.emit("estimate", {{"manifold", mf.name()}, {"member", a}, {"seeds", per_seed}});
  return kOk;
}

int cmd_compare(Run& run) {
  const json& c = run.config;
  const int n = validate_spectral_params(c);
  const Family fam = run.family();
  const auto [a, b] = run.pair_indices(fam);
  const Manifold mf = run.manifold();
  const JMap& ja = fam.members[static_cast<std::size_t>(a)].j;
  const JMap& jb = fam.members[static_cast<std::size_t>(b)].j;
  const ComparisonReport rep = compare_spectra(ja, jb, mf, n, epsilon_of(c), c.at("k").get<int>(), seeds_of(c));
  std::ostringstream csv;
  csv << "index,seed,lambda_a,lambda_b,lambda_control\n";
  for (const auto& s : rep.seeds)
    for (Eigen::Index i = 0; i < s.lambda_a.size(); ++i) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "%ld,%llu,%.17g,%.17g,%.17g\n", static_cast<long>(i),
                    static_cast<unsigned long long>(s.seed), s.lambda_a(i), s.lambda_b(i), s.lambda_control(i));
      csv << buf;
    }
  write_text(run.out / "compare.csv", csv.str());
  if (!rep.seeds.empty()) {
    const auto& s = rep.seeds.front();
    write_text(run.out / "compare.svg",
               staircase_svg("coupled spectra, seed " + std::to_string(s.seed),
                             {{"j(t_a)", s.lambda_a}, {"j(t_b)", s.lambda_b}, {"control 1.2 j(t_b)", s.lambda_control}}));
  }
  json results = comparison_to_json(rep);
  results["members"] = {a, b};
  run.emit("compare", results);
  std::cout << "median max rel diff: pair " << rep.median_pair << ", control " << rep.median_control << "\n";
  return rep.contrast ? kOk : kNumerical;
}

int cmd_nonisometry(Run& run) {
  const Family fam = run.family();
  const auto [a, b] = run.pair_indices(fam);
  const Manifold mf = run.manifold();
  NonisometryOptions o;
  o.separation_tol = run.tol("separation");
  o.generic_tol = run.tol("generic");
  o.isospectral_tol = run.tol("isospectral");
  o.witness_tol = run.tol("residual");
  o.search.seed = run.config.at("seed").get<std::uint64_t>();
  const NonisometryReport rep = nonisometry_report(fam.members[static_cast<std::size_t>(a)].j,
                                                   fam.members[static_cast<std::size_t>(b)].j, mf, o);
  json results = nonisometry_to_json(rep);
  results["members"] = {a, b};
  run.emit("nonisometry", results);
  std::cout << "verdict: " << rep.verdict << "\n";
  return rep.verdict == "inconclusive" ? kNumerical : kOk;
}

template <typename T>
void add_key(CLI::App& app, json& overrides, const std::string& key, const std::string& desc) {
  app.add_option_function<T>("--" + key, [&overrides, key](const T& v) { overrides[key] = v; }, desc);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"isoquot: isospectral circle quotients of deformed spheres and Stiefel manifolds"};
  app.require_subcommand(1);
  std::string config_path;
  json overrides = json::object();
  std::optional<int> workers;
  std::optional<double> tol;
  app.add_option("--config", config_path, "JSON config file");
  app.add_option("--workers", workers, "thread cap for parallel loops");
  app.add_option("--tol", tol, "residual tolerance (tolerances.residual)");
  add_key<std::uint64_t>(app, overrides, "seed", "master seed");
  add_key<int>(app, overrides, "m", "size of the j-maps");
  add_key<std::string>(app, overrides, "manifold", "sphere | stiefel");
  add_key<int>(app, overrides, "r", "Stiefel rank");
  add_key<std::vector<double>>(app, overrides, "t_values", "family parameters");
  add_key<std::string>(app, overrides, "family", "family file (default <output_dir>/family.json)");
  add_key<int>(app, overrides, "a", "first member index (negative counts from the end)");
  add_key<int>(app, overrides, "b", "second member index");
  add_key<int>(app, overrides, "points", "random points per check");
  add_key<int>(app, overrides, "volume_points", "random points for the volume check");
  add_key<int>(app, overrides, "N", "cloud size");
  add_key<double>(app, overrides, "epsilon", "graph radius (default rule when absent)");
  add_key<int>(app, overrides, "k", "number of eigenvalues");
  add_key<std::vector<std::uint64_t>>(app, overrides, "seeds", "cloud seeds");
  add_key<int>(app, overrides, "sphere_dim", "calibration sphere dimension (2 or 3)");
  add_key<bool>(app, overrides, "save_cloud", "write point clouds");
  add_key<std::string>(app, overrides, "output_dir", "output directory (env ISOQUOT_OUT_DIR)");

  std::string command;
  auto sub = [&](CLI::App* parent, const std::string& name, const std::string& desc, const std::string& full) {
    CLI::App* s = parent->add_subcommand(name, desc);
    s->fallthrough();
    s->callback([&command, full] { command = full; });
    return s;
  };
  CLI::App* family = app.add_subcommand("family", "j-map families")->require_subcommand(1)->fallthrough();
  sub(family, "gen", "generate and persist a family", "family gen");
  sub(family, "check", "re-validate a persisted family", "family check");
  sub(&app, "verify", "admissibility, volume, intertwining and reduction checks", "verify");
  sub(&app, "strata", "orbit-type strata and the orbifold criterion", "strata");
  CLI::App* spectrum = app.add_subcommand("spectrum", "Laplace spectrum estimates")->require_subcommand(1)->fallthrough();
  sub(spectrum, "calibrate", "graph Laplacian on a round sphere", "spectrum calibrate");
  sub(spectrum, "estimate", "spectrum of one quotient", "spectrum estimate");
  sub(spectrum, "compare", "coupled comparison of a family pair and a control", "spectrum compare");
  sub(&app, "nonisometry", "non-isometry criterion for a family pair", "nonisometry");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  const auto start = std::chrono::steady_clock::now();
  Run run;
  run.command = command;
  try {
    run.config = default_config();
    if (!config_path.empty()) {
      const json file = read_json(config_path);
      if (!file.is_object()) throw ValidationError("config must be a JSON object");
      for (const auto& [key, value] : file.items()) {
        if (!run.config.contains(key)) throw ValidationError("unknown config key: " + key);
        if (key == "tolerances") {
          for (const auto& [tk, tv] : value.items()) run.config["tolerances"][tk] = tv;
        } else {
          run.config[key] = value;
        }
      }
    }
    for (const auto& [key, value] : overrides.items()) run.config[key] = value;
    if (tol) run.config["tolerances"]["residual"] = *tol;
    if (workers) {
      if (*workers < 1) throw ValidationError("--workers must be >= 1");
      omp_set_num_threads(*workers);
    }
    run.out = run.config.at("output_dir").get<std::string>();

    int code = kOk;
    if (command == "family gen") code = cmd_family_gen(run);
    else if (command == "family check") code = cmd_family_check(run);
    else if (command == "verify") code = cmd_verify(run);
    else if (command == "strata") code = cmd_strata(run);
    else if (command == "spectrum calibrate") code = cmd_calibrate(run);
    else if (command == "spectrum estimate") code = cmd_estimate(run);
    else if (command == "spectrum compare") code = cmd_compare(run);
    else if (command == "nonisometry") code = cmd_nonisometry(run);

    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::string stem = command;
    std::replace(stem.begin(), stem.end(), ' ', '_');
    write_json(run.out / (stem + ".timing.json"), {{"command", command}, {"wall_seconds", wall}});
    return code;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kIo;
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kValidation;
  } catch (const std::invalid_argument& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kValidation;
  } catch (const json::exception& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kValidation;
  } catch (const LanczosError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  }
}
