#include "isoquot/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace isoquot {

namespace {

json matrix_to_json(const CMat& a) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < a.cols(); ++c) row.push_back({a(r, c).real(), a(r, c).imag()});
    rows.push_back(std::move(row));
  }
  return rows;
}

CMat matrix_from_json(const json& rows, int m, const char* what) {
  if (!rows.is_array() || static_cast<int>(rows.size()) != m)
    throw std::invalid_argument(std::string("jmap: ") + what + " must have m rows");
  CMat a(m, m);
  for (int r = 0; r < m; ++r) {
    const json& row = rows[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<int>(row.size()) != m)
      throw std::invalid_argument(std::string("jmap: ") + what + " must be m x m");
    for (int c = 0; c < m; ++c) {
      const json& e = row[static_cast<std::size_t>(c)];
      if (!e.is_array() || e.size() != 2) throw std::invalid_argument("jmap: entries are [re, im] pairs");
      a(r, c) = cplx(e[0].get<double>(), e[1].get<double>());
    }
  }
  return a;
}

json vec_to_json(const RVec& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

json tvalue_json(const TorusVector& z) { return {z.a, z.b}; }

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

json jmap_to_json(const JMap& j, const JMapProvenance& prov) {
  json doc;
  doc["m"] = j.m();
  doc["J1"] = matrix_to_json(j.j1());
  doc["J2"] = matrix_to_json(j.j2());
  doc["provenance"] = {{"seed", prov.seed}, {"t", prov.t}, {"generator_version", prov.generator_version}};
  return doc;
}

JMap jmap_from_json(const json& doc, JMapProvenance* prov) {
  if (!doc.is_object() || !doc.contains("m") || !doc.contains("J1") || !doc.contains("J2"))
    throw std::invalid_argument("jmap: expected keys m, J1, J2");
  const int m = doc.at("m").get<int>();
  if (m < 1) throw std::invalid_argument("jmap: m must be positive");
  JMap j(matrix_from_json(doc.at("J1"), m, "J1"), matrix_from_json(doc.at("J2"), m, "J2"));
  if (prov && doc.contains("provenance")) {
    const json& p = doc.at("provenance");
    prov->seed = p.value("seed", std::uint64_t{0});
    prov->t = p.value("t", 0.0);
    prov->generator_version = p.value("generator_version", std::string());
  }
  return j;
}

json validation_to_json(const FamilyValidation& v) {
  return {{"max_isospectral_discrepancy", v.max_isospectral_discrepancy},
          {"max_commutant_dimension", v.max_commutant_dimension},
          {"min_pairwise_separation", v.min_pairwise_separation},
          {"ok", v.ok}};
}

json family_to_json(const Family& fam) {
  json doc;
  doc["format"] = "isoquot-family";
  doc["m"] = fam.members.empty() ? 0 : fam.members.front().j.m();
  doc["seed"] = fam.seed;
  doc["attempts"] = fam.attempts;
  doc["transverse_dimension"] = fam.transverse_dimension;
  json members = json::array();
  for (const auto& mem : fam.members) {
    JMapProvenance prov;
    prov.seed = fam.seed;
    prov.t = mem.t;
    members.push_back(jmap_to_json(mem.j, prov));
  }
  doc["members"] = std::move(members);
  doc["validation"] = validation_to_json(fam.validation);
  return doc;
}

Family family_from_json(const json& doc) {
  if (!doc.is_object() || !doc.contains("members")) throw std::invalid_argument("family: expected key members");
  Family fam;
  fam.seed = doc.value("seed", std::uint64_t{0});
  fam.attempts = doc.value("attempts", 0);
  fam.transverse_dimension = doc.value("transverse_dimension", 0);
  for (const json& mj : doc.at("members")) {
    JMapProvenance prov;
    JMap j = jmap_from_json(mj, &prov);
    fam.members.push_back({prov.t, std::move(j)});
  }
  if (doc.contains("validation")) {
    const json& v = doc.at("validation");
    fam.validation.max_isospectral_discrepancy = v.value("max_isospectral_discrepancy", 0.0);
    fam.validation.max_commutant_dimension = v.value("max_commutant_dimension", 0);
    fam.validation.min_pairwise_separation = v.value("min_pairwise_separation", 0.0);
    fam.validation.ok = v.value("ok", false);
  }
  return fam;
}

json isospectrality_to_json(const IsospectralityReport& r) {
  json dirs = json::array();
  for (const auto& z : r.directions) dirs.push_back(tvalue_json(z));
  json disc = json::array();
  for (double d : r.discrepancy) disc.push_back(d);
  return {{"isospectral", r.isospectral}, {"max_discrepancy", r.max_discrepancy}, {"directions", dirs},
          {"discrepancy", disc}};
}

json genericity_to_json(const GenericityReport& g) {
  return {{"generic", g.generic},
          {"commutant_dimension", g.commutant_dimension},
          {"smallest_singular_values", vec_to_json(g.singular_values.head(std::min<Eigen::Index>(3, g.singular_values.size())))}};
}

json witness_to_json(const EquivalenceWitness& w) {
  return {{"A", matrix_to_json(w.a)},
          {"symmetry", w.symmetry.describe()},
          {"symmetry_index", w.symmetry_index},
          {"residual", w.residual},
          {"restart", w.restart}};
}

json admissibility_to_json(const AdmissibilityReport& r) {
  return {{"t_horizontal", r.t_horizontal},
          {"g_horizontal", r.g_horizontal},
          {"t_invariant", r.t_invariant},
          {"g_invariant", r.g_invariant},
          {"failures", r.failures},
          {"ok", r.ok()}};
}

json intertwining_to_json(const IntertwiningReport& r) {
  return {{"residual", r.residual},
          {"equivariance", r.equivariance},
          {"isometry", r.isometry},
          {"tangency", r.tangency},
          {"ok", r.ok}};
}

json orbifold_to_json(const OrbifoldReport& r) {
  json doc = {{"manifold_dim", r.manifold_dim}, {"quotient_dim", r.quotient_dim}};
  doc["singular_dim"] = r.singular_dim ? json(*r.singular_dim) : json(nullptr);
  doc["codim"] = r.codim ? json(*r.codim) : json(nullptr);
  doc["singular_model"] = r.singular_model;
  doc["is_orbifold"] = r.is_orbifold;
  return doc;
}

json spectrum_to_json(const SpectrumEstimate& s) {
  return {{"eigenvalues", vec_to_json(s.eigenvalues)},
          {"residuals", vec_to_json(s.residuals)},
          {"iterations", s.iterations},
          {"normalization", s.normalization},
          {"epsilon", s.epsilon},
          {"N", s.n_points},
          {"components", s.components},
          {"warnings", s.warnings}};
}

json calibration_to_json(const CalibrationReport& r) {
  return {{"sphere_dim", r.sphere_dim},
          {"estimate", spectrum_to_json(r.estimate)},
          {"analytic", vec_to_json(r.analytic)},
          {"relative_error", vec_to_json(r.relative_error)}};
}

json comparison_to_json(const ComparisonReport& r) {
  json seeds = json::array();
  for (const auto& s : r.seeds) {
    seeds.push_back({{"seed", s.seed},
                     {"epsilon", s.epsilon},
                     {"lambda_a", vec_to_json(s.lambda_a)},
                     {"lambda_b", vec_to_json(s.lambda_b)},
                     {"lambda_control", vec_to_json(s.lambda_control)},
                     {"rel_diff_pair", vec_to_json(s.rel_diff_pair)},
                     {"rel_diff_control", vec_to_json(s.rel_diff_control)},
                     {"max_pair", s.max_pair},
                     {"max_control", s.max_control}});
  }
  return {{"isospectrality", isospectrality_to_json(r.isospectrality)},
          {"seeds", seeds},
          {"median_pair", r.median_pair},
          {"median_control", r.median_control},
          {"contrast", r.contrast}};
}

json nonisometry_to_json(const NonisometryReport& r) {
  json doc;
  doc["verdict"] = r.verdict;
  doc["manifold"] = r.manifold;
  if (r.verdict == "open") {
    doc["note"] = r.note;
    return doc;
  }
  doc["isospectrality"] = isospectrality_to_json(r.isospectrality);
  doc["non_equivalence"] = {{"invariant_separation", r.invariant_separation}, {"separated", r.separated}};
  doc["witness"] = r.witness ? witness_to_json(*r.witness) : json(nullptr);
  doc["genericity"] = {{"a", genericity_to_json(r.generic_a)}, {"b", genericity_to_json(r.generic_b)}};
  doc["failing_checks"] = r.failing_checks;
  return doc;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failed: " + path.string());
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  out.close();
  if (!out) throw IoError("write failed: " + path.string());
}

json read_json(const std::filesystem::path& path) {
  const std::string text = read_text(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const json& doc) { write_text(path, doc.dump(2) + "\n"); }

std::string eigenvalue_csv(const SpectrumEstimate& s, std::uint64_t seed) {
  std::ostringstream os;
  os << "index,value,normalization,N,epsilon,seed\n";
  for (Eigen::Index i = 0; i < s.eigenvalues.size(); ++i)
    os << i << ',' << fmt17(s.eigenvalues(i)) << ',' << fmt17(s.normalization) << ',' << s.n_points << ','
       << fmt17(s.epsilon) << ',' << seed << '\n';
  return os.str();
}

std::string cloud_to_text(const PointCloud& cloud) {
  const Manifold& mf = cloud.manifold;
  std::ostringstream os;
  os << "# isoquot-cloud 1\n";
  os << "# manifold " << (mf.kind == ManifoldKind::sphere ? "sphere" : "stiefel") << " m " << mf.m << " r " << mf.r
     << "\n";
  os << "# seed " << cloud.seed << "\n";
  os << "# N " << cloud.size() << " rows " << mf.s() << " cols " << mf.r << "\n";
  for (const CMat& p : cloud.points) {
    bool first = true;
    for (Eigen::Index c = 0; c < p.cols(); ++c)
      for (Eigen::Index r = 0; r < p.rows(); ++r) {
        os << (first ? "" : " ") << fmt17(p(r, c).real()) << ' ' << fmt17(p(r, c).imag());
        first = false;
      }
    os << '\n';
  }
  return os.str();
}

PointCloud cloud_from_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  PointCloud cloud;
  int n = -1;
  int rows = 0;
  int cols = 0;
  bool tagged = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    if (line[0] == '#') {
      std::string hash, key;
      ls >> hash >> key;
      if (key == "isoquot-cloud") {
        tagged = true;
      } else if (key == "manifold") {
        std::string kind, mk, rk;
        int m = 0, r = 0;
        ls >> kind >> mk >> m >> rk >> r;
        cloud.manifold = kind == "sphere" ? Manifold::sphere(m) : Manifold::stiefel(m, r);
      } else if (key == "seed") {
        ls >> cloud.seed;
      } else if (key == "N") {
        std::string rk, ck;
        ls >> n >> rk >> rows >> ck >> cols;
      }
      continue;
    }
    if (!tagged || n < 0) throw std::invalid_argument("cloud: missing header");
    CMat p(rows, cols);
    for (int c = 0; c < cols; ++c)
      for (int r = 0; r < rows; ++r) {
        double re = 0.0, im = 0.0;
        if (!(ls >> re >> im)) throw std::invalid_argument("cloud: short row");
        p(r, c) = cplx(re, im);
      }
    cloud.points.push_back(std::move(p));
  }
  if (static_cast<int>(cloud.points.size()) != n) throw std::invalid_argument("cloud: row count mismatch");
  return cloud;
}

std::string staircase_svg(const std::string& title, const std::vector<StaircaseSeries>& series) {
  constexpr double w = 640, h = 420, left = 60, right = 20, top = 40, bottom = 50;
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
  double xmax = 0.0;
  std::size_t nmax = 0;
  for (const auto& s : series) {
    if (s.values.size()) xmax = std::max(xmax, s.values.maxCoeff());
    nmax = std::max(nmax, static_cast<std::size_t>(s.values.size()));
  }
  xmax = xmax > 0 ? 1.05 * xmax : 1.0;
  const double ymax = std::max<double>(1.0, static_cast<double>(nmax));
  auto X = [&](double x) { return left + (w - left - right) * x / xmax; };
  auto Y = [&](double y) { return h - bottom - (h - top - bottom) * y / ymax; };
  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\" viewBox=\"0 0 " << w
     << ' ' << h << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << w / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">"
     << title << "</text>\n";
  os << "<line x1=\"" << left << "\" y1=\"" << Y(0) << "\" x2=\"" << w - right << "\" y2=\"" << Y(0)
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << left << "\" y1=\"" << Y(0) << "\" x2=\"" << left << "\" y2=\"" << top
     << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double xv = xmax * t / 4.0;
    os << "<text x=\"" << X(xv) << "\" y=\"" << h - bottom + 18 << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
       << "font-size=\"11\">" << std::setprecision(3) << xv << std::setprecision(2) << "</text>\n";
  }
  os << "<text x=\"" << w / 2 << "\" y=\"" << h - 10
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">lambda</text>\n";
  os << "<text x=\"16\" y=\"" << h / 2 << "\" transform=\"rotate(-90 16 " << h / 2
     << ")\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">N(lambda)</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    RVec v = s.values;
    std::sort(v.data(), v.data() + v.size());
    os << "<polyline fill=\"none\" stroke=\"" << colors[k % 5] << "\" stroke-width=\"1.5\" points=\"";
    double prev_y = 0.0;
    os << X(0) << ',' << Y(0);
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      const double x = std::max(0.0, v(i));
      os << ' ' << X(x) << ',' << Y(prev_y) << ' ' << X(x) << ',' << Y(static_cast<double>(i + 1));
      prev_y = static_cast<double>(i + 1);
    }
    os << ' ' << X(xmax) << ',' << Y(prev_y) << "\"/>\n";
    os << "<text x=\"" << left + 10 << "\" y=\"" << top + 16 * (k + 1) << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\""
       << colors[k % 5] << "\">" << s.label << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string config_hash(const json& config) {
  const std::string s = config.dump();
  std::uint64_t hsh = 14695981039346656037ULL;
  for (const unsigned char c : s) {
    hsh ^= c;
    hsh *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hsh));
  return buf;
}

}  // namespace isoquot
