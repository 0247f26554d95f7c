#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "isoquot/family.hpp"
#include "isoquot/nonisometry.hpp"
#include "isoquot/spectral.hpp"

namespace isoquot {

using json = nlohmann::ordered_json;

inline constexpr const char* kGeneratorVersion = "isoquot-0.1.0";

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct JMapProvenance {
  std::uint64_t seed = 0;
  double t = 0.0;
  std::string generator_version = kGeneratorVersion;
};

// {"m", "J1", "J2", "provenance"}; matrix entries are [re, im] pairs, row-major.
json jmap_to_json(const JMap& j, const JMapProvenance& prov);
JMap jmap_from_json(const json& doc, JMapProvenance* prov = nullptr);

json family_to_json(const Family& fam);
Family family_from_json(const json& doc);

json validation_to_json(const FamilyValidation& v);
json isospectrality_to_json(const IsospectralityReport& r);
json genericity_to_json(const GenericityReport& g);
json witness_to_json(const EquivalenceWitness& w);
json admissibility_to_json(const AdmissibilityReport& r);
json intertwining_to_json(const IntertwiningReport& r);
json orbifold_to_json(const OrbifoldReport& r);
json spectrum_to_json(const SpectrumEstimate& s);
json calibration_to_json(const CalibrationReport& r);
json comparison_to_json(const ComparisonReport& r);
json nonisometry_to_json(const NonisometryReport& r);

// Whole-file text I/O; failures throw IoError.
std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);
json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const json& doc);

// index,value,normalization,N,epsilon,seed
std::string eigenvalue_csv(const SpectrumEstimate& s, std::uint64_t seed);

// Header lines start with '#': format tag, manifold, seed, N, rows, cols.
// Then one point per line: re(0,0) im(0,0) re(1,0) ... column-major.
std::string cloud_to_text(const PointCloud& cloud);
PointCloud cloud_from_text(const std::string& text);

struct StaircaseSeries {
  std::string label;
  RVec values;
};

// Eigenvalue counting functions N(lambda) as step plots.
std::string staircase_svg(const std::string& title, const std::vector<StaircaseSeries>& series);

// 64-bit FNV-1a of the compact serialization, as 16 hex digits.
std::string config_hash(const json& config);

}  // namespace isoquot
