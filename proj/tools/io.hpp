#pragma once

// JSON conversion and schema checks for the command-line front end.

#include "uot/cone.hpp"
#include "uot/entropy.hpp"
#include "uot/manifold.hpp"
#include "uot/polar.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace uot::io {

using json = nlohmann::ordered_json;

inline constexpr const char* kSchemaVersion = "uot-report/1";

// JSON has no infinity literal: +-inf travel as the strings "inf" / "-inf".
json number(double v);
json numbers(const std::vector<double>& v);
json numbers(const Eigen::VectorXd& v);
double to_number(const json& j);

json to_json(const Space& s);
Space space_from_json(const json& j);

json to_json(const DiscreteMeasure& m);
DiscreteMeasure measure_from_json(const json& j);

json to_json(const Grid1D& g);
Grid1D grid_from_json(const json& j);

json to_json(const GridDensity& d);
GridDensity grid_density_from_json(const json& j);

ConePoint cone_point_from_json(const json& j);

// {"grid": {...}, "phi": [...], "lam": [...]}; `fallback` supplies the grid
// when the file has none.
GeneralizedAutomorphism map_from_json(const json& j, const Grid1D* fallback = nullptr);
json to_json(const TransportCouple& tc);

struct SchemaViolation {
    std::string pointer; // JSON pointer into the document
    std::string message;
};

enum class DocumentKind { Measure, GridField, Map, ConePoint, Report, Unknown };

DocumentKind detect_kind(const json& j);
const char* to_string(DocumentKind kind);

std::vector<SchemaViolation> validate_measure(const json& j);
std::vector<SchemaViolation> validate_grid_field(const json& j);
std::vector<SchemaViolation> validate_map(const json& j, bool grid_required = true);
std::vector<SchemaViolation> validate_cone_point(const json& j);
std::vector<SchemaViolation> validate_report(const json& j);
std::vector<SchemaViolation> validate_document(const json& j);

// Reads a file, or parses the argument directly when it starts with '{'.
// Throws Io on unreadable files and Schema on malformed JSON.
json load_json(const std::string& path_or_inline);
void write_json(const std::string& path, const json& j);
void write_text(const std::string& path, const std::string& text);

// Throws a Schema error listing the violations (if any).
void require_valid(const std::vector<SchemaViolation>& v, const std::string& what);

} // namespace uot::io
