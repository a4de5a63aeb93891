#include "io.hpp"

#include "uot/errors.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace uot::io {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool is_number(const json& j)
{
    if (j.is_number()) return true;
    return j.is_string() && (j == "inf" || j == "-inf");
}

std::string at(const std::string& base, std::size_t k) { return base + "/" + std::to_string(k); }

void check_space(const json& j, const std::string& ptr, std::vector<SchemaViolation>& out)
{
    if (!j.is_object()) {
        out.push_back({ptr, "space must be an object"});
        return;
    }
    if (!j.contains("kind") || !j["kind"].is_string()) {
        out.push_back({ptr + "/kind", "missing space kind"});
        return;
    }
    const std::string kind = j["kind"];
    if (kind == "circle") return;
    if (kind != "sphere" && kind != "euclidean" && kind != "hyperbolic") {
        out.push_back({ptr + "/kind", "unknown space kind '" + kind + "'"});
        return;
    }
    if (!j.contains("dim") || !j["dim"].is_number_integer() || j["dim"].get<int>() < 1)
        out.push_back({ptr + "/dim", "dim must be an integer >= 1"});
    if (kind == "sphere" && j.contains("radius") && (!j["radius"].is_number() || !(j["radius"].get<double>() > 0.0)))
        out.push_back({ptr + "/radius", "radius must be positive"});
}

} // namespace

json number(double v)
{
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

json numbers(const std::vector<double>& v)
{
    json a = json::array();
    for (double x : v) a.push_back(number(x));
    return a;
}

json numbers(const Eigen::VectorXd& v)
{
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number(v[i]));
    return a;
}

double to_number(const json& j)
{
    if (j.is_number()) return j.get<double>();
    if (j == "inf") return kInf;
    if (j == "-inf") return -kInf;
    fail(ErrorKind::Schema, "expected a number, got " + j.dump());
}

json to_json(const Space& s)
{
    json j;
    j["kind"] = to_string(s.kind);
    if (s.kind == SpaceKind::Circle) return j;
    j["dim"] = s.dim;
    if (s.kind == SpaceKind::Sphere) j["radius"] = s.radius;
    return j;
}

Space space_from_json(const json& j)
{
    std::vector<SchemaViolation> v;
    check_space(j, "", v);
    require_valid(v, "space");
    const std::string kind = j["kind"];
    if (kind == "circle") return Space::circle();
    const int dim = j["dim"];
    if (kind == "sphere") return Space::sphere(dim, j.value("radius", 1.0));
    if (kind == "hyperbolic") return Space::hyperbolic(dim);
    return Space::euclidean(dim);
}

json to_json(const DiscreteMeasure& m)
{
    json j;
    j["space"] = to_json(m.space);
    json pts = json::array();
    for (const Point& p : m.points) pts.push_back(numbers(Eigen::VectorXd(p)));
    j["points"] = pts;
    j["masses"] = numbers(m.masses);
    return j;
}

DiscreteMeasure measure_from_json(const json& j)
{
    require_valid(validate_measure(j), "measure");
    const Space space = space_from_json(j["space"]);
    std::vector<Point> pts;
    for (const json& p : j["points"]) {
        Point x(static_cast<Eigen::Index>(p.size()));
        for (std::size_t k = 0; k < p.size(); ++k) x[static_cast<Eigen::Index>(k)] = p[k].get<double>();
        pts.push_back(std::move(x));
    }
    std::vector<double> masses;
    for (const json& m : j["masses"]) masses.push_back(m.get<double>());
    return DiscreteMeasure(space, std::move(pts), std::move(masses));
}

json to_json(const Grid1D& g)
{
    json j;
    if (g.periodic()) {
        j["kind"] = "circle";
    } else {
        j["kind"] = "interval";
        j["a"] = g.origin;
        j["b"] = g.node(g.n - 1);
    }
    j["n"] = g.n;
    return j;
}

Grid1D grid_from_json(const json& j)
{
    if (!j.is_object() || !j.contains("kind") || !j.contains("n") || !j["n"].is_number_integer())
        fail(ErrorKind::Schema, "grid needs kind and integer n");
    const long long n = j["n"];
    if (n < 3) fail(ErrorKind::Schema, "grid needs n >= 3");
    if (j["kind"] == "circle") return Grid1D::circle(static_cast<std::size_t>(n));
    if (j["kind"] == "interval") return Grid1D::interval(j.at("a").get<double>(), j.at("b").get<double>(), static_cast<std::size_t>(n));
    fail(ErrorKind::Schema, "unknown grid kind " + j["kind"].dump());
}

json to_json(const GridDensity& d)
{
    json j;
    j["grid"] = to_json(d.grid);
    j["values"] = numbers(d.values);
    return j;
}

GridDensity grid_density_from_json(const json& j)
{
    require_valid(validate_grid_field(j), "grid field");
    std::vector<double> v;
    for (const json& x : j["values"]) v.push_back(x.get<double>());
    return GridDensity(grid_from_json(j["grid"]), std::move(v));
}

ConePoint cone_point_from_json(const json& j)
{
    require_valid(validate_cone_point(j), "cone point");
    ConePoint c;
    c.base = Point(static_cast<Eigen::Index>(j["base"].size()));
    for (std::size_t k = 0; k < j["base"].size(); ++k) c.base[static_cast<Eigen::Index>(k)] = j["base"][k].get<double>();
    c.r = j["r"].get<double>();
    return c;
}

GeneralizedAutomorphism map_from_json(const json& j, const Grid1D* fallback)
{
    require_valid(validate_map(j, fallback == nullptr), "map");
    const Grid1D grid = j.contains("grid") ? grid_from_json(j["grid"]) : *fallback;
    GeneralizedAutomorphism g{grid, {}, {}};
    for (const json& x : j["phi"]) g.phi.push_back(grid.periodic() ? wrap_angle(x.get<double>()) : x.get<double>());
    for (const json& x : j["lam"]) g.lam.push_back(x.get<double>());
    if (g.phi.size() != grid.n) fail(ErrorKind::Schema, "map length " + std::to_string(g.phi.size()) + " does not match grid n = " + std::to_string(grid.n));
    return g;
}

json to_json(const TransportCouple& tc)
{
    json j;
    j["grid"] = to_json(tc.grid);
    j["phi"] = numbers(tc.phi);
    j["lam"] = numbers(tc.lam);
    return j;
}

DocumentKind detect_kind(const json& j)
{
    if (!j.is_object()) return DocumentKind::Unknown;
    if (j.contains("schema")) return DocumentKind::Report;
    if (j.contains("masses") || j.contains("points")) return DocumentKind::Measure;
    if (j.contains("phi") || j.contains("lam")) return DocumentKind::Map;
    if (j.contains("values")) return DocumentKind::GridField;
    if (j.contains("base") && j.contains("r")) return DocumentKind::ConePoint;
    return DocumentKind::Unknown;
}

const char* to_string(DocumentKind kind)
{
    switch (kind) {
    case DocumentKind::Measure: return "measure";
    case DocumentKind::GridField: return "grid-field";
    case DocumentKind::Map: return "map";
    case DocumentKind::ConePoint: return "cone-point";
    case DocumentKind::Report: return "report";
    case DocumentKind::Unknown: break;
    }
    return "unknown";
}

std::vector<SchemaViolation> validate_measure(const json& j)
{
    std::vector<SchemaViolation> out;
    if (!j.is_object()) return {{"", "measure must be an object"}};
    if (!j.contains("space")) out.push_back({"/space", "missing"});
    else check_space(j["space"], "/space", out);
    if (!j.contains("points") || !j["points"].is_array()) out.push_back({"/points", "missing or not an array"});
    if (!j.contains("masses") || !j["masses"].is_array()) out.push_back({"/masses", "missing or not an array"});
    if (!out.empty()) return out;

    const json& sp = j["space"];
    const std::string kind = sp["kind"];
    const int dim = kind == "circle" ? 1 : sp["dim"].get<int>();
    const std::size_t ambient = kind == "sphere" || kind == "hyperbolic" ? static_cast<std::size_t>(dim + 1) : static_cast<std::size_t>(dim);
    const double R = kind == "sphere" ? sp.value("radius", 1.0) : 1.0;

    const json& pts = j["points"];
    for (std::size_t k = 0; k < pts.size(); ++k) {
        const json& p = pts[k];
        if (!p.is_array() || p.size() != ambient) {
            out.push_back({at("/points", k), "expected " + std::to_string(ambient) + " coordinates"});
            continue;
        }
        bool finite = true;
        Eigen::VectorXd x(static_cast<Eigen::Index>(ambient));
        for (std::size_t c = 0; c < ambient; ++c) {
            if (!p[c].is_number() || !std::isfinite(p[c].get<double>())) {
                out.push_back({at(at("/points", k), c), "coordinate must be a finite number"});
                finite = false;
                break;
            }
            x[static_cast<Eigen::Index>(c)] = p[c].get<double>();
        }
        if (!finite) continue;
        if (kind == "sphere" && std::abs(x.norm() - R) > 1e-9 * R)
            out.push_back({at("/points", k), "point off the sphere: |p| - R = " + std::to_string(x.norm() - R)});
        if (kind == "hyperbolic") {
            const double q = -x[0] * x[0] + x.tail(x.size() - 1).squaredNorm();
            if (std::abs(q + 1.0) > 1e-9 || x[0] <= 0.0) out.push_back({at("/points", k), "point not on the upper hyperboloid"});
        }
    }
    const json& ms = j["masses"];
    if (ms.size() != pts.size())
        out.push_back({"/masses", "length " + std::to_string(ms.size()) + " does not match points length " + std::to_string(pts.size())});
    for (std::size_t k = 0; k < ms.size(); ++k) {
        if (!ms[k].is_number() || !std::isfinite(ms[k].get<double>())) out.push_back({at("/masses", k), "mass must be a finite number"});
        else if (ms[k].get<double>() < 0.0) out.push_back({at("/masses", k), "negative mass"});
    }
    return out;
}

namespace {

void check_grid(const json& j, const std::string& ptr, std::vector<SchemaViolation>& out)
{
    if (!j.is_object()) {
        out.push_back({ptr, "grid must be an object"});
        return;
    }
    if (!j.contains("n") || !j["n"].is_number_integer() || j["n"].get<long long>() < 3) out.push_back({ptr + "/n", "n must be an integer >= 3"});
    if (!j.contains("kind") || (j["kind"] != "circle" && j["kind"] != "interval")) {
        out.push_back({ptr + "/kind", "kind must be 'circle' or 'interval'"});
        return;
    }
    if (j["kind"] == "interval") {
        if (!j.contains("a") || !j["a"].is_number()) out.push_back({ptr + "/a", "missing interval start"});
        if (!j.contains("b") || !j["b"].is_number()) out.push_back({ptr + "/b", "missing interval end"});
        if (out.empty() && !(j["b"].get<double>() > j["a"].get<double>())) out.push_back({ptr + "/b", "interval end must exceed start"});
    }
}

void check_values(const json& j, const char* key, std::size_t n, bool positive, std::vector<SchemaViolation>& out)
{
    const std::string ptr = std::string("/") + key;
    if (!j.contains(key) || !j[key].is_array()) {
        out.push_back({ptr, "missing or not an array"});
        return;
    }
    const json& v = j[key];
    if (n > 0 && v.size() != n) out.push_back({ptr, "length " + std::to_string(v.size()) + " does not match grid n = " + std::to_string(n)});
    for (std::size_t k = 0; k < v.size(); ++k) {
        if (!v[k].is_number() || !std::isfinite(v[k].get<double>())) out.push_back({at(ptr, k), "must be a finite number"});
        else if (positive && !(v[k].get<double>() > 0.0)) out.push_back({at(ptr, k), "must be positive"});
    }
}

std::size_t grid_n(const json& j)
{
    if (j.contains("grid") && j["grid"].is_object() && j["grid"].contains("n") && j["grid"]["n"].is_number_integer())
        return j["grid"]["n"].get<std::size_t>();
    return 0;
}

} // namespace

std::vector<SchemaViolation> validate_grid_field(const json& j)
{
    std::vector<SchemaViolation> out;
    if (!j.is_object()) return {{"", "grid field must be an object"}};
    if (!j.contains("grid")) out.push_back({"/grid", "missing"});
    else check_grid(j["grid"], "/grid", out);
    check_values(j, "values", grid_n(j), false, out);
    return out;
}

std::vector<SchemaViolation> validate_map(const json& j, bool grid_required)
{
    std::vector<SchemaViolation> out;
    if (!j.is_object()) return {{"", "map must be an object"}};
    if (j.contains("grid")) check_grid(j["grid"], "/grid", out);
    else if (grid_required) out.push_back({"/grid", "missing (or pass --grid)"});
    const std::size_t n = grid_n(j);
    check_values(j, "phi", n, false, out);
    check_values(j, "lam", n, true, out);
    if (n == 0 && j.contains("phi") && j.contains("lam") && j["phi"].is_array() && j["lam"].is_array() &&
        j["phi"].size() != j["lam"].size())
        out.push_back({"/lam", "length does not match phi"});
    return out;
}

std::vector<SchemaViolation> validate_cone_point(const json& j)
{
    std::vector<SchemaViolation> out;
    if (!j.is_object()) return {{"", "cone point must be an object"}};
    if (!j.contains("base") || !j["base"].is_array()) out.push_back({"/base", "missing or not an array"});
    else
        for (std::size_t k = 0; k < j["base"].size(); ++k)
            if (!j["base"][k].is_number()) out.push_back({at("/base", k), "must be a number"});
    if (!j.contains("r") || !j["r"].is_number()) out.push_back({"/r", "missing or not a number"});
    else if (j["r"].get<double>() < 0.0) out.push_back({"/r", "radius must be >= 0"});
    return out;
}

std::vector<SchemaViolation> validate_report(const json& j)
{
    std::vector<SchemaViolation> out;
    if (!j.is_object()) return {{"", "report must be an object"}};
    if (!j.contains("schema") || j["schema"] != kSchemaVersion) out.push_back({"/schema", std::string("expected '") + kSchemaVersion + "'"});
    if (!j.contains("command") || !j["command"].is_string()) out.push_back({"/command", "missing"});
    if (!j.contains("config") || !j["config"].is_object()) out.push_back({"/config", "missing"});
    for (const char* key : {"value", "dual_value", "gap"})
        if (j.contains(key) && !is_number(j[key])) out.push_back({std::string("/") + key, "must be a number or 'inf'"});
    return out;
}

std::vector<SchemaViolation> validate_document(const json& j)
{
    switch (detect_kind(j)) {
    case DocumentKind::Measure: return validate_measure(j);
    case DocumentKind::GridField: return validate_grid_field(j);
    case DocumentKind::Map: return validate_map(j, false);
    case DocumentKind::ConePoint: return validate_cone_point(j);
    case DocumentKind::Report: return validate_report(j);
    case DocumentKind::Unknown: break;
    }
    return {{"", "unrecognized document (expected a measure, grid field, map, cone point or report)"}};
}

json load_json(const std::string& path_or_inline)
{
    std::string text;
    if (!path_or_inline.empty() && path_or_inline.front() == '{') {
        text = path_or_inline;
    } else {
        std::ifstream in(path_or_inline);
        if (!in) fail(ErrorKind::Io, "cannot read '" + path_or_inline + "'");
        std::ostringstream ss;
        ss << in.rdbuf();
        text = ss.str();
    }
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        fail(ErrorKind::Schema, "malformed JSON in '" + path_or_inline + "': " + e.what());
    }
}

void write_text(const std::string& path, const std::string& text)
{
    std::ofstream out(path);
    if (!out) fail(ErrorKind::Io, "cannot write '" + path + "'");
    out << text;
    if (!out) fail(ErrorKind::Io, "write failed for '" + path + "'");
}

void write_json(const std::string& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

void require_valid(const std::vector<SchemaViolation>& v, const std::string& what)
{
    if (v.empty()) return;
    std::string msg = what + ": ";
    for (std::size_t k = 0; k < v.size(); ++k) {
        if (k) msg += "; ";
        msg += (v[k].pointer.empty() ? "/" : v[k].pointer) + ": " + v[k].message;
    }
    fail(ErrorKind::Schema, msg);
}

} // namespace uot::io
