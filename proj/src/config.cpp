#include "invkit/config.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include <json.hpp>

namespace invkit {

namespace {

using nlohmann::json;

std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where)
{
    for (const auto& [key, value] : j.items()) {
        if (allowed.count(key) == 0) {
            std::string list;
            for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
            throw ConfigError(where + ": unknown key '" + key + "' (allowed: " + list + ")");
        }
    }
}

Eigen::VectorXd to_vector(const json& j, const std::string& where)
{
    if (!j.is_array()) throw ConfigError(where + ": expected an array of numbers");
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) throw ConfigError(where + ": entry " + std::to_string(i) + " is not a number");
        v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    }
    if (!v.allFinite()) throw ConfigError(where + ": entries must be finite");
    return v;
}

Eigen::MatrixXd to_matrix(const json& j, const std::string& where)
{
    if (!j.is_array() || j.empty()) throw ConfigError(where + ": expected a non-empty array of rows");
    const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
    Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < j.size(); ++i) {
        const Eigen::VectorXd row = to_vector(j[i], where + " row " + std::to_string(i + 1));
        if (static_cast<std::size_t>(row.size()) != cols) throw ConfigError(where + ": ragged matrix");
        m.row(static_cast<Eigen::Index>(i)) = row.transpose();
    }
    return m;
}

PointSpec to_point(const json& j, const std::string& where)
{
    PointSpec p;
    if (j.is_string()) {
        if (j.get<std::string>() != "equilibrium") throw ConfigError(where + ": expected \"equilibrium\" or a vector");
        p.equilibrium = true;
    } else {
        p.value = to_vector(j, where);
    }
    return p;
}

/// Either {lo, hi} or {center, radius}; a scalar radius is broadcast later.
RegionSpec to_region(const json& j, const std::string& where, const std::set<std::string>& extra = {})
{
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    std::set<std::string> allowed{"lo", "hi", "center", "radius"};
    allowed.insert(extra.begin(), extra.end());
    reject_unknown(j, allowed, where);
    RegionSpec r;
    if (j.contains("lo") || j.contains("hi")) {
        if (!j.contains("lo") || !j.contains("hi") || j.contains("center") || j.contains("radius")) {
            throw ConfigError(where + ": give either lo and hi, or center and radius");
        }
        r.lo = to_vector(j["lo"], where + ".lo");
        r.hi = to_vector(j["hi"], where + ".hi");
        if (r.lo.size() != r.hi.size()) throw ConfigError(where + ": lo and hi differ in length");
        if ((r.lo.array() > r.hi.array()).any()) throw ConfigError(where + ": lo must not exceed hi");
        return r;
    }
    if (!j.contains("radius")) throw ConfigError(where + ": missing radius (or lo and hi)");
    r.center = to_point(j.contains("center") ? j["center"] : json("equilibrium"), where + ".center");
    r.radius = j["radius"].is_number() ? Eigen::VectorXd::Constant(1, j["radius"].get<double>())
                                       : to_vector(j["radius"], where + ".radius");
    if ((r.radius.array() < 0.0).any()) throw ConfigError(where + ": radius must be nonnegative");
    return r;
}

template <typename T>
T get_or(const json& j, const char* key, T fallback, const std::string& where)
{
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(where + "." + key + ": wrong type");
    }
}

std::uint64_t fnv1a(std::uint64_t h, const std::string& data)
{
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

json vec_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json mat_json(const Eigen::MatrixXd& m)
{
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vec_json(m.row(i).transpose()));
    return rows;
}

json box_json(const IntervalVector& b) { return {{"lo", vec_json(b.lower())}, {"hi", vec_json(b.upper())}}; }

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json header(const Pipeline& p)
{
    return {{"config", p.cfg.path.filename().string()},
            {"config_hash", config_hash(p.cfg)},
            {"seed", p.cfg.seed},
            {"rounding", p.cfg.rounding == RoundingMode::sound ? "sound" : "fast"},
            {"inclusion", p.cfg.inclusion == InclusionMode::jacobian ? "jacobian" : "natural"}};
}

json set_json(const Pipeline& p, const IntervalVector& ybox)
{
    json j{{"type", p.is_box() ? "box" : "paralleletope"}};
    if (p.is_box()) {
        j["box"] = box_json(ybox);
    } else {
        j["T"] = mat_json(p.set.T);
        j["Tinv"] = mat_json(p.set.Tinv);
        j["ybox"] = box_json(ybox);
        j["x_hull"] = box_json(matvec(p.set.Tinv, ybox));
    }
    return j;
}

IntervalVector resolve_region(const RegionSpec& r, const std::optional<Eigen::VectorXd>& x_star, std::size_t n,
                              const std::string& where)
{
    if (!r.center) {
        if (static_cast<std::size_t>(r.lo.size()) != n) throw ConfigError(where + ": expected " + std::to_string(n) + " entries");
        return {r.lo, r.hi};
    }
    const Eigen::VectorXd c = r.center->equilibrium ? *x_star : r.center->value;
    if (static_cast<std::size_t>(c.size()) != n) throw ConfigError(where + ".center: expected " + std::to_string(n) + " entries");
    Eigen::VectorXd rad = r.radius.size() == 1 ? Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), r.radius(0)) : r.radius;
    if (static_cast<std::size_t>(rad.size()) != n) throw ConfigError(where + ".radius: expected " + std::to_string(n) + " entries");
    return IntervalVector::around(c, rad);
}

bool needs_equilibrium(const RegionSpec& r) { return r.center && r.center->equilibrium; }

}  // namespace

RunConfig load_run_config(const std::filesystem::path& path)
{
    const std::string text = read_file(path);
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    if (!j.is_object()) throw ConfigError(path.string() + ": expected a JSON object");
    reject_unknown(j,
                   {"system", "network", "disturbance", "set", "relaxation_region", "equilibrium", "family", "oracle",
                    "inclusion", "rounding", "seed", "projections"},
                   "config");
    RunConfig cfg;
    cfg.path = path;
    cfg.canonical = j.dump();
    const std::filesystem::path base = path.parent_path();
    const auto resolve = [&](const json& p, const char* key) {
        if (!p.is_string()) throw ConfigError(std::string("config.") + key + ": expected a file path");
        const std::filesystem::path rel = p.get<std::string>();
        const std::filesystem::path full = rel.is_absolute() ? rel : base / rel;
        if (!std::filesystem::exists(full)) throw ConfigError(std::string("config.") + key + ": file not found: " + full.string());
        return full;
    };
    if (!j.contains("system")) throw ConfigError("config: missing 'system' (path to the system JSON)");
    cfg.system_path = resolve(j["system"], "system");
    if (j.contains("network") && !j["network"].is_null()) cfg.network_path = resolve(j["network"], "network");

    if (j.contains("disturbance")) {
        const RegionSpec d = to_region(j["disturbance"], "config.disturbance");
        if (d.center) {
            if (d.center->equilibrium) throw ConfigError("config.disturbance: center must be a vector");
            cfg.w_lo = d.center->value - d.radius;
            cfg.w_hi = d.center->value + d.radius;
        } else {
            cfg.w_lo = d.lo;
            cfg.w_hi = d.hi;
        }
    }

    if (!j.contains("set")) throw ConfigError("config: missing 'set'");
    const json& s = j["set"];
    const std::string type = get_or<std::string>(s, "type", "box", "config.set");
    if (type == "box") {
        cfg.set.region = to_region(s, "config.set", {"type"});
    } else if (type == "paralleletope") {
        cfg.set.paralleletope = true;
        cfg.set.region = to_region(s, "config.set", {"type", "transform", "scaling", "mode_order"});
        if (s.contains("mode_order")) {
            for (const json& k : s["mode_order"]) {
                if (!k.is_number_unsigned() || k.get<std::size_t>() == 0) {
                    throw ConfigError("config.set.mode_order: expected 1-based mode indices");
                }
                cfg.set.mode_order.push_back(k.get<std::size_t>() - 1);
            }
        }
        try {
            cfg.set.scaling = parse_transform_scaling(get_or<std::string>(s, "scaling", "rows", "config.set"));
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("config.set.scaling: ") + e.what());
        }
        if (!cfg.set.region.center) throw ConfigError("config.set: a paralleletope needs center and radius");
        const json t = s.contains("transform") ? s["transform"] : json("auto");
        if (t.is_string()) {
            if (t.get<std::string>() != "auto") throw ConfigError("config.set.transform: expected \"auto\" or a matrix");
            cfg.set.auto_transform = true;
        } else {
            cfg.set.T = to_matrix(t, "config.set.transform");
        }
    } else {
        throw ConfigError("config.set.type: expected box or paralleletope, got '" + type + "'");
    }

    if (j.contains("relaxation_region")) cfg.relaxation_region = to_region(j["relaxation_region"], "config.relaxation_region");

    if (j.contains("equilibrium")) {
        const json& e = j["equilibrium"];
        reject_unknown(e, {"x0", "horizon", "tol", "h"}, "config.equilibrium");
        if (e.contains("x0")) cfg.eq_x0 = to_vector(e["x0"], "config.equilibrium.x0");
        cfg.eq_horizon = get_or(e, "horizon", cfg.eq_horizon, "config.equilibrium");
        cfg.eq_tol = get_or(e, "tol", cfg.eq_tol, "config.equilibrium");
        cfg.eq_h = get_or(e, "h", cfg.eq_h, "config.equilibrium");
    }

    if (j.contains("family")) {
        const json& f = j["family"];
        reject_unknown(f, {"h_forward", "steps", "conv_tol", "h_backward", "backward_steps", "backward", "refine"},
                       "config.family");
        cfg.forward.h = get_or(f, "h_forward", cfg.forward.h, "config.family");
        cfg.forward.max_steps = get_or(f, "steps", cfg.forward.max_steps, "config.family");
        cfg.forward.conv_tol = get_or(f, "conv_tol", cfg.forward.conv_tol, "config.family");
        cfg.backward.h = get_or(f, "h_backward", cfg.backward.h, "config.family");
        cfg.backward.max_steps = get_or(f, "backward_steps", cfg.backward.max_steps, "config.family");
        cfg.run_backward = get_or(f, "backward", cfg.run_backward, "config.family");
        cfg.forward.refine = cfg.backward.refine = get_or(f, "refine", true, "config.family");
        if (!(cfg.forward.h > 0.0) || !(cfg.backward.h > 0.0)) throw ConfigError("config.family: step sizes must be positive");
    }

    if (j.contains("oracle")) {
        const json& o = j["oracle"];
        reject_unknown(o, {"facet_samples", "w_uniform", "max_witnesses", "trajectories", "horizon", "grid_per_dim"},
                       "config.oracle");
        cfg.boundary.n_samples = get_or(o, "facet_samples", cfg.boundary.n_samples, "config.oracle");
        cfg.boundary.w_uniform = get_or(o, "w_uniform", cfg.boundary.w_uniform, "config.oracle");
        cfg.boundary.max_witnesses = get_or(o, "max_witnesses", cfg.boundary.max_witnesses, "config.oracle");
        cfg.trajectories = get_or(o, "trajectories", cfg.trajectories, "config.oracle");
        cfg.sim_horizon = get_or(o, "horizon", cfg.sim_horizon, "config.oracle");
        if (o.contains("grid_per_dim")) cfg.grid_per_dim = get_or<std::size_t>(o, "grid_per_dim", 0, "config.oracle");
    }

    try {
        if (j.contains("inclusion")) cfg.inclusion = parse_inclusion_mode(j["inclusion"].get<std::string>());
        if (j.contains("rounding")) cfg.rounding = parse_rounding_mode(j["rounding"].get<std::string>());
    } catch (const json::exception&) {
        throw ConfigError("config: inclusion and rounding must be strings");
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    cfg.seed = get_or<std::uint64_t>(j, "seed", 0, "config");
    if (j.contains("projections")) {
        for (const json& pr : j["projections"]) {
            if (!pr.is_array() || pr.size() != 2 || !pr[0].is_number_unsigned() || !pr[1].is_number_unsigned() ||
                pr[0].get<std::size_t>() == 0 || pr[1].get<std::size_t>() == 0) {
                throw ConfigError("config.projections: expected pairs of 1-based coordinate indices");
            }
            cfg.projections.emplace_back(pr[0].get<std::size_t>() - 1, pr[1].get<std::size_t>() - 1);
        }
    }
    return cfg;
}

std::string config_hash(const RunConfig& cfg)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    h = fnv1a(h, cfg.canonical);
    h = fnv1a(h, read_file(cfg.system_path));
    if (cfg.network_path) h = fnv1a(h, read_file(*cfg.network_path));
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

Pipeline build_pipeline(const RunConfig& cfg)
{
    Pipeline p;
    p.cfg = cfg;
    try {
        p.dynamics = std::make_shared<Dynamics>(load_vector_field(cfg.system_path));
        if (cfg.network_path) p.network = std::make_shared<FeedforwardNetwork>(load_network(*cfg.network_path));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    const Dims& d = p.dynamics->dims();
    if (static_cast<std::size_t>(cfg.w_lo.size()) != d.q) {
        throw ConfigError("config.disturbance: system has q = " + std::to_string(d.q) + " but the disturbance box has " +
                          std::to_string(cfg.w_lo.size()) + " entries");
    }
    try {
        p.sys = std::make_shared<ClosedLoopSystem>(p.dynamics, p.network, IntervalVector(cfg.w_lo, cfg.w_hi));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }

    const bool want_eq = needs_equilibrium(cfg.set.region) ||
                         (cfg.relaxation_region && needs_equilibrium(*cfg.relaxation_region));
    if (want_eq) {
        Eigen::VectorXd x0 = cfg.eq_x0.size() == 0 ? Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d.n)) : cfg.eq_x0;
        if (static_cast<std::size_t>(x0.size()) != d.n) throw ConfigError("config.equilibrium.x0: wrong dimension");
        p.x_star = find_equilibrium(*p.sys, x0, cfg.eq_horizon, cfg.eq_tol, cfg.eq_h);
    }
    if (cfg.relaxation_region) p.region = resolve_region(*cfg.relaxation_region, p.x_star, d.n, "config.relaxation_region");

    const auto n = static_cast<Eigen::Index>(d.n);
    if (!cfg.set.paralleletope) {
        const IntervalVector box = resolve_region(cfg.set.region, p.x_star, d.n, "config.set");
        p.set = {Eigen::MatrixXd::Identity(n, n), Eigen::MatrixXd::Identity(n, n), box};
        return p;
    }
    const Eigen::VectorXd center = cfg.set.region.center->equilibrium ? *p.x_star : cfg.set.region.center->value;
    if (center.size() != n) throw ConfigError("config.set.center: expected " + std::to_string(d.n) + " entries");
    Eigen::MatrixXd T;
    Eigen::MatrixXd Tinv;
    if (cfg.set.auto_transform) {
        if (!p.region) throw ConfigError("config: transform \"auto\" needs a relaxation_region");
        p.choice = choose_transform(*p.sys, center, *p.region, cfg.set.scaling);
        if (!cfg.set.mode_order.empty()) {
            try {
                permute_modes(*p.choice, cfg.set.mode_order);
            } catch (const std::invalid_argument& e) {
                throw ConfigError(std::string("config.set.mode_order: ") + e.what());
            }
        }
        T = p.choice->T;
        Tinv = p.choice->Tinv;
    } else {
        T = cfg.set.T;
        if (T.rows() != n || T.cols() != n) throw ConfigError("config.set.transform: expected an n x n matrix");
        Tinv = T.fullPivLu().inverse();
    }
    const Eigen::VectorXd r = cfg.set.region.radius.size() == 1 ? Eigen::VectorXd::Constant(n, cfg.set.region.radius(0))
                                                               : cfg.set.region.radius;
    if (r.size() != n) throw ConfigError("config.set.radius: expected " + std::to_string(d.n) + " entries");
    try {
        p.set = make_paralleletope(T, Tinv, IntervalVector::around(T * center, r));
        p.ts = std::make_shared<TransformedSystem>(*p.sys, T, Tinv);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return p;
}

EmbeddingSystem Pipeline::embedding(const IntervalVector& ybox) const
{
    if (is_box()) return {std::make_shared<BoxInclusion>(*sys, ybox, cfg.inclusion)};
    return {std::make_shared<TransformedInclusion>(ts, ybox, cfg.inclusion)};
}

InvarianceCertificate Pipeline::certify() const { return check_invariance(embedding(set.ybox), set.ybox); }

NestedFamily Pipeline::family() const
{
    const EmbeddingState s0(set.ybox);
    NestedFamily fwd = integrate_forward(embedding(set.ybox), s0, cfg.forward);
    if (!cfg.run_backward || !region) {
        fwd.status = "forward=" + fwd.status + "; backward=skipped";
        return fwd;
    }
    const IntervalVector bound = *region;
    const Eigen::MatrixXd Tinv = set.Tinv;
    const bool box = is_box();
    const auto inside = [&](const IntervalVector& y) { return bound.contains(box ? y : matvec(Tinv, y)); };
    const NestedFamily bwd = integrate_backward(embedding(set.ybox), s0, inside, cfg.backward);
    NestedFamily out = merge(bwd, fwd);
    out.status = "forward=" + fwd.status + "; backward=" + bwd.status;
    out.diagnostic = fwd.diagnostic.empty() ? bwd.diagnostic : fwd.diagnostic;
    return out;
}

std::string certificate_json(const Pipeline& p, const InvarianceCertificate& cert)
{
    json j = header(p);
    j["verdict"] = std::string(to_string(cert.verdict));
    j["condition_holds"] = cert.condition_holds;
    j["sound_rounding"] = cert.sound_rounding;
    j["construction"] = cert.construction;
    if (!cert.note.empty()) j["note"] = cert.note;
    j["set"] = set_json(p, cert.box);
    j["rhs"] = vec_json(cert.rhs);
    j["localization"] = box_json(cert.localization);
    return j.dump(2) + "\n";
}

std::string family_json(const Pipeline& p, const NestedFamily& fam)
{
    json j = header(p);
    j["status"] = fam.status;
    if (!fam.diagnostic.empty()) j["diagnostic"] = fam.diagnostic;
    j["converged"] = fam.converged;
    j["nested"] = is_nested(fam);
    j["set_type"] = p.is_box() ? "box" : "paralleletope";
    if (!p.is_box()) {
        j["T"] = mat_json(p.set.T);
        j["Tinv"] = mat_json(p.set.Tinv);
    }
    json members = json::array();
    for (const FamilyMember& m : fam.members) {
        members.push_back({{"t", m.t},
                           {"lo", vec_json(m.state.lower)},
                           {"hi", vec_json(m.state.upper)},
                           {"verdict", std::string(to_string(m.certificate.verdict))},
                           {"construction", m.certificate.construction},
                           {"rhs", vec_json(m.certificate.rhs)}});
    }
    j["members"] = members;
    return j.dump(2) + "\n";
}

std::string transform_json(const Pipeline& p)
{
    json j = header(p);
    if (p.x_star) j["x_star"] = vec_json(*p.x_star);
    j["set_type"] = p.is_box() ? "box" : "paralleletope";
    j["T"] = mat_json(p.set.T);
    j["Tinv"] = mat_json(p.set.Tinv);
    if (p.choice) {
        const TransformChoice& c = *p.choice;
        json eig = json::array();
        for (const auto& l : c.eigenvalues) eig.push_back({{"re", l.real()}, {"im", l.imag()}});
        j["eigenvalues"] = eig;
        j["stable"] = c.stable;
        j["method"] = c.method;
        j["condition"] = c.condition;
        j["A_cl"] = mat_json(c.A_cl);
        if (!c.warning.empty()) j["warning"] = c.warning;
    } else {
        j["method"] = p.is_box() ? "identity" : "given";
        j["condition"] = condition_number(p.set.T);
    }
    return j.dump(2) + "\n";
}

std::string projections_csv(const Pipeline& p, const NestedFamily& fam)
{
    std::vector<std::pair<std::size_t, std::size_t>> planes = p.cfg.projections;
    const std::size_t n = p.set.dim();
    if (planes.empty()) {
        for (std::size_t i = 0; i + 1 < n; i += 2) planes.emplace_back(i, i + 1);
    }
    std::ostringstream os;
    os << "t,i,j,vertex,xi,xj\n";
    for (const FamilyMember& m : fam.members) {
        const Paralleletope member{p.set.T, p.set.Tinv, m.state.box()};
        for (const auto& [a, b] : planes) {
            if (a >= n || b >= n) throw ConfigError("config.projections: coordinate index out of range");
            const auto verts = projection_polygon(member, a, b);
            for (std::size_t k = 0; k < verts.size(); ++k) {
                os << format_double(m.t) << ',' << a + 1 << ',' << b + 1 << ',' << k << ',' << format_double(verts[k].x())
                   << ',' << format_double(verts[k].y()) << '\n';
            }
        }
    }
    return os.str();
}

std::string boundary_report_json(const Pipeline& p, const BoundaryReport& report)
{
    json j = header(p);
    j["set"] = set_json(p, p.set.ybox);
    j["n_samples"] = report.n_samples;
    j["w_per_point"] = report.w_per_point;
    j["worst_margin"] = finite_or_null(report.worst_margin());
    json facets = json::array();
    for (const FacetMargin& f : report.facets) {
        facets.push_back({{"axis", f.axis + 1},
                          {"side", f.side < 0 ? "lower" : "upper"},
                          {"samples", f.samples},
                          {"worst_inward_margin", finite_or_null(f.worst_inward_margin)}});
    }
    j["facets"] = facets;
    json wit = json::array();
    for (const BoundaryWitness& w : report.witnesses) {
        wit.push_back({{"x", vec_json(w.x)},
                       {"w", vec_json(w.w)},
                       {"axis", w.axis + 1},
                       {"side", w.side < 0 ? "lower" : "upper"},
                       {"outward", {w.outward.lo(), w.outward.hi()}}});
    }
    j["witnesses"] = wit;
    return j.dump(2) + "\n";
}

std::vector<BoundaryWitness> witnesses_from_json(const std::string& text)
{
    std::vector<BoundaryWitness> out;
    try {
        const json j = json::parse(text);
        for (const json& w : j.at("witnesses")) {
            BoundaryWitness b;
            b.x = to_vector(w.at("x"), "witness.x");
            b.w = to_vector(w.at("w"), "witness.w");
            const auto axis = w.at("axis").get<std::size_t>();
            if (axis == 0) throw ConfigError("witness.axis: 1-based index expected");
            b.axis = axis - 1;
            const std::string side = w.at("side").get<std::string>();
            if (side != "lower" && side != "upper") throw ConfigError("witness.side: expected lower or upper");
            b.side = side == "lower" ? -1 : 1;
            out.push_back(std::move(b));
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("replay report: ") + e.what());
    }
    return out;
}

std::string containment_json(const Pipeline& p, const ContainmentReport& report, const TrajectoryBundle& bundle)
{
    json j = header(p);
    j["trajectories"] = bundle.paths.size();
    j["h"] = bundle.h;
    j["horizon"] = bundle.times.empty() ? 0.0 : bundle.times.back();
    j["checks"] = report.checks;
    j["violations"] = report.violations;
    j["divergent"] = report.divergent;
    if (!report.first_violation.empty()) j["first_violation"] = report.first_violation;
    return j.dump(2) + "\n";
}

}  // namespace invkit
