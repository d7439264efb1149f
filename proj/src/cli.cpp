#include "nlpde/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "nlpde/expr.hpp"
#include "nlpde/fixedpoint.hpp"
#include "nlpde/holder.hpp"
#include "nlpde/linsolve.hpp"
#include "nlpde/nltf.hpp"
#include "nlpde/parallel.hpp"
#include "nlpde/quasilin.hpp"
#include "nlpde/verify.hpp"

namespace nlpde {

namespace {

const char* kWhereConfig = "cli::config";

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

ConfigValue parse_value(std::string raw, const std::string& key) {
    raw = trim(raw);
    ConfigValue v;
    if (raw.empty()) fail(ErrorCode::ConfigError, kWhereConfig, "empty value for '" + key + "'");
    if (raw.front() == '"') {
        size_t close = raw.find('"', 1);
        if (close == std::string::npos || trim(raw.substr(close + 1)).size() > 0)
            fail(ErrorCode::ConfigError, kWhereConfig, "bad string value for '" + key + "'");
        v.kind = ConfigValue::Kind::Str;
        v.str = raw.substr(1, close - 1);
        return v;
    }
    // strip trailing comment on non-string values
    size_t hash = raw.find('#');
    if (hash != std::string::npos) raw = trim(raw.substr(0, hash));
    if (raw == "true" || raw == "false") {
        v.kind = ConfigValue::Kind::Bool;
        v.flag = raw == "true";
        return v;
    }
    char* end = nullptr;
    double num = std::strtod(raw.c_str(), &end);
    if (end == raw.c_str() + raw.size() && raw.size() > 0) {
        v.kind = ConfigValue::Kind::Num;
        v.num = num;
        return v;
    }
    fail(ErrorCode::ConfigError, kWhereConfig,
         "value '" + raw + "' for '" + key + "' is not a string, number, or boolean");
}

} // namespace

ConfigMap parse_config_text(const std::string& text) {
    ConfigMap cfg;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                fail(ErrorCode::ConfigError, kWhereConfig,
                     "malformed table header at line " + std::to_string(lineno));
            section = trim(t.substr(1, t.size() - 2));
            if (section.empty())
                fail(ErrorCode::ConfigError, kWhereConfig,
                     "empty table name at line " + std::to_string(lineno));
            continue;
        }
        size_t eq = t.find('=');
        if (eq == std::string::npos)
            fail(ErrorCode::ConfigError, kWhereConfig,
                 "expected 'key = value' at line " + std::to_string(lineno));
        std::string key = trim(t.substr(0, eq));
        if (key.empty())
            fail(ErrorCode::ConfigError, kWhereConfig,
                 "empty key at line " + std::to_string(lineno));
        std::string full = section.empty() ? key : section + "." + key;
        if (cfg.count(full))
            fail(ErrorCode::ConfigError, kWhereConfig, "duplicate key '" + full + "'");
        cfg[full] = parse_value(t.substr(eq + 1), full);
    }
    return cfg;
}

ConfigMap load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::IoError, kWhereConfig, "cannot open config file " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

void apply_override(ConfigMap& cfg, const std::string& keyval) {
    size_t eq = keyval.find('=');
    if (eq == std::string::npos || eq == 0)
        fail(ErrorCode::ConfigError, kWhereConfig, "--set expects key=value, got '" + keyval + "'");
    std::string key = trim(keyval.substr(0, eq));
    std::string raw = trim(keyval.substr(eq + 1));
    ConfigValue v;
    if (raw == "true" || raw == "false") {
        v.kind = ConfigValue::Kind::Bool;
        v.flag = raw == "true";
    } else {
        char* end = nullptr;
        double num = std::strtod(raw.c_str(), &end);
        if (!raw.empty() && end == raw.c_str() + raw.size()) {
            v.kind = ConfigValue::Kind::Num;
            v.num = num;
        } else {
            v.kind = ConfigValue::Kind::Str;
            v.str = raw;
        }
    }
    cfg[key] = v;
}

// ---------------------------------------------------------------------------
// Config access and validation
// ---------------------------------------------------------------------------

namespace {

double get_num(const ConfigMap& cfg, const std::string& key, double def) {
    auto it = cfg.find(key);
    if (it == cfg.end()) return def;
    if (it->second.kind != ConfigValue::Kind::Num)
        fail(ErrorCode::ConfigError, kWhereConfig, "'" + key + "' must be a number");
    return it->second.num;
}

std::string get_str(const ConfigMap& cfg, const std::string& key, const std::string& def) {
    auto it = cfg.find(key);
    if (it == cfg.end()) return def;
    if (it->second.kind != ConfigValue::Kind::Str)
        fail(ErrorCode::ConfigError, kWhereConfig, "'" + key + "' must be a string");
    return it->second.str;
}

bool has_key(const ConfigMap& cfg, const std::string& key) { return cfg.count(key) > 0; }

/// Parses a jet identifier like "u", "p1", "q11", "c112", "e1122" into a
/// multi-index; digits must be nondecreasing and within 1..d.
MultiIndex jet_multiindex(const std::string& name, int d, const char* where) {
    static const std::map<char, int> orders = {{'p', 1}, {'q', 2}, {'c', 3}, {'e', 4}};
    if (name == "u") return make_multiindex(d, 0, 0);
    auto it = name.empty() ? orders.end() : orders.find(name[0]);
    if (it == orders.end())
        fail(ErrorCode::ConfigError, where, "unknown jet identifier '" + name + "'");
    int ord = it->second;
    if (static_cast<int>(name.size()) != ord + 1)
        fail(ErrorCode::ConfigError, where,
             "jet identifier '" + name + "' must carry " + std::to_string(ord) + " axis digits");
    MultiIndex mi = make_multiindex(d, 0, 0);
    char prev = '0';
    for (size_t q = 1; q < name.size(); ++q) {
        char cdig = name[q];
        if (cdig < '1' || cdig > char('0' + d) || cdig < prev)
            fail(ErrorCode::ConfigError, where,
                 "jet identifier '" + name + "' is not canonical for d=" + std::to_string(d));
        ++mi.c[static_cast<size_t>(cdig - '1')];
        prev = cdig;
    }
    return mi;
}

std::string jet_name(const MultiIndex& mi) {
    static const char prefix[5] = {'u', 'p', 'q', 'c', 'e'};
    if (mi.order() == 0) return "u";
    return std::string(1, prefix[mi.order()]) + mi.suffix();
}

void validate_keys(const ConfigMap& cfg, const std::string& cmd) {
    static const std::vector<std::string> exact = {
        "grid.T", "grid.n_tau", "grid.L", "grid.n_y", "grid.d", "grid.r", "grid.m",
        "scheme.kind", "scheme.cfl_safety",
        "fixedpoint.tol", "fixedpoint.max_iter", "fixedpoint.target_ratio",
        "output.dir", "output.formats",
        "problem.preset", "problem.F", "problem.f", "problem.g", "problem.g_t",
        "norms.l", "norms.field",
        "ellipticity.lambda", "ellipticity.radius",
        "verify.route", "verify.levels", "verify.tol_factor",
        "verify.u", "verify.u_s", "verify.u_t",
    };
    static const std::vector<std::string> prefixes = {
        "problem.A.", "problem.B.", "problem.F.d_", "problem.g.d_", "verify.d_",
    };
    for (const auto& kv : cfg) {
        bool ok = false;
        for (const auto& e : exact)
            if (kv.first == e) ok = true;
        for (const auto& p : prefixes)
            if (!ok && kv.first.rfind(p, 0) == 0 && kv.first.size() > p.size()) ok = true;
        if (!ok)
            fail(ErrorCode::ConfigError, "cli::" + cmd, "unknown config key '" + kv.first + "'");
    }
}

TriangleGrid grid_from(const ConfigMap& cfg) {
    return build_grid(get_num(cfg, "grid.T", 1.0), static_cast<int>(get_num(cfg, "grid.n_tau", 8)),
                      get_num(cfg, "grid.L", 2.0 * M_PI),
                      static_cast<int>(get_num(cfg, "grid.n_y", 16)),
                      static_cast<int>(get_num(cfg, "grid.d", 1)),
                      static_cast<int>(get_num(cfg, "grid.r", 1)),
                      static_cast<int>(get_num(cfg, "grid.m", 1)));
}

SchemeConfig scheme_from(const ConfigMap& cfg) {
    SchemeConfig s;
    std::string kind = get_str(cfg, "scheme.kind", "explicit");
    if (kind == "explicit")
        s.kind = SchemeKind::Explicit;
    else if (kind == "imex")
        s.kind = SchemeKind::Imex;
    else
        fail(ErrorCode::ConfigError, kWhereConfig, "scheme.kind must be explicit or imex");
    s.cfl_safety = get_num(cfg, "scheme.cfl_safety", 0.9);
    return s;
}

FixedPointConfig fixedpoint_from(const ConfigMap& cfg) {
    FixedPointConfig f;
    f.tol = get_num(cfg, "fixedpoint.tol", 1e-8);
    f.max_iter = static_cast<int>(get_num(cfg, "fixedpoint.max_iter", 50));
    f.target_ratio = get_num(cfg, "fixedpoint.target_ratio", 0.5);
    return f;
}

// ---------------------------------------------------------------------------
// Inline problem construction from expression strings
// ---------------------------------------------------------------------------

Bindings base_bindings(int d, double t, double s, const double* y) {
    Bindings b;
    b.bind("t", t);
    b.bind("s", s);
    for (int a = 0; a < d; ++a) b.bind("y" + std::to_string(a + 1), y[a]);
    return b;
}

LinearCoeffEval coeff_eval(const std::string& text, int d) {
    Expression e = parse(text);
    return [e, d](double t, double s, const double* y, double* out) {
        *out = e.eval(base_bindings(d, t, s, y));
    };
}

InitialData initial_from_config(const ConfigMap& cfg, int d) {
    InitialData init;
    init.d = d;
    init.m = 1;
    if (!has_key(cfg, "problem.g"))
        fail(ErrorCode::ConfigError, kWhereConfig, "inline problems require problem.g");
    Expression g = parse(get_str(cfg, "problem.g", ""));
    init.g = [g, d](double t, const double* y, double* out) {
        *out = g.eval(base_bindings(d, t, 0.0, y));
    };
    if (has_key(cfg, "problem.g_t")) {
        Expression gt = parse(get_str(cfg, "problem.g_t", ""));
        init.g_t = [gt, d](double t, const double* y, double* out) {
            *out = gt.eval(base_bindings(d, t, 0.0, y));
        };
    }
    for (const auto& kv : cfg) {
        const std::string pfx = "problem.g.d_";
        if (kv.first.rfind(pfx, 0) != 0) continue;
        std::string suffix = kv.first.substr(pfx.size());
        MultiIndex mi = make_multiindex(d, 0, 0);
        for (char cdig : suffix) {
            if (cdig < '1' || cdig > char('0' + d))
                fail(ErrorCode::ConfigError, kWhereConfig, "bad key '" + kv.first + "'");
            ++mi.c[static_cast<size_t>(cdig - '1')];
        }
        Expression e = parse(kv.second.str);
        init.dg.emplace_back(mi, [e, d](double t, const double* y, double* out) {
            *out = e.eval(base_bindings(d, t, 0.0, y));
        });
    }
    return init;
}

/// Binds the jet of z into expression variables: u/p1/q11/... for the local
/// argument and n/np1/nq11/... for the diagonal one.
void bind_jet(Bindings& b, const JetValues& z) {
    for (int id = 0; id < z.mit.size(); ++id) {
        const MultiIndex& mi = z.mit.at(id);
        std::string local = jet_name(mi);
        std::string diag = mi.order() == 0 ? "n" : "n" + local;
        b.bind(local, z.loc(id));
        b.bind(diag, z.dia(id));
    }
}

JetVecEval jet_eval(const std::string& text, int d) {
    Expression e = parse(text);
    return [e, d](double t, double s, const double* y, const JetValues& z, double* out) {
        Bindings b = base_bindings(d, t, s, y);
        bind_jet(b, z);
        *out = e.eval(b);
    };
}

SystemSpec problem_from(const ConfigMap& cfg, const TriangleGrid& grid) {
    if (has_key(cfg, "problem.preset")) return make_preset(get_str(cfg, "problem.preset", ""));
    const int d = grid.d;
    if (grid.m != 1)
        fail(ErrorCode::ConfigError, kWhereConfig, "inline problems support m = 1 only");
    if (has_key(cfg, "problem.F")) {
        FullyNonlinearSpec spec;
        spec.d = d;
        spec.r = grid.r;
        spec.mit = MultiIndexTable(d, 2 * grid.r);
        spec.F = jet_eval(get_str(cfg, "problem.F", ""), d);
        auto tops = spec.top_ids();
        spec.F_q.resize(tops.size());
        spec.F_n.resize(tops.size());
        spec.F_y.resize(static_cast<size_t>(d));
        for (const auto& kv : cfg) {
            const std::string pfx = "problem.F.d_";
            if (kv.first.rfind(pfx, 0) != 0) continue;
            std::string name = kv.first.substr(pfx.size());
            JetVecEval e = jet_eval(kv.second.str, d);
            if (name == "t") {
                spec.F_t = e;
            } else if (name == "s") {
                spec.F_s = e;
            } else if (name.size() == 2 && name[0] == 'y') {
                int axis = name[1] - '1';
                if (axis < 0 || axis >= d)
                    fail(ErrorCode::ConfigError, kWhereConfig, "bad key '" + kv.first + "'");
                spec.F_y[static_cast<size_t>(axis)] = e;
            } else {
                bool diag = name[0] == 'n';
                MultiIndex mi = jet_multiindex(diag ? name.substr(1) : name, d, kWhereConfig);
                if (mi.order() != 2 * grid.r)
                    fail(ErrorCode::ConfigError, kWhereConfig,
                         "derivative key '" + kv.first + "' must target a top-order slot");
                int id = spec.mit.id_of(mi);
                for (size_t p = 0; p < tops.size(); ++p)
                    if (tops[p] == id) (diag ? spec.F_n : spec.F_q)[p] = e;
            }
        }
        spec.init = initial_from_config(cfg, d);
        return spec;
    }
    // linear problem from A./B. coefficient expressions
    LinearSystemSpec spec = make_linear_spec(d, grid.r, 1);
    bool any = false;
    for (const auto& kv : cfg) {
        bool is_a = kv.first.rfind("problem.A.", 0) == 0;
        bool is_b = kv.first.rfind("problem.B.", 0) == 0;
        if (!is_a && !is_b) continue;
        MultiIndex mi = jet_multiindex(kv.first.substr(10), d, kWhereConfig);
        int id = spec.mit.id_of(mi);
        (is_a ? spec.A : spec.B)[static_cast<size_t>(id)] = coeff_eval(kv.second.str, d);
        any = true;
    }
    if (!any)
        fail(ErrorCode::ConfigError, kWhereConfig,
             "problem needs a preset, an F expression, or A./B. coefficients");
    if (has_key(cfg, "problem.f")) spec.f = coeff_eval(get_str(cfg, "problem.f", ""), d);
    spec.init = initial_from_config(cfg, d);
    return spec;
}

// ---------------------------------------------------------------------------
// Artifact emission
// ---------------------------------------------------------------------------

std::vector<std::string> formats_from(const ConfigMap& cfg) {
    std::string raw = get_str(cfg, "output.formats", "nltf,json");
    std::vector<std::string> out;
    std::string cur;
    for (char c : raw + ",") {
        if (c == ',' || c == ' ' || c == '|') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    for (const auto& f : out)
        if (f != "csv" && f != "nltf" && f != "json")
            fail(ErrorCode::ConfigError, kWhereConfig, "unknown output format '" + f + "'");
    return out;
}

bool wants(const std::vector<std::string>& formats, const std::string& f) {
    for (const auto& x : formats)
        if (x == f) return true;
    return false;
}

void write_csv_slices(const std::string& dir, const TriangleField& u) {
    namespace fs = std::filesystem;
    fs::create_directories(dir + "/slices");
    const TriangleGrid& g = u.grid();
    char buf[64];
    for (int i = 0; i <= g.n_tau; ++i) {
        std::ofstream out(dir + "/slices/t" + std::to_string(i) + ".csv",
                          std::ios::binary); // binary: exactly \n line endings
        out << "s";
        for (int a = 0; a < g.d; ++a) out << ",y" << (a + 1);
        for (int a = 0; a < g.m; ++a) out << ",c" << a;
        out << "\n";
        double y[2];
        for (int j = 0; j <= i; ++j) {
            for (int k = 0; k < g.n_points(); ++k) {
                g.y_of(k, y);
                std::snprintf(buf, sizeof buf, "%.17g", g.s(j));
                out << buf;
                for (int a = 0; a < g.d; ++a) {
                    std::snprintf(buf, sizeof buf, ",%.17g", y[a]);
                    out << buf;
                }
                for (int a = 0; a < g.m; ++a) {
                    std::snprintf(buf, sizeof buf, ",%.17g", u.at(i, j, k, a));
                    out << buf;
                }
                out << "\n";
            }
        }
    }
}

void emit_field(const ConfigMap& cfg, const TriangleField& u, const std::string& problem_id,
                const nlohmann::json& report) {
    std::string dir = get_str(cfg, "output.dir", "out");
    std::filesystem::create_directories(dir);
    auto formats = formats_from(cfg);
    if (wants(formats, "nltf")) write_nltf(dir + "/field.nltf", u, problem_id);
    if (wants(formats, "json")) {
        std::ofstream out(dir + "/report.json", std::ios::binary);
        out << report.dump(2) << "\n";
    }
    if (wants(formats, "csv")) write_csv_slices(dir, u);
}

void emit_report(const ConfigMap& cfg, const nlohmann::json& report) {
    std::string dir = get_str(cfg, "output.dir", "out");
    std::filesystem::create_directories(dir);
    std::ofstream out(dir + "/report.json", std::ios::binary);
    out << report.dump(2) << "\n";
}

nlohmann::json solve_report_json(const SolveReport& rep) {
    return {{"iterations", rep.iterations}, {"e", rep.e},       {"ratios", rep.ratios},
            {"windows", rep.windows},       {"window", rep.window},
            {"residual", rep.residual},     {"r_max", rep.r_max},
            {"converged", rep.converged}};
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

int cmd_solve_linear(const ConfigMap& cfg) {
    TriangleGrid grid = grid_from(cfg);
    SystemSpec sv = problem_from(cfg, grid);
    const auto* spec = std::get_if<LinearSystemSpec>(&sv);
    if (!spec)
        fail(ErrorCode::ConfigError, "cli::solve-linear", "configured problem is not linear");
    auto [u, rep] = solve_nonlocal_linear(*spec, grid, scheme_from(cfg));
    nlohmann::json report = {{"scheme", rep.scheme == SchemeKind::Explicit ? "explicit" : "imex"},
                             {"cfl_ratio", rep.cfl_ratio},
                             {"wall_time_s", rep.wall_time_s},
                             {"sup_norm", rep.sup_norm}};
    if (has_key(cfg, "norms.l"))
        report["schauder_ratio"] = schauder_ratio(u, *spec, grid, get_num(cfg, "norms.l", 2.5));
    emit_field(cfg, u, get_str(cfg, "problem.preset", "inline"), report);
    return 0;
}

FullyNonlinearSpec fullnl_from(const ConfigMap& cfg, const TriangleGrid& grid,
                               const char* where) {
    SystemSpec sv = problem_from(cfg, grid);
    if (auto* f = std::get_if<FullyNonlinearSpec>(&sv)) return *f;
    fail(ErrorCode::ConfigError, where, "configured problem is not fully nonlinear");
}

int cmd_solve_quasilinear(const ConfigMap& cfg) {
    TriangleGrid grid = grid_from(cfg);
    FullyNonlinearSpec fnl = fullnl_from(cfg, grid, "cli::solve-quasilinear");
    InducedSystem ind = quasilinearize_spatial(fnl);
    TriangleGrid gi = grid;
    gi.m = grid.d + 1;
    auto [u, rep] = solve_quasilinear_fixedpoint(ind.spec, gi, scheme_from(cfg),
                                                 fixedpoint_from(cfg));
    nlohmann::json report = solve_report_json(rep);
    report["components"] = ind.roles;
    emit_field(cfg, u, get_str(cfg, "problem.preset", "inline") + ":induced", report);
    return 0;
}

int cmd_solve_fullnl(const ConfigMap& cfg, const std::string& variant) {
    TriangleGrid grid = grid_from(cfg);
    FullyNonlinearSpec fnl = fullnl_from(cfg, grid, "cli::solve-fullnl");
    TriangleField u;
    SolveReport rep;
    if (variant == "spatial") {
        InducedSystem ind = quasilinearize_spatial(fnl);
        TriangleGrid gi = grid;
        gi.m = grid.d + 1;
        auto [coupled, r] = solve_quasilinear_fixedpoint(ind.spec, gi, scheme_from(cfg),
                                                         fixedpoint_from(cfg));
        u = extract_component(coupled, 0);
        rep = r;
    } else if (variant == "temporal") {
        auto [uu, r] =
            solve_fully_nonlinear_temporal(fnl, grid, scheme_from(cfg), fixedpoint_from(cfg));
        u = std::move(uu);
        rep = r;
    } else {
        fail(ErrorCode::ConfigError, "cli::solve-fullnl",
             "--variant must be spatial or temporal");
    }
    nlohmann::json report = solve_report_json(rep);
    report["variant"] = variant;
    emit_field(cfg, u, get_str(cfg, "problem.preset", "inline"), report);
    return 0;
}

int cmd_quasilinearize(const ConfigMap& cfg) {
    TriangleGrid grid = grid_from(cfg);
    FullyNonlinearSpec fnl = fullnl_from(cfg, grid, "cli::quasilinearize");
    InducedSystem ind = quasilinearize_spatial(fnl);
    nlohmann::json out;
    out["components"] = ind.roles;
    nlohmann::json coeffs = nlohmann::json::array();
    auto tops = ind.spec.top_ids();
    for (size_t p = 0; p < tops.size(); ++p) {
        const MultiIndex& mi = ind.spec.mit.at(tops[p]);
        coeffs.push_back({{"slot", jet_name(mi)},
                          {"u_equation", "constant (multiplicity " +
                                             std::to_string(mi.multiplicity()) + ")"},
                          {"v_equations", "jet-dependent (F derivatives)"}});
    }
    out["top_coefficients"] = coeffs;
    out["lower_order"] = "F minus v-divergence sums on u; F_y on v";
    std::cout << out.dump(2) << "\n";
    emit_report(cfg, out);
    return 0;
}

int cmd_norms(const ConfigMap& cfg) {
    std::string path = get_str(cfg, "norms.field", "");
    if (path.empty())
        fail(ErrorCode::ConfigError, "cli::norms", "norms.field must point to an NLTF file");
    TriangleField u = read_nltf(path);
    double l = get_num(cfg, "norms.l", 2.5);
    nlohmann::json out;
    out["l"] = l;
    out["triangle_norm"] = norm_triangle(u, l, u.grid().n_tau >= 2);
    nlohmann::json per_t = nlohmann::json::array();
    for (int i = 0; i <= u.grid().n_tau; ++i) {
        HolderReport rep = norm_parabolic_at(u, i, l);
        per_t.push_back({{"t", u.grid().t(i)},
                         {"total", rep.total},
                         {"seminorm_y", rep.seminorm_y}});
    }
    out["per_t"] = per_t;
    std::cout << out.dump(2) << "\n";
    emit_report(cfg, out);
    return 0;
}

Route route_from(const ConfigMap& cfg) {
    std::string r = get_str(cfg, "verify.route", "linear");
    if (r == "linear") return Route::Linear;
    if (r == "spatial") return Route::QuasilinearSpatial;
    if (r == "temporal") return Route::FullyNonlinearTemporal;
    fail(ErrorCode::ConfigError, kWhereConfig,
         "verify.route must be linear, spatial, or temporal");
}

/// Manufactured problem for verify-mms/convergence: a catalog name, or an
/// inline problem paired with verify.u/u_s/u_t/d_* expressions (used as
/// given, so a wrong inline forcing is detectable).
MmsProblem mms_from(const ConfigMap& cfg, const TriangleGrid& grid) {
    if (has_key(cfg, "problem.preset"))
        return make_mms_problem(get_str(cfg, "problem.preset", ""));
    if (!has_key(cfg, "verify.u"))
        fail(ErrorCode::ConfigError, kWhereConfig,
             "verify-mms needs an MMS preset or verify.u expressions");
    std::vector<std::pair<std::string, std::string>> derivs;
    for (const auto& kv : cfg)
        if (kv.first.rfind("verify.d_", 0) == 0)
            derivs.emplace_back(kv.first.substr(9), kv.second.str);
    MmsProblem p;
    p.name = "inline";
    p.star = make_manufactured(grid.d, grid.r, get_str(cfg, "verify.u", ""),
                               get_str(cfg, "verify.u_s", ""), get_str(cfg, "verify.u_t", ""),
                               derivs);
    p.spec = problem_from(cfg, grid); // forcing exactly as configured
    return p;
}

int cmd_verify_mms(const ConfigMap& cfg) {
    TriangleGrid grid = grid_from(cfg);
    MmsProblem prob = mms_from(cfg, grid);
    Route route = route_from(cfg);

    TriangleField u;
    if (route == Route::Linear) {
        u = solve_nonlocal_linear(std::get<LinearSystemSpec>(prob.spec), grid, scheme_from(cfg))
                .first;
    } else if (route == Route::QuasilinearSpatial) {
        InducedSystem ind = quasilinearize_spatial(std::get<FullyNonlinearSpec>(prob.spec));
        TriangleGrid gi = grid;
        gi.m = grid.d + 1;
        auto [coupled, rep] = solve_quasilinear_fixedpoint(ind.spec, gi, scheme_from(cfg),
                                                           fixedpoint_from(cfg));
        (void)rep;
        u = extract_component(coupled, 0);
    } else {
        u = solve_fully_nonlinear_temporal(std::get<FullyNonlinearSpec>(prob.spec), grid,
                                           scheme_from(cfg), fixedpoint_from(cfg))
                .first;
    }
    TriangleField star = exact_field(prob.star, u.grid());
    FieldDiff diff = compare_fields(u, star);
    double scale = 0.0;
    for (double x : star.raw()) scale = std::max(scale, std::fabs(x));
    double tol = get_num(cfg, "verify.tol_factor", 10.0) *
                 (grid.dtau() + grid.dy() * grid.dy()) * std::max(scale, 1.0);
    bool pass = diff.sup_diff <= tol;
    nlohmann::json report = {{"problem", prob.name},   {"sup_error", diff.sup_diff},
                             {"l2_error", diff.l2_diff}, {"tolerance", tol},
                             {"passed", pass}};
    std::cout << report.dump(2) << "\n";
    emit_report(cfg, report);
    return pass ? 0 : 3;
}

int cmd_check_equivalence(const ConfigMap& cfg) {
    TriangleGrid grid = grid_from(cfg);
    FullyNonlinearSpec fnl = fullnl_from(cfg, grid, "cli::check-equivalence");
    InducedSystem ind = quasilinearize_spatial(fnl);
    TriangleGrid gi = grid;
    gi.m = grid.d + 1;
    auto [coupled, rep] = solve_quasilinear_fixedpoint(ind.spec, gi, scheme_from(cfg),
                                                       fixedpoint_from(cfg));
    TriangleField u = extract_component(coupled, 0);
    std::vector<TriangleField> vs;
    for (int k = 1; k <= grid.d; ++k) vs.push_back(extract_component(coupled, k));
    EquivalenceReport eq = check_equivalence(u, vs, fnl);
    double exch = check_exchange_symmetry(vs);
    double scale = 1.0;
    for (double x : u.raw()) scale = std::max(scale, std::fabs(x));
    double tol = get_num(cfg, "verify.tol_factor", 10.0) *
                 (u.grid().dtau() + grid.dy() * grid.dy()) * scale;
    bool pass = eq.grad_residual <= tol && eq.pde_residual <= tol;
    nlohmann::json report = {{"grad_residual", eq.grad_residual},
                             {"pde_residual", eq.pde_residual},
                             {"exchange_residual", exch},
                             {"tolerance", tol},
                             {"converged", rep.converged},
                             {"passed", pass}};
    std::cout << report.dump(2) << "\n";
    emit_report(cfg, report);
    return pass ? 0 : 3;
}

int cmd_convergence(const ConfigMap& cfg) {
    TriangleGrid base = grid_from(cfg);
    MmsProblem prob = mms_from(cfg, base);
    int levels = static_cast<int>(get_num(cfg, "verify.levels", 3));
    std::vector<TriangleGrid> grids;
    TriangleGrid g = base;
    for (int q = 0; q < levels; ++q) {
        grids.push_back(g);
        g.n_y *= 2;
        g.n_tau *= 4; // dtau ~ dy^2 refinement for the explicit scheme
    }
    ConvergenceResult res = convergence_study(prob, grids, route_from(cfg));
    bool pass = res.spatial_order >= 1.7 && res.spatial_order <= 2.3;
    nlohmann::json report = {{"problem", prob.name},
                             {"sup_errors", res.sup_errors},
                             {"l2_errors", res.l2_errors},
                             {"spatial_order", res.spatial_order},
                             {"temporal_order", res.temporal_order},
                             {"fit_residual", res.fit_residual},
                             {"passed", pass}};
    std::cout << report.dump(2) << "\n";
    emit_report(cfg, report);
    return pass ? 0 : 3;
}

int cmd_check_ellipticity(const ConfigMap& cfg) {
    TriangleGrid grid = grid_from(cfg);
    SystemSpec spec = problem_from(cfg, grid);
    EllipticitySamplePlan plan;
    plan.ball_radius = get_num(cfg, "ellipticity.radius", 1.0);
    double lambda = get_num(cfg, "ellipticity.lambda", 0.0);
    EllipticityReport rep = check_ellipticity(spec, grid, plan, lambda);
    nlohmann::json report = {{"passed", rep.passed},
                             {"lambda_est", rep.lambda_est},
                             {"lambda_target", lambda},
                             {"samples", rep.samples}};
    if (!rep.passed)
        report["witness"] = {{"t", rep.worst_case.t},     {"s", rep.worst_case.s},
                             {"y", rep.worst_case.y},     {"xi", rep.worst_case.xi},
                             {"v", rep.worst_case.v},     {"ratio", rep.worst_case.ratio},
                             {"combined", rep.worst_case.combined}};
    std::cout << report.dump(2) << "\n";
    emit_report(cfg, report);
    return rep.passed ? 0 : 3;
}

int exit_code_for(ErrorCode c) {
    switch (c) {
        case ErrorCode::CflViolation:
        case ErrorCode::NonFiniteDetected:
        case ErrorCode::MaxIterExceeded:
        case ErrorCode::BallExit:
        case ErrorCode::EvaluatorFailure:
        case ErrorCode::DomainError:
        case ErrorCode::DivisionByZero:
            return 2;
        case ErrorCode::SelfCheckFailed:
            return 3;
        default:
            return 1;
    }
}

} // namespace

int cli_run(int argc, const char* const* argv) {
    try {
        std::vector<std::string> args(argv + 1, argv + argc);
        if (args.empty() || args[0] == "--help" || args[0] == "help") {
            std::cout << "usage: nlpde <subcommand> [--config FILE] [--set key=value]... "
                         "[--threads N] [--variant spatial|temporal]\n"
                         "subcommands: solve-linear solve-quasilinear solve-fullnl "
                         "quasilinearize norms verify-mms check-equivalence convergence "
                         "check-ellipticity\n";
            return args.empty() ? 1 : 0;
        }
        std::string cmd = args[0];
        ConfigMap cfg;
        std::string variant = "spatial";
        for (size_t q = 1; q < args.size(); ++q) {
            auto need_value = [&](const char* flag) -> const std::string& {
                if (q + 1 >= args.size())
                    fail(ErrorCode::ConfigError, "cli::run",
                         std::string(flag) + " requires a value");
                return args[++q];
            };
            if (args[q] == "--config") {
                ConfigMap file = load_config(need_value("--config"));
                for (auto& kv : file) cfg[kv.first] = kv.second;
            } else if (args[q] == "--set") {
                apply_override(cfg, need_value("--set"));
            } else if (args[q] == "--threads") {
                set_thread_count(static_cast<int>(std::stol(need_value("--threads"))));
            } else if (args[q] == "--variant") {
                variant = need_value("--variant");
            } else {
                fail(ErrorCode::ConfigError, "cli::run", "unknown argument '" + args[q] + "'");
            }
        }
        validate_keys(cfg, cmd);
        if (cmd == "solve-linear") return cmd_solve_linear(cfg);
        if (cmd == "solve-quasilinear") return cmd_solve_quasilinear(cfg);
        if (cmd == "solve-fullnl") return cmd_solve_fullnl(cfg, variant);
        if (cmd == "quasilinearize") return cmd_quasilinearize(cfg);
        if (cmd == "norms") return cmd_norms(cfg);
        if (cmd == "verify-mms") return cmd_verify_mms(cfg);
        if (cmd == "check-equivalence") return cmd_check_equivalence(cfg);
        if (cmd == "convergence") return cmd_convergence(cfg);
        if (cmd == "check-ellipticity") return cmd_check_ellipticity(cfg);
        fail(ErrorCode::ConfigError, "cli::run", "unknown subcommand '" + cmd + "'");
    } catch (const Error& e) {
        std::cerr << "ERROR " << error_code_name(e.code()) << " " << e.where() << " "
                  << e.message() << "\n";
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::cerr << "ERROR " << error_code_name(ErrorCode::EvaluatorFailure)
                  << " cli::run " << e.what() << "\n";
        return 2;
    }
}

} // namespace nlpde
