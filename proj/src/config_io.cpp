#include "swarmform/config_io.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace swarmform {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> words(const std::string& s) {
    std::istringstream is(s);
    std::vector<std::string> out;
    for (std::string w; is >> w;) out.push_back(w);
    return out;
}

double to_double(const std::string& s) {
    double v = 0.0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) throw ConfigError("expected a number, got '" + s + "'");
    return v;
}

long long to_integer(const std::string& s) {
    long long v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) throw ConfigError("expected an integer, got '" + s + "'");
    return v;
}

int to_int(const std::string& s) { return static_cast<int>(to_integer(s)); }

std::uint64_t to_seed(const std::string& s) {
    std::uint64_t v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) throw ConfigError("expected a seed, got '" + s + "'");
    return v;
}

Vec3 to_vec3(const std::string& s) {
    const auto w = words(s);
    if (w.size() != 3) throw ConfigError("expected three numbers, got '" + s + "'");
    return {to_double(w[0]), to_double(w[1]), to_double(w[2])};
}

std::string vec_text(const Vec3& v) {
    return format_double(v.x) + " " + format_double(v.y) + " " + format_double(v.z);
}

using Setter = std::function<void(const std::string&)>;

std::map<std::string, Setter> param_keys(ControlParams& p) {
    auto num = [](double& f) { return [&f](const std::string& v) { f = to_double(v); }; };
    auto whole = [](int& f) { return [&f](const std::string& v) { f = to_int(v); }; };
    return {
        {"alpha", num(p.alpha)},
        {"beta", num(p.beta)},
        {"gamma", num(p.gamma)},
        {"d_aa", num(p.d_aa)},
        {"d_ab", num(p.d_ab)},
        {"d1", num(p.d1)},
        {"r_d", num(p.r_d)},
        {"r_c", num(p.r_c)},
        {"v_r", num(p.v_r)},
        {"theta_r", num(p.theta_r)},
        {"psi_r", num(p.psi_r)},
        {"dt", num(p.dt)},
        {"v_max", num(p.v_max)},
        {"stagnation_eps", num(p.stagnation_eps)},
        {"stagnation_ticks", whole(p.stagnation_ticks)},
        {"range_slack", num(p.range_slack)},
        {"repel_ticks", whole(p.repel_ticks)},
        {"escape_walk_ticks", whole(p.escape_walk_ticks)},
    };
}

std::map<std::string, Setter> shape_keys(ShapeRecipe& r) {
    return {
        {"base", [&r](const std::string& v) { r.base = v; }},
        {"nodes", [&r](const std::string& v) { r.nodes = to_int(v); }},
        {"sides", [&r](const std::string& v) { r.sides = to_int(v); }},
        {"per_side", [&r](const std::string& v) { r.per_side = to_int(v); }},
        {"spacing", [&r](const std::string& v) { r.spacing = to_double(v); }},
        {"levels", [&r](const std::string& v) { r.levels = to_int(v); }},
        {"level_spacing", [&r](const std::string& v) { r.level_spacing = to_double(v); }},
    };
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

FailureEvent parse_failure_event(const std::string& text) {
    const auto w = words(text);
    if (w.size() < 2) throw ConfigError("failure event needs '<tick> ids|cluster|isolate-follower ...'");
    FailureEvent e;
    e.tick = to_integer(w[0]);
    if (e.tick < 0) throw ConfigError("failure tick must be non-negative");
    if (w[1] == "ids") {
        for (size_t i = 2; i < w.size(); ++i) {
            const int id = to_int(w[i]);
            if (id < 0) throw ConfigError("agent ids must be non-negative");
            e.ids.push_back(id);
        }
    } else if (w[1] == "cluster") {
        if (w.size() != 3) throw ConfigError("cluster takes exactly one count");
        e.selector = "cluster";
        e.count = to_int(w[2]);
        if (e.count < 1) throw ConfigError("cluster count must be positive");
    } else if (w[1] == "isolate-follower") {
        if (w.size() != 2) throw ConfigError("isolate-follower takes no arguments");
        e.selector = "isolate-follower";
    } else {
        throw ConfigError("unknown failure kind '" + w[1] + "'");
    }
    return e;
}

std::string format_failure_event(const FailureEvent& e) {
    std::string s = std::to_string(e.tick);
    if (e.selector.empty()) {
        s += " ids";
        for (AgentId id : e.ids) s += " " + std::to_string(id);
    } else if (e.selector == "cluster") {
        s += " cluster " + std::to_string(e.count);
    } else {
        s += " " + e.selector;
    }
    return s;
}

std::vector<FailureEvent> parse_failure_schedule(std::istream& is, const std::string& source) {
    std::vector<FailureEvent> out;
    std::string line;
    for (int n = 1; std::getline(is, line); ++n) {
        const auto body = trim(line.substr(0, line.find('#')));
        if (body.empty()) continue;
        try {
            out.push_back(parse_failure_event(body));
        } catch (const ConfigError& e) {
            throw ConfigError(source + ":" + std::to_string(n) + ": " + e.what());
        }
    }
    return out;
}

std::vector<FailureEvent> load_failure_schedule(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open schedule");
    return parse_failure_schedule(in, path);
}

SimConfig parse_config(std::istream& is, const std::string& base_dir, const std::string& source) {
    SimConfig c;
    ShapeRecipe recipe;
    std::optional<std::string> spec_value;
    int spec_line = 0;

    std::map<std::string, Setter> top = {
        {"spec", [&](const std::string& v) { spec_value = v; }},
        {"agents", [&](const std::string& v) { c.agent_count = to_int(v); }},
        {"seed", [&](const std::string& v) { c.seed = to_seed(v); }},
        {"max_ticks", [&](const std::string& v) { c.max_ticks = to_integer(v); }},
        {"bid_order", [&](const std::string& v) { c.bid_order = parse_bid_order(v); }},
        {"kappa1", [&](const std::string& v) { c.kappa1 = to_double(v); }},
        {"kappa2", [&](const std::string& v) { c.kappa2 = to_double(v); }},
        {"T_l", [&](const std::string& v) { c.lost_ticks = to_int(v); }},
        {"bounds", [&](const std::string& v) {
             const auto w = words(v);
             if (w.size() != 6) throw ConfigError("bounds takes six numbers: lo xyz, hi xyz");
             c.bounds.lo = {to_double(w[0]), to_double(w[1]), to_double(w[2])};
             c.bounds.hi = {to_double(w[3]), to_double(w[4]), to_double(w[5])};
         }},
        {"initial_height", [&](const std::string& v) { c.initial_height = to_double(v); }},
        {"root_position", [&](const std::string& v) { c.root_position = to_vec3(v); }},
        {"trace_every", [&](const std::string& v) { c.trace_every = to_int(v); }},
    };
    auto params = param_keys(c.params);
    auto shape = shape_keys(recipe);
    std::map<std::string, Setter> failures = {
        {"fail", [&](const std::string& v) { c.failure_schedule.push_back(parse_failure_event(v)); }},
    };

    std::map<std::string, std::map<std::string, Setter>*> sections = {
        {"", &top}, {"params", &params}, {"shape", &shape}, {"failures", &failures}};
    std::string section;
    std::set<std::string> seen;
    std::string line;
    int n = 0;
    auto fail = [&](int at, const std::string& what) {
        throw ConfigError(source + ":" + std::to_string(at) + ": " + what);
    };
    while (std::getline(is, line)) {
        ++n;
        const auto body = trim(line.substr(0, line.find('#')));
        if (body.empty()) continue;
        if (body.front() == '[') {
            if (body.back() != ']') fail(n, "unterminated section header");
            section = trim(body.substr(1, body.size() - 2));
            if (!sections.contains(section)) fail(n, "unknown section [" + section + "]");
            continue;
        }
        const auto eq = body.find('=');
        if (eq == std::string::npos) fail(n, "expected 'key = value'");
        const auto key = trim(body.substr(0, eq));
        const auto value = trim(body.substr(eq + 1));
        auto& table = *sections.at(section);
        const auto it = table.find(key);
        const std::string where = section.empty() ? key : "[" + section + "] " + key;
        if (it == table.end()) fail(n, "unknown key '" + where + "'");
        if (value.empty()) fail(n, "missing value for '" + where + "'");
        if (key != "fail" && !seen.insert(section + "." + key).second) fail(n, "duplicate key '" + where + "'");
        if (key == "spec") spec_line = n;
        try {
            it->second(value);
        } catch (const ConfigError& e) {
            fail(n, e.what());
        }
    }

    if (!spec_value) fail(n + 1, "missing required key 'spec'");
    try {
        if (*spec_value == "generated") {
            c.recipe = recipe;
            c.spec = recipe.build();
        } else {
            if (std::any_of(seen.begin(), seen.end(), [](const std::string& k) { return k.starts_with("shape."); })) {
                fail(spec_line, "[shape] given but spec is a file");
            }
            std::filesystem::path p(*spec_value);
            if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
            c.spec_path = std::filesystem::absolute(p).lexically_normal().string();
            c.spec = load_spec(c.spec_path);
        }
    } catch (const SpecError& e) {
        fail(spec_line, e.what());
    } catch (const ConfigError& e) {
        const std::string what = e.what();
        if (what.starts_with(source + ":")) throw;
        fail(spec_line, what);
    }
    try {
        check_config(c);
    } catch (const ConfigError& e) {
        fail(n, e.what());
    }
    return c;
}

SimConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open config");
    const auto dir = std::filesystem::path(path).parent_path();
    return parse_config(in, dir.empty() ? "." : dir.string(), path);
}

void write_config(std::ostream& os, const SimConfig& c) {
    os << "spec = " << (c.recipe ? std::string("generated") : c.spec_path)
       << "\n";
    os << "agents = " << c.agent_count << "\n";
    os << "seed = " << c.seed << "\n";
    if (c.max_ticks) os << "max_ticks = " << *c.max_ticks << "\n";
    os << "bid_order = " << to_string(c.bid_order) << "\n";
    os << "kappa1 = " << format_double(c.kappa1) << "\n";
    os << "kappa2 = " << format_double(c.kappa2) << "\n";
    os << "T_l = " << c.lost_ticks << "\n";
    os << "bounds = " << vec_text(c.bounds.lo) << " " << vec_text(c.bounds.hi) << "\n";
    os << "initial_height = " << format_double(c.initial_height) << "\n";
    if (c.root_position) os << "root_position = " << vec_text(*c.root_position) << "\n";
    os << "trace_every = " << c.trace_every << "\n";

    if (c.recipe) {
        const auto& r = *c.recipe;
        os << "\n[shape]\n";
        os << "base = " << r.base << "\n";
        os << "nodes = " << r.nodes << "\n";
        os << "sides = " << r.sides << "\n";
        os << "per_side = " << r.per_side << "\n";
        os << "spacing = " << format_double(r.spacing) << "\n";
        os << "levels = " << r.levels << "\n";
        if (r.level_spacing) os << "level_spacing = " << format_double(*r.level_spacing) << "\n";
    }

    const auto& p = c.params;
    os << "\n[params]\n";
    os << "alpha = " << format_double(p.alpha) << "\n";
    os << "beta = " << format_double(p.beta) << "\n";
    os << "gamma = " << format_double(p.gamma) << "\n";
    os << "d_aa = " << format_double(p.d_aa) << "\n";
    os << "d_ab = " << format_double(p.d_ab) << "\n";
    os << "d1 = " << format_double(p.d1) << "\n";
    os << "r_d = " << format_double(p.r_d) << "\n";
    os << "r_c = " << format_double(p.r_c) << "\n";
    os << "v_r = " << format_double(p.v_r) << "\n";
    os << "theta_r = " << format_double(p.theta_r) << "\n";
    os << "psi_r = " << format_double(p.psi_r) << "\n";
    os << "dt = " << format_double(p.dt) << "\n";
    os << "v_max = " << format_double(p.v_max) << "\n";
    os << "stagnation_eps = " << format_double(p.stagnation_eps) << "\n";
    os << "stagnation_ticks = " << p.stagnation_ticks << "\n";
    os << "range_slack = " << format_double(p.range_slack) << "\n";
    os << "repel_ticks = " << p.repel_ticks << "\n";
    os << "escape_walk_ticks = " << p.escape_walk_ticks << "\n";

    if (!c.failure_schedule.empty()) {
        os << "\n[failures]\n";
        for (const auto& e : c.failure_schedule) os << "fail = " << format_failure_event(e) << "\n";
    }
}

std::string format_config(const SimConfig& config) {
    std::ostringstream os;
    write_config(os, config);
    return os.str();
}

}  // namespace swarmform
