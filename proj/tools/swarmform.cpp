#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "swarmform/config_io.hpp"
#include "swarmform/engine.hpp"
#include "swarmform/report.hpp"
#include "swarmform/shapespec.hpp"

namespace fs = std::filesystem;
using namespace swarmform;

namespace {

struct RunFlags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string spec;
    std::optional<long> max_ticks;
    std::string bid_order;
};

void add_run_flags(CLI::App* cmd, RunFlags& f) {
    cmd->add_option("--config", f.config, "config file")->required();
    cmd->add_option("--seed", f.seed, "override the config seed");
    cmd->add_option("--spec", f.spec, "override the structure with a spec file");
    cmd->add_option("--max-ticks", f.max_ticks, "override the tick cutoff");
    cmd->add_option("--bid-order", f.bid_order, "highest | lowest")->check(CLI::IsMember({"highest", "lowest"}));
}

SimConfig load_with_overrides(const RunFlags& f) {
    SimConfig c = load_config(f.config);
    if (f.seed) c.seed = *f.seed;
    if (f.max_ticks) c.max_ticks = *f.max_ticks;
    if (!f.bid_order.empty()) c.bid_order = parse_bid_order(f.bid_order);
    if (!f.spec.empty()) {
        c.spec = load_spec(f.spec);
        c.spec_path = fs::absolute(f.spec).lexically_normal().string();
        c.recipe.reset();
    }
    check_config(c);
    return c;
}

template <class Fn>
void write_file(const fs::path& path, Fn&& fn) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    fn(out);
}

int run_and_write(const SimConfig& config, const std::string& out_dir) {
    const auto trace = run_trial(config);
    if (!out_dir.empty()) {
        const fs::path dir(out_dir);
        fs::create_directories(dir);
        write_file(dir / "trace.tsv", [&](std::ostream& os) { write_trace(os, trace); });
        write_file(dir / "ticks.tsv", [&](std::ostream& os) { write_tick_records(os, trace); });
        write_file(dir / "events.tsv", [&](std::ostream& os) { write_events(os, trace); });
        write_file(dir / "summary.txt", [&](std::ostream& os) { write_summary(os, trace.summary); });
        write_file(dir / "effective.ini", [&](std::ostream& os) { write_config(os, config); });
    }
    write_summary(std::cout, trace.summary);
    return trace.summary.completed ? 0 : 2;
}

std::vector<FailureEvent> read_schedule(const std::string& arg) {
    if (fs::is_regular_file(arg)) return load_failure_schedule(arg);
    std::string text = arg;
    std::replace(text.begin(), text.end(), ';', '\n');
    std::istringstream is(text);
    return parse_failure_schedule(is, "--schedule");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Distributed multi-agent 3D structure formation simulator"};
    app.require_subcommand(1);

    auto* gen = app.add_subcommand("generate", "write a generated structure spec");
    std::string shape, base = "ring", gen_out;
    int nodes = 30, sides = 5, per_side = 7, levels = 1;
    double spacing = 30.0;
    std::optional<double> level_spacing;
    gen->add_option("shape", shape, "ring | polygon | prism")->required()->check(
        CLI::IsMember({"ring", "polygon", "prism"}));
    gen->add_option("--base", base, "prism base: ring | polygon | pentagon");
    gen->add_option("--nodes", nodes, "ring node count");
    gen->add_option("--sides", sides, "polygon sides");
    gen->add_option("--per-side", per_side, "polygon nodes per side, corners included");
    gen->add_option("--levels", levels, "prism levels");
    gen->add_option("--spacing", spacing, "node spacing");
    gen->add_option("--level-spacing", level_spacing, "prism level spacing (defaults to --spacing)");
    gen->add_option("--out", gen_out, "output path (stdout if omitted)");

    auto* val = app.add_subcommand("validate", "check a structure spec");
    std::string val_spec;
    val->add_option("--spec", val_spec, "spec file")->required();

    auto* run = app.add_subcommand("run", "run one trial");
    RunFlags run_flags;
    add_run_flags(run, run_flags);
    run->add_option("--out", run_flags.out, "output directory for trace, events, summary");

    auto* sw = app.add_subcommand("sweep", "completion ticks over a range of agent counts");
    RunFlags sweep_flags;
    std::vector<int> n_values;
    int trials = 5;
    add_run_flags(sw, sweep_flags);
    sw->add_option("--n", n_values, "agent counts")->required()->delimiter(',');
    sw->add_option("--trials", trials, "trials per agent count");
    sw->add_option("--out", sweep_flags.out, "table path (stdout if omitted)");

    auto* inj = app.add_subcommand("inject", "run one trial with failures");
    RunFlags inject_flags;
    std::string schedule;
    add_run_flags(inj, inject_flags);
    inj->add_option("--schedule", schedule,
                    "schedule file, or events like '400 cluster 3; 500 ids 4 7'")->required();
    inj->add_option("--out", inject_flags.out, "output directory for trace, events, summary");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) {
            const std::string b = base == "pentagon" ? "polygon" : base;
            StructureSpec spec;
            if (shape == "ring" || (shape == "prism" && b == "ring")) spec = generate_ring(nodes, spacing);
            else if (shape == "polygon" || b == "polygon") spec = generate_polygon(sides, per_side, spacing);
            else throw SpecError("unknown prism base '" + base + "'");
            if (shape != "prism" && gen->count("--levels")) throw SpecError("--levels only applies to prism");
            if (shape == "polygon" || b == "polygon") {
                for (const auto& a : polygon_advisories(sides)) std::cerr << "advisory: " << a << "\n";
            }
            if (shape == "prism") spec = extrude_prism(spec, levels, level_spacing.value_or(spacing));
            if (gen_out.empty()) {
                write_spec(std::cout, spec);
            } else {
                save_spec(gen_out, spec);
            }
            return 0;
        }
        if (*val) {
            const auto report = validate_spec(load_spec(val_spec));
            if (report.ok()) {
                std::cout << "ok\n";
                return 0;
            }
            for (const auto& v : report.violations) std::cout << v << "\n";
            return 1;
        }
        if (*run) return run_and_write(load_with_overrides(run_flags), run_flags.out);
        if (*inj) {
            SimConfig c = load_with_overrides(inject_flags);
            for (auto& e : read_schedule(schedule)) {
                if (e.tick >= c.effective_max_ticks()) {
                    throw ConfigError("--schedule: failure tick " + std::to_string(e.tick) + " is not below max_ticks");
                }
                c.failure_schedule.push_back(std::move(e));
            }
            check_config(c);
            return run_and_write(c, inject_flags.out);
        }
        if (*sw) {
            if (trials < 1) throw ConfigError("--trials must be at least 1");
            const auto rows = sweep(load_with_overrides(sweep_flags), n_values, trials);
            if (sweep_flags.out.empty()) {
                write_sweep(std::cout, rows);
            } else {
                write_file(sweep_flags.out, [&](std::ostream& os) { write_sweep(os, rows); });
            }
            return 0;
        }
    } catch (const InvariantViolation& e) {
        std::cerr << "invariant violation: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
