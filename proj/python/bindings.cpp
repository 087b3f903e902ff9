#include <pybind11/pybind11.h>
#include <pybind11/operators.h>
#include <pybind11/stl.h>

#include <optional>
#include <sstream>
#include <tuple>

#include "swarmform/config_io.hpp"
#include "swarmform/engine.hpp"
#include "swarmform/gradient.hpp"
#include "swarmform/motion.hpp"
#include "swarmform/report.hpp"

namespace py = pybind11;
using namespace swarmform;

namespace {

using Point = std::tuple<double, double, double>;

Point as_point(const Vec3& v) { return {v.x, v.y, v.z}; }
Vec3 as_vec(const Point& p) { return {std::get<0>(p), std::get<1>(p), std::get<2>(p)}; }

std::vector<Vec3> as_vecs(const std::vector<Point>& pts) {
    std::vector<Vec3> out;
    out.reserve(pts.size());
    for (const auto& p : pts) out.push_back(as_vec(p));
    return out;
}

std::optional<int> as_optional(GradientValue g) {
    return g.is_set() ? std::optional<int>(g.value()) : std::nullopt;
}

GradientValue as_gradient(const std::optional<int>& v) { return v ? GradientValue::of(*v) : GradientValue::unset(); }

template <class F>
std::string to_text(F&& write) {
    std::ostringstream os;
    write(os);
    return os.str();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Discrete-time simulator of distributed multi-agent structure formation";

    py::register_exception<SpecError>(m, "SpecError", PyExc_ValueError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<InvariantViolation>(m, "InvariantViolation", PyExc_RuntimeError);

    // Structures.
    py::class_<StructureSpec>(m, "StructureSpec")
        .def_property_readonly("node_count", &StructureSpec::node_count)
        .def_property_readonly("root", &StructureSpec::root)
        .def("neighbors", &StructureSpec::neighbors, py::arg("node"))
        .def("adjacent", &StructureSpec::adjacent)
        .def("links", [](const StructureSpec& s) {
            std::vector<std::tuple<int, int, double, double, double>> out;
            for (const auto& [key, l] : s.links()) out.emplace_back(key.first, key.second, l.r, l.theta, l.psi);
            return out;
        })
        .def("violations", [](const StructureSpec& s) { return validate_spec(s).violations; })
        .def("positions", [](const StructureSpec& s) {
            std::vector<Point> out;
            for (const auto& p : resolve(s).positions) out.push_back(as_point(p));
            return out;
        })
        .def("to_text", [](const StructureSpec& s) { return format_spec(s); })
        .def_static("from_text", [](const std::string& text) {
            std::istringstream is(text);
            return parse_spec(is);
        })
        .def(py::self == py::self)
        .def("__repr__", [](const StructureSpec& s) {
            return "<StructureSpec nodes=" + std::to_string(s.node_count()) +
                   " links=" + std::to_string(s.links().size()) + ">";
        });

    m.def("generate_ring", &generate_ring, py::arg("nodes"), py::arg("spacing") = 30.0);
    m.def("generate_polygon", &generate_polygon, py::arg("sides"), py::arg("per_side"), py::arg("spacing") = 30.0);
    m.def("extrude_prism", &extrude_prism, py::arg("base"), py::arg("levels"), py::arg("level_spacing") = 30.0);
    m.def("polygon_advisories", &polygon_advisories, py::arg("sides"));
    m.def("load_spec", &load_spec, py::arg("path"));

    // Gradient and forces.
    m.def(
        "gradient_step",
        [](std::optional<int> prev, bool is_beacon, const std::vector<std::optional<int>>& values,
           const std::vector<double>& distances, double d0, int cap) {
            std::vector<GradientValue> vals;
            for (const auto& v : values) vals.push_back(as_gradient(v));
            return as_optional(gradient_step(as_gradient(prev), is_beacon, vals, distances, d0, cap));
        },
        py::arg("prev"), py::arg("is_beacon"), py::arg("values"), py::arg("distances"), py::arg("d0"),
        py::arg("cap"));
    m.def(
        "iterate_gradient",
        [](const std::vector<Point>& positions, const std::vector<int>& beacons, double d0, int max_rounds) {
            const auto pts = as_vecs(positions);
            const auto it = iterate_gradient(pts, beacons, d0, std::vector<GradientValue>(pts.size()), max_rounds);
            std::vector<std::optional<int>> values;
            for (const auto& v : it.values) values.push_back(as_optional(v));
            return py::make_tuple(values, it.rounds, it.converged);
        },
        py::arg("positions"), py::arg("beacons"), py::arg("d0"), py::arg("max_rounds"),
        "Returns (values, rounds, converged); unset values are None.");
    m.def("pair_force", &pair_force, py::arg("r"), py::arg("d0"), py::arg("d1"), py::arg("alpha"));
    m.def(
        "node_attraction_force",
        [](const Point& agent, const Point& node, double beta, int eta) {
            return as_point(node_attraction_force(as_vec(agent), as_vec(node), beta, eta));
        },
        py::arg("agent"), py::arg("node"), py::arg("beta"), py::arg("eta"));
    m.def(
        "resolve_bids",
        [](const std::vector<std::pair<int, double>>& bids, const std::string& order) {
            std::vector<Bid> in;
            for (const auto& [id, value] : bids) in.push_back({id, 0, value});
            const auto out = resolve_bids(in, parse_bid_order(order));
            return py::make_tuple(out.winner, out.losers);
        },
        py::arg("bids"), py::arg("order") = "highest", "bids: [(agent_id, value)]; returns (winner, losers).");

    // Configs and runs.
    py::class_<SimConfig>(m, "SimConfig")
        .def(py::init(&default_config))
        .def_static("load", &load_config, py::arg("path"))
        .def_static("from_text", [](const std::string& text, const std::string& base_dir) {
            std::istringstream is(text);
            return parse_config(is, base_dir, "<text>");
        }, py::arg("text"), py::arg("base_dir") = ".")
        .def("to_text", [](const SimConfig& c) { return format_config(c); })
        .def_property(
            "spec", [](const SimConfig& c) { return c.spec; },
            [](SimConfig& c, const StructureSpec& s) {
                c.spec = s;
                c.recipe.reset();
                c.spec_path.clear();
            })
        .def_readwrite("agent_count", &SimConfig::agent_count)
        .def_readwrite("seed", &SimConfig::seed)
        .def_readwrite("max_ticks", &SimConfig::max_ticks)
        .def_readwrite("trace_every", &SimConfig::trace_every)
        .def_property(
            "bid_order", [](const SimConfig& c) { return to_string(c.bid_order); },
            [](SimConfig& c, const std::string& s) { c.bid_order = parse_bid_order(s); })
        .def_property(
            "failures",
            [](const SimConfig& c) {
                std::vector<std::string> out;
                for (const auto& e : c.failure_schedule) out.push_back(format_failure_event(e));
                return out;
            },
            [](SimConfig& c, const std::vector<std::string>& events) {
                c.failure_schedule.clear();
                for (const auto& e : events) c.failure_schedule.push_back(parse_failure_event(e));
            })
        .def("for_agents", &config_for_agents, py::arg("agent_count"))
        .def("effective_max_ticks", &SimConfig::effective_max_ticks);

    py::class_<RunSummary>(m, "RunSummary")
        .def_readonly("completed", &RunSummary::completed)
        .def_readonly("completion_tick", &RunSummary::completion_tick)
        .def_readonly("ticks", &RunSummary::ticks)
        .def_readonly("nodes", &RunSummary::nodes)
        .def_readonly("agents", &RunSummary::agents)
        .def_readonly("settled", &RunSummary::settled)
        .def_readonly("seed", &RunSummary::seed)
        .def_readonly("max_gradient", &RunSummary::max_gradient)
        .def_readonly("completion_gradient_max", &RunSummary::completion_gradient_max)
        .def_readonly("completion_oracle_max", &RunSummary::completion_oracle_max)
        .def_readonly("completion_gradient_matches_oracle", &RunSummary::completion_gradient_matches_oracle)
        .def_readonly("escape_events", &RunSummary::escape_events)
        .def_readonly("parent_losses", &RunSummary::parent_losses)
        .def_readonly("lost_bids", &RunSummary::lost_bids)
        .def_readonly("warnings", &RunSummary::warnings)
        .def_readonly("dead_nodes", &RunSummary::dead_nodes)
        .def_readonly("unfilled_nodes", &RunSummary::unfilled_nodes)
        .def("to_text", [](const RunSummary& s) { return to_text([&](std::ostream& os) { write_summary(os, s); }); });

    py::class_<Trace>(m, "Trace")
        .def_readonly("summary", &Trace::summary)
        .def("settled_counts", [](const Trace& t) {
            std::vector<int> out;
            for (const auto& r : t.ticks) out.push_back(r.settled);
            return out;
        })
        .def("events", [](const Trace& t) {
            std::vector<std::tuple<long, int, std::string, std::string>> out;
            for (const auto& e : t.events) out.emplace_back(e.tick, e.agent, e.kind, e.detail);
            return out;
        })
        .def("agent_path", [](const Trace& t, AgentId id) {
            std::vector<Point> out;
            for (const auto& p : agent_path(t, id)) out.push_back(as_point(p));
            return out;
        }, py::arg("agent_id"))
        .def("trace_text", [](const Trace& t) { return to_text([&](std::ostream& os) { write_trace(os, t); }); })
        .def("events_text", [](const Trace& t) { return to_text([&](std::ostream& os) { write_events(os, t); }); });

    m.def("run_trial", &run_trial, py::arg("config"), py::call_guard<py::gil_scoped_release>());

    py::class_<SweepRow>(m, "SweepRow")
        .def_readonly("n", &SweepRow::n)
        .def_readonly("mean_ticks", &SweepRow::mean_ticks)
        .def_readonly("stddev_ticks", &SweepRow::stddev_ticks)
        .def_readonly("completed", &SweepRow::completed)
        .def_readonly("trials", &SweepRow::trials)
        .def_readonly("ticks", &SweepRow::ticks);

    m.def(
        "sweep",
        [](const SimConfig& base, const std::vector<int>& n_values, int trials, int threads) {
            return sweep(base, n_values, trials, threads);
        },
        py::arg("config"), py::arg("n_values"), py::arg("trials") = 5, py::arg("threads") = 0,
        py::call_guard<py::gil_scoped_release>());
    m.def(
        "spearman", [](const std::vector<double>& x, const std::vector<double>& y) { return spearman(x, y); },
        py::arg("x"), py::arg("y"));
}
