#include "swarmform/shapespec.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <queue>
#include <sstream>

namespace swarmform {

namespace {

constexpr double kPi = std::numbers::pi;

// Breadth-first tree over link directions, rows visited in ascending order.
// Unreached nodes keep parent -1.
std::vector<NodeIndex> directed_bfs_parents(const StructureSpec& spec) {
    std::vector<NodeIndex> parent(static_cast<size_t>(spec.node_count()), -1);
    parent[static_cast<size_t>(spec.root())] = spec.root();
    std::queue<NodeIndex> queue;
    queue.push(spec.root());
    while (!queue.empty()) {
        const NodeIndex k = queue.front();
        queue.pop();
        for (NodeIndex e : spec.row(k)) {
            if (parent[static_cast<size_t>(e)] == -1) {
                parent[static_cast<size_t>(e)] = k;
                queue.push(e);
            }
        }
    }
    return parent;
}

std::vector<NodeIndex> bfs_order(const std::vector<NodeIndex>& parent, NodeIndex root,
                                 const StructureSpec& spec) {
    std::vector<NodeIndex> order{root};
    for (size_t i = 0; i < order.size(); ++i) {
        for (NodeIndex e : spec.row(order[i])) {
            if (parent[static_cast<size_t>(e)] == order[i] && e != root) {
                order.push_back(e);
            }
        }
    }
    return order;
}

struct DirectedEdge {
    NodeIndex from;
    NodeIndex to;
};

// Builds a spec whose links realise `points` exactly (root translated to the
// origin). Frames follow the same BFS tree that resolve() will walk.
StructureSpec spec_from_points(const std::vector<Vec3>& points, NodeIndex root,
                               const std::vector<DirectedEdge>& edges) {
    StructureSpec::LinkMap placeholder;
    for (const auto& e : edges) placeholder[{e.from, e.to}] = NodeLink{1.0, 0.0, 0.0};
    const StructureSpec shape(static_cast<int>(points.size()), root, placeholder);

    const auto parent = directed_bfs_parents(shape);
    std::vector<Frame> frames(points.size());
    for (NodeIndex n : bfs_order(parent, root, shape)) {
        const auto idx = static_cast<size_t>(n);
        frames[idx] = n == root ? Frame::global()
                                : Frame::along(points[static_cast<size_t>(parent[idx])], points[idx]);
    }

    StructureSpec::LinkMap links;
    for (const auto& e : edges) {
        const auto from = static_cast<size_t>(e.from);
        links[{e.from, e.to}] =
            link_between(frames[from], points[from], points[static_cast<size_t>(e.to)]);
    }
    return StructureSpec(static_cast<int>(points.size()), root, std::move(links));
}

// Consecutive nodes around a closed loop, linked both ways: a beacon may
// settle either neighbor depending on which side the structure grew from.
std::vector<DirectedEdge> loop_edges(int count) {
    std::vector<DirectedEdge> edges;
    for (int j = 0; j < count; ++j) {
        const int next = (j + 1) % count;
        edges.push_back({j, next});
        edges.push_back({next, j});
    }
    return edges;
}

}  // namespace

StructureSpec::StructureSpec(int node_count, NodeIndex root, LinkMap links)
    : node_count_(node_count), root_(root), links_(std::move(links)) {
    if (node_count_ < 1) throw SpecError("structure needs at least one node");
    if (root_ < 0 || root_ >= node_count_) {
        throw SpecError("root " + std::to_string(root_) + " out of range");
    }
    rows_.resize(static_cast<size_t>(node_count_));
    undirected_.resize(static_cast<size_t>(node_count_));
    for (const auto& [key, link] : links_) {
        const auto [m, n] = key;
        if (m < 0 || m >= node_count_ || n < 0 || n >= node_count_) {
            throw SpecError("link (" + std::to_string(m) + ", " + std::to_string(n) +
                            ") references a node out of range");
        }
        rows_[static_cast<size_t>(m)].push_back(n);
        if (m != n) {
            undirected_[static_cast<size_t>(m)].push_back(n);
            undirected_[static_cast<size_t>(n)].push_back(m);
        }
    }
    for (auto& nbrs : undirected_) {
        std::sort(nbrs.begin(), nbrs.end());
        nbrs.erase(std::unique(nbrs.begin(), nbrs.end()), nbrs.end());
    }
}

std::optional<NodeLink> StructureSpec::link(NodeIndex from, NodeIndex to) const {
    const auto it = links_.find({from, to});
    if (it == links_.end()) return std::nullopt;
    return it->second;
}

bool StructureSpec::adjacent(NodeIndex a, NodeIndex b) const {
    return links_.count({a, b}) > 0 || links_.count({b, a}) > 0;
}

ValidationReport validate_spec(const StructureSpec& spec) {
    ValidationReport report;
    auto& out = report.violations;

    for (const auto& [key, link] : spec.links()) {
        const auto [m, n] = key;
        const std::string where = "link (" + std::to_string(m) + ", " + std::to_string(n) + ")";
        if (m == n) out.push_back("self-link at node " + std::to_string(m));
        if (!(link.r > 0.0)) out.push_back(where + ": length must be positive");
        if (!(link.theta >= -kPi / 2 && link.theta <= kPi / 2)) {
            out.push_back(where + ": elevation outside [-pi/2, pi/2]");
        }
        if (!(link.psi > -kPi && link.psi <= kPi)) {
            out.push_back(where + ": azimuth outside (-pi, pi]");
        }
    }

    const auto n = static_cast<size_t>(spec.node_count());
    std::vector<int> component(n, -1);
    int components = 0;
    auto flood = [&](NodeIndex start) {
        std::vector<NodeIndex> stack{start};
        component[static_cast<size_t>(start)] = components;
        while (!stack.empty()) {
            const NodeIndex k = stack.back();
            stack.pop_back();
            for (NodeIndex e : spec.neighbors(k)) {
                if (component[static_cast<size_t>(e)] == -1) {
                    component[static_cast<size_t>(e)] = components;
                    stack.push_back(e);
                }
            }
        }
        ++components;
    };
    flood(spec.root());
    for (NodeIndex k = 0; k < spec.node_count(); ++k) {
        if (component[static_cast<size_t>(k)] == -1) flood(k);
    }
    for (int c = 1; c < components; ++c) {
        std::string members;
        for (NodeIndex k = 0; k < spec.node_count(); ++k) {
            if (component[static_cast<size_t>(k)] == c) members += " " + std::to_string(k);
        }
        out.push_back("disconnected component:" + members);
    }
    for (NodeIndex k = 0; k < spec.node_count(); ++k) {
        if (component[static_cast<size_t>(k)] != 0) out.push_back("node " + std::to_string(k) + " unreachable");
    }

    const auto parent = directed_bfs_parents(spec);
    for (NodeIndex k = 0; k < spec.node_count(); ++k) {
        if (component[static_cast<size_t>(k)] == 0 && parent[static_cast<size_t>(k)] == -1) {
            out.push_back("node " + std::to_string(k) + " not reachable from root along link directions");
        }
    }
    return report;
}

Frame Frame::along(const Vec3& from, const Vec3& to) {
    Frame f;
    f.forward = (to - from).normalized();
    Vec3 seed{0, 0, 1};
    if (std::abs(f.forward.dot(seed)) > 1.0 - 1e-9) seed = Vec3{1, 0, 0};
    f.up = (seed - f.forward * seed.dot(f.forward)).normalized();
    f.left = f.up.cross(f.forward);
    return f;
}

Vec3 Frame::direction(double theta, double psi) const {
    const double c = std::cos(theta);
    return forward * (c * std::cos(psi)) + left * (c * std::sin(psi)) + up * std::sin(theta);
}

NodeLink link_between(const Frame& frame, const Vec3& from, const Vec3& to) {
    const Vec3 d = to - from;
    NodeLink link;
    link.r = d.norm();
    const Vec3 u = d / link.r;
    link.theta = std::asin(std::clamp(u.dot(frame.up), -1.0, 1.0));
    link.psi = std::atan2(u.dot(frame.left), u.dot(frame.forward));
    if (link.psi <= -kPi) link.psi = kPi;
    return link;
}

std::pair<Vec3, Frame> resolve_node_position(const StructureSpec& spec, NodeIndex parent,
                                             NodeIndex node, const Vec3& parent_position,
                                             const Frame& parent_frame) {
    const auto link = spec.link(parent, node);
    if (!link) {
        throw SpecError("no such link (" + std::to_string(parent) + ", " + std::to_string(node) + ")");
    }
    const Vec3 position = parent_position + parent_frame.direction(link->theta, link->psi) * link->r;
    return {position, Frame::along(parent_position, position)};
}

ResolvedStructure resolve(const StructureSpec& spec) {
    const auto parent = directed_bfs_parents(spec);
    for (NodeIndex k = 0; k < spec.node_count(); ++k) {
        if (parent[static_cast<size_t>(k)] == -1) {
            throw SpecError("node " + std::to_string(k) + " not reachable from root");
        }
    }
    ResolvedStructure out;
    out.positions.assign(static_cast<size_t>(spec.node_count()), Vec3{});
    out.parent_of = parent;
    std::vector<Frame> frames(static_cast<size_t>(spec.node_count()));
    for (NodeIndex k : bfs_order(parent, spec.root(), spec)) {
        if (k == spec.root()) continue;
        const auto p = static_cast<size_t>(parent[static_cast<size_t>(k)]);
        auto [pos, frame] = resolve_node_position(spec, static_cast<NodeIndex>(p), k,
                                                  out.positions[p], frames[p]);
        out.positions[static_cast<size_t>(k)] = pos;
        frames[static_cast<size_t>(k)] = frame;
    }
    return out;
}

StructureSpec generate_ring(int node_count, double spacing) {
    if (node_count < 3) throw SpecError("ring needs at least 3 nodes");
    if (!(spacing > 0.0)) throw SpecError("ring spacing must be positive");
    const double radius = spacing / (2.0 * std::sin(kPi / node_count));
    std::vector<Vec3> points;
    for (int j = 0; j < node_count; ++j) {
        const double a = 2.0 * kPi * j / node_count;
        points.push_back({radius * std::sin(a), radius * (1.0 - std::cos(a)), 0.0});
    }
    return spec_from_points(points, 0, loop_edges(node_count));
}

StructureSpec generate_polygon(int sides, int nodes_per_side, double spacing) {
    if (sides < 3) throw SpecError("polygon needs at least 3 sides");
    if (nodes_per_side < 2) throw SpecError("polygon needs at least 2 nodes per side");
    if (!(spacing > 0.0)) throw SpecError("polygon spacing must be positive");
    const int segments = nodes_per_side - 1;
    std::vector<Vec3> points;
    Vec3 at{};
    for (int s = 0; s < sides; ++s) {
        const double heading = 2.0 * kPi * s / sides;
        const Vec3 step{spacing * std::cos(heading), spacing * std::sin(heading), 0.0};
        for (int j = 0; j < segments; ++j) {
            points.push_back(at);
            at += step;
        }
    }
    return spec_from_points(points, 0, loop_edges(static_cast<int>(points.size())));
}

std::vector<std::string> polygon_advisories(int sides) {
    std::vector<std::string> out;
    if (sides < 5) {
        char buf[160];
        std::snprintf(buf, sizeof buf,
                      "exterior angle %.4f rad may exceed traversal limit (fewer than five sides)",
                      2.0 * kPi / sides);
        out.emplace_back(buf);
    }
    return out;
}

StructureSpec extrude_prism(const StructureSpec& base, int levels, double level_spacing) {
    if (levels < 1) throw SpecError("prism needs at least one level");
    if (!(level_spacing > 0.0)) throw SpecError("level spacing must be positive");
    if (base.node_count() < 3 || !validate_spec(base).ok()) {
        throw SpecError("prism base must be a valid closed loop");
    }
    for (NodeIndex k = 0; k < base.node_count(); ++k) {
        if (base.neighbors(k).size() != 2) throw SpecError("prism base is not a closed loop");
    }
    if (levels == 1) return base;

    const auto resolved = resolve(base);
    const auto& pts = resolved.positions;
    Vec3 normal;
    for (size_t i = 1; i + 1 < pts.size() && normal.norm() < 1e-9; ++i) {
        normal = (pts[i] - pts[0]).cross(pts[i + 1] - pts[0]);
    }
    normal = normal.normalized();
    if (normal.z < 0 || (normal.z == 0 && normal.x + normal.y < 0)) normal = -normal;
    for (const auto& p : pts) {
        if (std::abs((p - pts[0]).dot(normal)) > 1e-6) throw SpecError("prism base is not planar");
    }

    const int m = base.node_count();
    std::vector<Vec3> points;
    std::vector<DirectedEdge> edges;
    for (int level = 0; level < levels; ++level) {
        for (const auto& p : pts) points.push_back(p + normal * (level_spacing * level));
        for (const auto& [key, link] : base.links()) {
            edges.push_back({key.first + level * m, key.second + level * m});
        }
        if (level > 0) {
            for (int j = 0; j < m; ++j) {
                edges.push_back({(level - 1) * m + j, level * m + j});
                edges.push_back({level * m + j, (level - 1) * m + j});
            }
        }
    }
    return spec_from_points(points, base.root(), edges);
}

void write_spec(std::ostream& os, const StructureSpec& spec) {
    char buf[128];
    os << "nodes " << spec.node_count() << '\n' << "root " << spec.root() << '\n';
    for (const auto& [key, link] : spec.links()) {
        std::snprintf(buf, sizeof buf, "link %d %d %.17g %.17g %.17g\n", key.first, key.second,
                      link.r, link.theta, link.psi);
        os << buf;
    }
}

std::string format_spec(const StructureSpec& spec) {
    std::ostringstream os;
    write_spec(os, spec);
    return os.str();
}

StructureSpec parse_spec(std::istream& is) {
    std::optional<int> nodes;
    std::optional<int> root;
    StructureSpec::LinkMap links;
    std::string line;
    int line_no = 0;
    auto fail = [&](const std::string& what) {
        throw SpecError("line " + std::to_string(line_no) + ": " + what);
    };
    while (std::getline(is, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string word;
        if (!(ls >> word)) continue;
        if (word == "nodes") {
            int v = 0;
            if (!(ls >> v) || v < 1) fail("expected positive node count");
            nodes = v;
        } else if (word == "root") {
            int v = 0;
            if (!(ls >> v)) fail("expected root index");
            root = v;
        } else if (word == "link") {
            int m = 0, n = 0;
            NodeLink link;
            if (!(ls >> m >> n >> link.r >> link.theta >> link.psi)) {
                fail("expected: link m n r theta psi");
            }
            if (!links.emplace(StructureSpec::LinkKey{m, n}, link).second) {
                fail("duplicate link (" + std::to_string(m) + ", " + std::to_string(n) + ")");
            }
        } else {
            fail("unknown keyword '" + word + "'");
        }
        if (ls >> word) fail("trailing text '" + word + "'");
    }
    if (!nodes) throw SpecError("missing 'nodes' line");
    if (!root) throw SpecError("missing 'root' line");
    return StructureSpec(*nodes, *root, std::move(links));
}

StructureSpec load_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SpecError("cannot open spec file '" + path + "'");
    try {
        return parse_spec(in);
    } catch (const SpecError& e) {
        throw SpecError(path + ": " + e.what());
    }
}

void save_spec(const std::string& path, const StructureSpec& spec) {
    std::ofstream out(path);
    if (!out) throw SpecError("cannot write spec file '" + path + "'");
    write_spec(out, spec);
}

}  // namespace swarmform
