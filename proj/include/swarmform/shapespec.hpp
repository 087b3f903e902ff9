#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "swarmform/vec3.hpp"

namespace swarmform {

using NodeIndex = int;

/// Relative polar link from one structure node to a neighbor, expressed in
/// the source node's frame: length, elevation above the frame's horizontal
/// plane, and azimuth measured from the frame's forward axis toward its left.
struct NodeLink {
    double r = 0.0;
    double theta = 0.0;
    double psi = 0.0;

    bool operator==(const NodeLink&) const = default;
};

class SpecError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Sparse structure matrix: entry (m, n) is the link from node m to node n.
/// Construction only checks that indices are in range; the structural
/// invariants (connectivity, no self links, angle ranges) are reported by
/// validate_spec so that broken specs can still be inspected.
class StructureSpec {
  public:
    using LinkKey = std::pair<NodeIndex, NodeIndex>;
    using LinkMap = std::map<LinkKey, NodeLink>;

    /// Single root node, no links.
    StructureSpec() : StructureSpec(1, 0, {}) {}
    StructureSpec(int node_count, NodeIndex root, LinkMap links);

    int node_count() const { return node_count_; }
    NodeIndex root() const { return root_; }
    const LinkMap& links() const { return links_; }

    std::optional<NodeLink> link(NodeIndex from, NodeIndex to) const;
    /// Linked in either direction.
    bool adjacent(NodeIndex a, NodeIndex b) const;
    /// Column indices with a non-zero entry in row k, ascending.
    const std::vector<NodeIndex>& row(NodeIndex k) const { return rows_.at(static_cast<size_t>(k)); }
    /// Undirected neighbors of k, ascending.
    const std::vector<NodeIndex>& neighbors(NodeIndex k) const {
        return undirected_.at(static_cast<size_t>(k));
    }

    bool operator==(const StructureSpec& o) const {
        return node_count_ == o.node_count_ && root_ == o.root_ && links_ == o.links_;
    }

  private:
    int node_count_;
    NodeIndex root_;
    LinkMap links_;
    std::vector<std::vector<NodeIndex>> rows_;
    std::vector<std::vector<NodeIndex>> undirected_;
};

struct ValidationReport {
    std::vector<std::string> violations;
    bool ok() const { return violations.empty(); }
};

ValidationReport validate_spec(const StructureSpec& spec);

/// Orthonormal node frame. The root uses the global axes; every other node
/// points forward along the link from its parent.
struct Frame {
    Vec3 forward{1, 0, 0};
    Vec3 up{0, 0, 1};
    Vec3 left{0, 1, 0};

    static Frame global() { return {}; }
    /// Frame of a node reached from `from`: forward = unit(to - from), up =
    /// global +z Gram-Schmidt'd against forward (+x when forward is vertical).
    static Frame along(const Vec3& from, const Vec3& to);

    Vec3 direction(double theta, double psi) const;
};

/// Link expressed in `frame` that carries `from` to `to`.
NodeLink link_between(const Frame& frame, const Vec3& from, const Vec3& to);

/// Position of `node` reached over link (parent, node), plus the node's frame.
std::pair<Vec3, Frame> resolve_node_position(const StructureSpec& spec, NodeIndex parent,
                                             NodeIndex node, const Vec3& parent_position,
                                             const Frame& parent_frame);

struct ResolvedStructure {
    std::vector<Vec3> positions;
    std::vector<NodeIndex> parent_of;  // root maps to itself

    /// resolved[to] - resolved[from].
    Vec3 offset(NodeIndex from, NodeIndex to) const {
        return positions.at(static_cast<size_t>(to)) - positions.at(static_cast<size_t>(from));
    }
};

/// Walks link directions breadth-first from the root (root at the origin,
/// global frame). Throws SpecError if some node cannot be reached.
ResolvedStructure resolve(const StructureSpec& spec);

StructureSpec generate_ring(int node_count, double spacing);
StructureSpec generate_polygon(int sides, int nodes_per_side, double spacing);
std::vector<std::string> polygon_advisories(int sides);
StructureSpec extrude_prism(const StructureSpec& base, int levels, double level_spacing);

/// Text form: "nodes N", "root R", then one "link m n r theta psi" per entry.
void write_spec(std::ostream& os, const StructureSpec& spec);
std::string format_spec(const StructureSpec& spec);
StructureSpec parse_spec(std::istream& is);
StructureSpec load_spec(const std::string& path);
void save_spec(const std::string& path, const StructureSpec& spec);

}  // namespace swarmform
