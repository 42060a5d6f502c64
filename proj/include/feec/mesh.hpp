#pragma once

#include <array>
#include <memory>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "feec/geometry.hpp"

namespace feec {

class invalid_mesh : public std::invalid_argument {
public:
    explicit invalid_mesh(const std::string& what) : std::invalid_argument(what) {}
};

/// Set of triangle indices into one mesh generation, kept sorted and unique.
using MarkedSet = std::vector<int>;

MarkedSet normalize_marked(MarkedSet marked);

enum class Domain { square, lshape, square_one_hole, square_two_holes };

Domain domain_from_name(const std::string& name);

/// Conforming 2-D triangulation with newest-vertex-bisection bookkeeping.
///
/// Conventions:
///  - triangle vertices are stored counterclockwise;
///  - local edge i of a triangle is the edge opposite local vertex i,
///    i.e. (v[(i+1)%3], v[(i+2)%3]);
///  - the refinement edge is stored as a local edge index;
///  - global edges are the sorted list of vertex pairs (lo, hi) and carry the
///    orientation lo -> hi; the global edge normal is rot90 of that tangent.
///
/// A Mesh is immutable after construction. bisect() returns a new Mesh and
/// records parent/child genealogy through persistent triangle uids shared via
/// an append-only ancestry table.
class Mesh {
public:
    /// Empty placeholder; real meshes come from build/builtin/load_json/bisect.
    Mesh() = default;

    struct Tri {
        std::array<int, 3> v;
        int refedge = 0;  // local index of the refinement edge
        int gen = 0;      // refinement depth
        long uid = -1;    // persistent id across refinements
    };

    /// Validates and builds a conforming mesh. Refinement edges default to the
    /// longest edge of each triangle (ties broken by the lowest global index of
    /// the opposite vertex). Pass refedges to override.
    static Mesh build(std::vector<Vec2> vertices,
                      std::vector<std::array<int, 3>> triangles,
                      const std::vector<int>* refedges = nullptr);

    static Mesh builtin(Domain d);

    static Mesh load_json(const std::string& path);
    void save_json(const std::string& path) const;

    // --- topology -----------------------------------------------------------
    int vertex_count() const { return static_cast<int>(verts_.size()); }
    int triangle_count() const { return static_cast<int>(tris_.size()); }
    int edge_count() const { return static_cast<int>(edges_.size()); }
    int boundary_edge_count() const;

    Vec2 vertex(int v) const { return verts_[v]; }
    const Tri& tri(int t) const { return tris_[t]; }
    std::array<int, 2> edge(int e) const { return edges_[e]; }
    bool edge_is_boundary(int e) const { return edge_boundary_[e] != 0; }
    /// Global edge ids of triangle t; entry i is the edge opposite vertex i.
    std::array<int, 3> tri_edges(int t) const { return tri_edges_[t]; }
    /// Orientation signs of triangle t relative to the global edge normals:
    /// +1 where the global normal points out of t, -1 where it points in.
    std::array<int, 3> tri_edge_signs(int t) const;
    /// Triangles adjacent to edge e; second entry is -1 on the boundary.
    std::array<int, 2> edge_tris(int e) const { return edge_tris_[e]; }

    // --- geometry ------------------------------------------------------------
    double area(int t) const;
    Vec2 centroid(int t) const;
    /// diam(T): for a triangle this is the longest edge length.
    double element_size(int t) const;
    double edge_length(int e) const;
    /// Unit tangent of edge e in the global lo -> hi orientation.
    Vec2 edge_tangent(int e) const;
    /// Unit normal of edge e (rot90 of the tangent).
    Vec2 edge_normal(int e) const;
    /// min over elements of inradius / diameter.
    double shape_regularity() const;

    // --- refinement ----------------------------------------------------------
    /// Bisects every marked triangle across its refinement edge and restores
    /// conformity by recursive neighbor bisection (classic recursive NVB).
    Mesh bisect(const MarkedSet& marked) const;

    // --- genealogy -----------------------------------------------------------
    long uid(int t) const { return tris_[t].uid; }
    /// Index of uid in this mesh, or -1 if the triangle is not present.
    int index_of_uid(long uid) const;
    /// Index in `coarse` of the ancestor (or self) of this mesh's triangle t,
    /// or -1 if the lineages never meet.
    int ancestor_in(const Mesh& coarse, int t) const;
    /// True if every triangle of this mesh descends from (or belongs to) coarse.
    bool refines(const Mesh& coarse) const;

    /// Identity tag used to detect coefficient-vector / mesh mismatches.
    long stamp() const { return stamp_; }

private:
    void rebuild_derived();

    std::vector<Vec2> verts_;
    std::vector<Tri> tris_;

    // derived connectivity
    std::vector<std::array<int, 2>> edges_;          // (lo, hi), lexicographic
    std::vector<char> edge_boundary_;
    std::vector<std::array<int, 3>> tri_edges_;
    std::vector<std::array<int, 2>> edge_tris_;

    std::shared_ptr<const std::vector<long>> parent_;  // uid -> parent uid (-1 at roots)
    std::unordered_map<long, int> uid_to_index_;
    long next_uid_ = 0;
    long stamp_ = 0;
    long lineage_ = 0;  // shared by every refinement of one root mesh
};

/// sweeps passes of "mark everything, bisect". Two sweeps halve the mesh size
/// h on compatibly tagged meshes.
Mesh uniform_refine(const Mesh& mesh, int sweeps);

}  // namespace feec
