#include "feec/mesh.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include <json.hpp>

namespace feec {

namespace {

std::atomic<long> g_mesh_stamp{1};

constexpr double kAreaTol = 1e-12;

uint64_t edge_key(int a, int b) {
    if (a > b) std::swap(a, b);
    return (static_cast<uint64_t>(a) << 32) | static_cast<uint64_t>(b);
}

}  // namespace

MarkedSet normalize_marked(MarkedSet marked) {
    std::sort(marked.begin(), marked.end());
    marked.erase(std::unique(marked.begin(), marked.end()), marked.end());
    return marked;
}

Domain domain_from_name(const std::string& name) {
    if (name == "square") return Domain::square;
    if (name == "lshape") return Domain::lshape;
    if (name == "square_one_hole") return Domain::square_one_hole;
    if (name == "square_two_holes") return Domain::square_two_holes;
    throw std::invalid_argument("unknown domain name: " + name);
}

Mesh Mesh::build(std::vector<Vec2> vertices,
                 std::vector<std::array<int, 3>> triangles,
                 const std::vector<int>* refedges) {
    if (vertices.size() < 3) throw invalid_mesh("mesh needs at least 3 vertices");
    if (triangles.empty()) throw invalid_mesh("mesh needs at least 1 triangle");
    if (refedges && refedges->size() != triangles.size())
        throw invalid_mesh("refinement_edge list length does not match triangle count");

    const int nv = static_cast<int>(vertices.size());
    std::set<std::array<int, 3>> seen;
    for (size_t t = 0; t < triangles.size(); ++t) {
        const auto& tri = triangles[t];
        for (int i = 0; i < 3; ++i) {
            if (tri[i] < 0 || tri[i] >= nv)
                throw invalid_mesh("triangle " + std::to_string(t) + " has vertex index out of range");
        }
        if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2])
            throw invalid_mesh("triangle " + std::to_string(t) + " repeats a vertex");
        const double a2 = signed_area(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
        if (a2 <= kAreaTol)
            throw invalid_mesh("triangle " + std::to_string(t) +
                               (a2 < -kAreaTol ? " is clockwise" : " is degenerate"));
        std::array<int, 3> canon = tri;
        std::sort(canon.begin(), canon.end());
        if (!seen.insert(canon).second)
            throw invalid_mesh("triangle " + std::to_string(t) + " duplicates an earlier triangle");
    }

    // Edge incidence: interior edges shared by exactly 2 triangles.
    std::map<uint64_t, int> count;
    for (const auto& tri : triangles)
        for (int i = 0; i < 3; ++i) count[edge_key(tri[(i + 1) % 3], tri[(i + 2) % 3])]++;
    for (size_t t = 0; t < triangles.size(); ++t)
        for (int i = 0; i < 3; ++i) {
            const auto& tri = triangles[t];
            if (count[edge_key(tri[(i + 1) % 3], tri[(i + 2) % 3])] > 2)
                throw invalid_mesh("edge of triangle " + std::to_string(t) +
                                   " is shared by more than two triangles");
        }

    // A vertex sitting strictly inside another triangle's edge is a hanging
    // node; edge counts alone cannot detect the T-junction.
    for (const auto& [key, c] : count) {
        (void)c;
        const int a = static_cast<int>(key >> 32);
        const int b = static_cast<int>(key & 0xffffffffu);
        const Vec2 pa = vertices[a], pb = vertices[b];
        const double len = norm(pb - pa);
        for (int v = 0; v < nv; ++v) {
            if (v == a || v == b) continue;
            const Vec2 p = vertices[v];
            const double along = dot(p - pa, pb - pa) / (len * len);
            if (along <= 1e-12 || along >= 1 - 1e-12) continue;
            const double off = std::abs(cross(pb - pa, p - pa)) / len;
            if (off < 1e-12 * len)
                throw invalid_mesh("vertex " + std::to_string(v) +
                                   " hangs on an edge (non-conforming input)");
        }
    }

    Mesh m;
    m.verts_ = std::move(vertices);
    m.tris_.resize(triangles.size());
    auto ancestry = std::make_shared<std::vector<long>>(triangles.size(), -1L);
    for (size_t t = 0; t < triangles.size(); ++t) {
        Tri& tri = m.tris_[t];
        tri.v = triangles[t];
        tri.gen = 0;
        tri.uid = static_cast<long>(t);
        if (refedges) {
            if ((*refedges)[t] < 0 || (*refedges)[t] > 2)
                throw invalid_mesh("refinement_edge of triangle " + std::to_string(t) +
                                   " is not a local index 0..2");
            tri.refedge = (*refedges)[t];
        } else {
            // Longest edge; ties go to the lowest global index of the opposite vertex.
            double best = -1.0;
            int arg = 0;
            for (int i = 0; i < 3; ++i) {
                const double len =
                    norm(m.verts_[tri.v[(i + 2) % 3]] - m.verts_[tri.v[(i + 1) % 3]]);
                if (len > best * (1 + 1e-12)) {
                    best = len;
                    arg = i;
                } else if (len > best * (1 - 1e-12) && tri.v[i] < tri.v[arg]) {
                    arg = i;
                }
            }
            tri.refedge = arg;
        }
    }
    m.parent_ = std::move(ancestry);
    m.next_uid_ = static_cast<long>(triangles.size());
    m.stamp_ = g_mesh_stamp.fetch_add(1);
    m.lineage_ = m.stamp_;
    m.rebuild_derived();
    return m;
}

void Mesh::rebuild_derived() {
    edges_.clear();
    edges_.reserve(tris_.size() * 2);
    std::map<std::array<int, 2>, int> ids;
    for (const auto& tri : tris_)
        for (int i = 0; i < 3; ++i) {
            int a = tri.v[(i + 1) % 3], b = tri.v[(i + 2) % 3];
            if (a > b) std::swap(a, b);
            ids.emplace(std::array<int, 2>{a, b}, 0);
        }
    int next = 0;
    for (auto& [e, id] : ids) {
        id = next++;
        edges_.push_back(e);
    }

    tri_edges_.resize(tris_.size());
    edge_tris_.assign(edges_.size(), {-1, -1});
    for (size_t t = 0; t < tris_.size(); ++t)
        for (int i = 0; i < 3; ++i) {
            int a = tris_[t].v[(i + 1) % 3], b = tris_[t].v[(i + 2) % 3];
            if (a > b) std::swap(a, b);
            const int e = ids.at({a, b});
            tri_edges_[t][i] = e;
            auto& at = edge_tris_[e];
            (at[0] == -1 ? at[0] : at[1]) = static_cast<int>(t);
        }

    edge_boundary_.resize(edges_.size());
    for (size_t e = 0; e < edges_.size(); ++e) edge_boundary_[e] = (edge_tris_[e][1] == -1) ? 1 : 0;

    uid_to_index_.clear();
    uid_to_index_.reserve(tris_.size());
    for (int t = 0; t < triangle_count(); ++t) uid_to_index_.emplace(tris_[t].uid, t);
}

int Mesh::boundary_edge_count() const {
    int n = 0;
    for (char b : edge_boundary_) n += b;
    return n;
}

std::array<int, 3> Mesh::tri_edge_signs(int t) const {
    // Local edge i is traversed v[i+1] -> v[i+2] along the CCW boundary. The
    // global normal (rot90 of lo -> hi) points out of the triangle exactly when
    // the traversal runs hi -> lo, so the sign is a pure index comparison.
    std::array<int, 3> s;
    for (int i = 0; i < 3; ++i)
        s[i] = (tris_[t].v[(i + 1) % 3] > tris_[t].v[(i + 2) % 3]) ? 1 : -1;
    return s;
}

double Mesh::area(int t) const {
    const auto& v = tris_[t].v;
    return signed_area(verts_[v[0]], verts_[v[1]], verts_[v[2]]);
}

Vec2 Mesh::centroid(int t) const {
    const auto& v = tris_[t].v;
    return (1.0 / 3.0) * (verts_[v[0]] + verts_[v[1]] + verts_[v[2]]);
}

double Mesh::element_size(int t) const {
    if (t < 0 || t >= triangle_count()) throw std::invalid_argument("element id out of range");
    const auto& v = tris_[t].v;
    double h = 0;
    for (int i = 0; i < 3; ++i)
        h = std::max(h, norm(verts_[v[(i + 2) % 3]] - verts_[v[(i + 1) % 3]]));
    return h;
}

double Mesh::edge_length(int e) const { return norm(verts_[edges_[e][1]] - verts_[edges_[e][0]]); }

Vec2 Mesh::edge_tangent(int e) const {
    const Vec2 d = verts_[edges_[e][1]] - verts_[edges_[e][0]];
    return (1.0 / norm(d)) * d;
}

Vec2 Mesh::edge_normal(int e) const { return rot90(edge_tangent(e)); }

double Mesh::shape_regularity() const {
    double worst = std::numeric_limits<double>::max();
    for (int t = 0; t < triangle_count(); ++t) {
        const auto& v = tris_[t].v;
        const double a = norm(verts_[v[1]] - verts_[v[2]]);
        const double b = norm(verts_[v[2]] - verts_[v[0]]);
        const double c = norm(verts_[v[0]] - verts_[v[1]]);
        const double inradius = 2.0 * area(t) / (a + b + c);
        worst = std::min(worst, inradius / element_size(t));
    }
    return worst;
}

int Mesh::index_of_uid(long uid) const {
    const auto it = uid_to_index_.find(uid);
    return it == uid_to_index_.end() ? -1 : it->second;
}

int Mesh::ancestor_in(const Mesh& coarse, int t) const {
    // uids are only comparable within one refinement lineage
    if (lineage_ != coarse.lineage_) return -1;
    long uid = tris_[t].uid;
    const auto& parent = *parent_;
    while (uid != -1) {
        const int idx = coarse.index_of_uid(uid);
        if (idx >= 0) return idx;
        uid = (uid < static_cast<long>(parent.size())) ? parent[uid] : -1;
    }
    return -1;
}

bool Mesh::refines(const Mesh& coarse) const {
    for (int t = 0; t < triangle_count(); ++t)
        if (ancestor_in(coarse, t) < 0) return false;
    return true;
}

namespace {

/// Working state of one bisect() call.
struct Refiner {
    std::vector<Vec2> verts;
    std::vector<Mesh::Tri> tris;
    std::vector<char> alive;
    std::vector<long> ancestry;
    long next_uid;
    // alive triangles adjacent to each undirected edge
    std::unordered_map<uint64_t, std::array<int, 2>> adj;

    void attach(int t) {
        const auto& v = tris[t].v;
        for (int i = 0; i < 3; ++i) {
            auto [it, fresh] = adj.try_emplace(edge_key(v[(i + 1) % 3], v[(i + 2) % 3]),
                                               std::array<int, 2>{-1, -1});
            auto& slot = it->second;
            (slot[0] == -1 ? slot[0] : slot[1]) = t;
        }
    }

    void detach(int t) {
        const auto& v = tris[t].v;
        for (int i = 0; i < 3; ++i) {
            auto& slot = adj.at(edge_key(v[(i + 1) % 3], v[(i + 2) % 3]));
            if (slot[0] == t)
                slot[0] = slot[1], slot[1] = -1;
            else if (slot[1] == t)
                slot[1] = -1;
        }
    }

    int neighbor_across(int t, int a, int b) const {
        const auto it = adj.find(edge_key(a, b));
        if (it == adj.end()) return -1;
        const auto& slot = it->second;
        return slot[0] == t ? slot[1] : slot[0];
    }

    std::array<int, 2> refinement_edge_of(int t) const {
        const auto& tri = tris[t];
        return {tri.v[(tri.refedge + 1) % 3], tri.v[(tri.refedge + 2) % 3]};
    }

    /// Splits t across its refinement edge through vertex m. Children keep the
    /// parent's winding order; the new vertex lands at local index 2 so each
    /// child's refinement edge (the one opposite m) is the parent edge it
    /// inherited.
    void split(int t, int m) {
        const auto& tri = tris[t];
        const int r = tri.refedge;
        const int peak = tri.v[r], lo = tri.v[(r + 1) % 3], hi = tri.v[(r + 2) % 3];

        Mesh::Tri c1, c2;
        c1.v = {peak, lo, m};
        c2.v = {hi, peak, m};
        c1.refedge = c2.refedge = 2;
        c1.gen = c2.gen = tri.gen + 1;
        c1.uid = next_uid++;
        c2.uid = next_uid++;
        ancestry.push_back(tri.uid);
        ancestry.push_back(tri.uid);

        detach(t);
        alive[t] = 0;
        const int i1 = static_cast<int>(tris.size());
        tris.push_back(c1);
        alive.push_back(1);
        attach(i1);
        const int i2 = static_cast<int>(tris.size());
        tris.push_back(c2);
        alive.push_back(1);
        attach(i2);
    }

    /// Bisects t, first making the neighbor across t's refinement edge
    /// compatible (classic recursive NVB completion).
    void refine(int t, int depth) {
        if (depth > 100000) throw std::runtime_error("NVB completion recursion failed to terminate");
        const auto e = refinement_edge_of(t);
        int n = neighbor_across(t, e[0], e[1]);
        if (n != -1) {
            const auto ne = refinement_edge_of(n);
            if (edge_key(ne[0], ne[1]) != edge_key(e[0], e[1])) {
                refine(n, depth + 1);
                n = neighbor_across(t, e[0], e[1]);
                // The child of the old neighbor that inherited edge e has e as
                // its refinement edge, so the pair below is now compatible.
            }
        }
        const int m = static_cast<int>(verts.size());
        verts.push_back(midpoint(verts[e[0]], verts[e[1]]));
        split(t, m);
        if (n != -1) split(n, m);
    }
};

}  // namespace

Mesh Mesh::bisect(const MarkedSet& marked_in) const {
    const MarkedSet marked = normalize_marked(marked_in);
    for (int id : marked)
        if (id < 0 || id >= triangle_count())
            throw std::invalid_argument("marked element " + std::to_string(id) + " out of range");
    if (marked.empty()) return *this;

    Refiner r;
    r.verts = verts_;
    r.tris = tris_;
    r.alive.assign(tris_.size(), 1);
    r.ancestry = *parent_;
    r.next_uid = next_uid_;
    for (int t = 0; t < triangle_count(); ++t) r.attach(t);

    for (int id : marked)
        if (r.alive[id]) r.refine(id, 0);

    Mesh out;
    out.verts_ = std::move(r.verts);
    for (size_t t = 0; t < r.tris.size(); ++t)
        if (r.alive[t]) out.tris_.push_back(r.tris[t]);
    out.parent_ = std::make_shared<const std::vector<long>>(std::move(r.ancestry));
    out.next_uid_ = r.next_uid;
    out.stamp_ = g_mesh_stamp.fetch_add(1);
    out.lineage_ = lineage_;
    out.rebuild_derived();
    return out;
}

Mesh uniform_refine(const Mesh& mesh, int sweeps) {
    Mesh out = mesh;
    for (int s = 0; s < sweeps; ++s) {
        MarkedSet all(out.triangle_count());
        for (int t = 0; t < out.triangle_count(); ++t) all[t] = t;
        out = out.bisect(all);
    }
    return out;
}

Mesh Mesh::builtin(Domain d) {
    switch (d) {
        case Domain::square:
            return build({{0, 0}, {1, 0}, {1, 1}, {0, 1}}, {{{0, 1, 2}}, {{0, 2, 3}}});
        case Domain::lshape: {
            // ([-1,1]^2 minus [0,1]x[-1,0]) with the reentrant corner at the origin.
            std::vector<Vec2> v = {{-1, -1}, {0, -1}, {-1, 0}, {0, 0},
                                   {1, 0},   {-1, 1}, {0, 1},  {1, 1}};
            std::vector<std::array<int, 3>> t = {{{0, 1, 3}}, {{0, 3, 2}}, {{2, 3, 6}},
                                                 {{2, 6, 5}}, {{3, 4, 7}}, {{3, 7, 6}}};
            return build(std::move(v), std::move(t));
        }
        case Domain::square_one_hole:
        case Domain::square_two_holes: {
            // Unit grids with one or two unit cells removed; first Betti number
            // 1 and 2 respectively.
            const int nx = (d == Domain::square_one_hole) ? 3 : 5;
            const int ny = 3;
            auto is_hole = [&](int i, int j) {
                if (j != 1) return false;
                return (d == Domain::square_one_hole) ? (i == 1) : (i == 1 || i == 3);
            };
            std::vector<Vec2> v;
            for (int j = 0; j <= ny; ++j)
                for (int i = 0; i <= nx; ++i) v.push_back({double(i), double(j)});
            auto vid = [&](int i, int j) { return j * (nx + 1) + i; };
            std::vector<std::array<int, 3>> t;
            for (int j = 0; j < ny; ++j)
                for (int i = 0; i < nx; ++i) {
                    if (is_hole(i, j)) continue;
                    t.push_back({vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)});
                    t.push_back({vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)});
                }
            return build(std::move(v), std::move(t));
        }
    }
    throw std::invalid_argument("unknown builtin domain");
}

Mesh Mesh::load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open mesh file: " + path);
    try {
        nlohmann::json j;
        in >> j;
        std::vector<Vec2> verts;
        for (const auto& v : j.at("vertices"))
            verts.push_back({v.at(0).get<double>(), v.at(1).get<double>()});
        std::vector<std::array<int, 3>> tris;
        for (const auto& t : j.at("triangles"))
            tris.push_back({t.at(0).get<int>(), t.at(1).get<int>(), t.at(2).get<int>()});
        if (j.contains("refinement_edge")) {
            std::vector<int> re = j.at("refinement_edge").get<std::vector<int>>();
            return build(std::move(verts), std::move(tris), &re);
        }
        return build(std::move(verts), std::move(tris));
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument("malformed mesh file " + path + ": " + e.what());
    }
}

void Mesh::save_json(const std::string& path) const {
    nlohmann::json j;
    j["vertices"] = nlohmann::json::array();
    for (const auto& v : verts_) j["vertices"].push_back({v.x, v.y});
    j["triangles"] = nlohmann::json::array();
    for (const auto& t : tris_) j["triangles"].push_back({t.v[0], t.v[1], t.v[2]});
    j["refinement_edge"] = nlohmann::json::array();
    for (const auto& t : tris_) j["refinement_edge"].push_back(t.refedge);
    std::ofstream out(path);
    if (!out) throw std::invalid_argument("cannot write mesh file: " + path);
    out << j.dump(1) << "\n";
}

}  // namespace feec
