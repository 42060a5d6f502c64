#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <map>
#include <set>

#include "feec/mesh.hpp"
#include "oracles.hpp"

using namespace feec;

namespace {

Mesh reference_triangle() { return Mesh::build({{0, 0}, {1, 0}, {0, 1}}, {{{0, 1, 2}}}); }

/// Structural conformity: interior edges shared by exactly 2 triangles,
/// boundary edges by 1, all areas positive, refedges valid.
void require_conforming(const Mesh& m) {
    for (int e = 0; e < m.edge_count(); ++e) {
        const auto at = m.edge_tris(e);
        REQUIRE(at[0] >= 0);
        REQUIRE(m.edge_is_boundary(e) == (at[1] == -1));
    }
    for (int t = 0; t < m.triangle_count(); ++t) {
        REQUIRE(m.area(t) > 0);
        REQUIRE(m.tri(t).refedge >= 0);
        REQUIRE(m.tri(t).refedge <= 2);
    }
}

}  // namespace

TEST_CASE("build: unit square has Euler-consistent counts") {
    const Mesh m = Mesh::builtin(Domain::square);
    CHECK(m.vertex_count() == 4);
    CHECK(m.triangle_count() == 2);
    CHECK(m.edge_count() == 5);
    CHECK(m.boundary_edge_count() == 4);
    require_conforming(m);
}

TEST_CASE("build: reference triangle refinement edge is the hypotenuse") {
    const Mesh m = reference_triangle();
    CHECK(m.edge_count() == 3);
    CHECK(m.boundary_edge_count() == 3);
    // hypotenuse is opposite vertex 0
    CHECK(m.tri(0).refedge == 0);
    CHECK(m.element_size(0) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
    CHECK_THROWS_AS(m.element_size(7), std::invalid_argument);
}

TEST_CASE("build: equal-length edges tie-break to the lowest opposite vertex") {
    const Mesh eq = Mesh::build({{0, 0}, {1, 0}, {0.5, 0.5 * std::sqrt(3.0)}}, {{{0, 1, 2}}});
    CHECK(eq.tri(0).refedge == 0);
    // same triangle listed with a rotated vertex order still picks vertex 0
    const Mesh rot = Mesh::build({{0, 0}, {1, 0}, {0.5, 0.5 * std::sqrt(3.0)}}, {{{1, 2, 0}}});
    CHECK(rot.tri(0).v[rot.tri(0).refedge] == 0);
}

TEST_CASE("build: rejects bad input with the offending element") {
    // clockwise triangle
    CHECK_THROWS_AS(Mesh::build({{0, 0}, {1, 0}, {0, 1}}, {{{0, 2, 1}}}), invalid_mesh);
    // out-of-range index
    CHECK_THROWS_AS(Mesh::build({{0, 0}, {1, 0}, {0, 1}}, {{{0, 1, 3}}}), invalid_mesh);
    // duplicate triangle
    CHECK_THROWS_AS(Mesh::build({{0, 0}, {1, 0}, {0, 1}}, {{{0, 1, 2}}, {{1, 2, 0}}}), invalid_mesh);
    // hanging vertex: two small triangles meeting one big one along a split edge
    CHECK_THROWS_AS(Mesh::build({{0, 0}, {1, 0}, {0.5, 0}, {0.5, -1}, {0, 1}},
                                {{{0, 2, 3}}, {{2, 1, 3}}, {{0, 1, 4}}}),
                    invalid_mesh);
    // an edge shared by three triangles
    CHECK_THROWS_AS(Mesh::build({{0, 0}, {1, 0}, {0, 1}, {0, -1}, {-1, 0.5}},
                                {{{0, 1, 2}}, {{0, 3, 1}}, {{0, 1, 4}}}),
                    invalid_mesh);
}

TEST_CASE("bisect: empty mark set is a no-op") {
    const Mesh m = Mesh::builtin(Domain::square);
    const Mesh m2 = m.bisect({});
    CHECK(m2.triangle_count() == m.triangle_count());
    CHECK(m2.vertex_count() == m.vertex_count());
}

TEST_CASE("bisect: marking one of two compatible triangles bisects both") {
    const Mesh m = Mesh::builtin(Domain::square);
    // both refinement edges are the shared diagonal
    const Mesh m2 = m.bisect({0});
    CHECK(m2.triangle_count() == 4);
    CHECK(m2.vertex_count() == 5);
    require_conforming(m2);
}

TEST_CASE("bisect: marking everything gives every parent exactly two children") {
    Mesh m = Mesh::builtin(Domain::lshape);
    MarkedSet all;
    for (int t = 0; t < m.triangle_count(); ++t) all.push_back(t);
    const Mesh m2 = m.bisect(all);
    require_conforming(m2);

    // count children per parent through the genealogy
    std::map<long, int> children;
    std::map<long, double> child_area;
    for (int t = 0; t < m2.triangle_count(); ++t) {
        const int anc = m2.ancestor_in(m, t);
        REQUIRE(anc >= 0);
        children[m.uid(anc)]++;
        child_area[m.uid(anc)] += m2.area(t);
    }
    for (int t = 0; t < m.triangle_count(); ++t) {
        CHECK(children[m.uid(t)] == 2);
        CHECK(child_area[m.uid(t)] == doctest::Approx(m.area(t)).epsilon(1e-12));
    }
}

TEST_CASE("bisect: children partition areas across repeated adaptive passes") {
    Mesh m = Mesh::builtin(Domain::lshape);
    Mesh prev = m;
    for (int round = 0; round < 4; ++round) {
        MarkedSet marked;
        for (int t = 0; t < prev.triangle_count(); t += 2 + round) marked.push_back(t);
        const Mesh next = prev.bisect(marked);
        require_conforming(next);
        REQUIRE(next.refines(prev));
        REQUIRE(next.refines(m));
        // area partition against the previous generation
        std::map<int, double> acc;
        for (int t = 0; t < next.triangle_count(); ++t) acc[next.ancestor_in(prev, t)] += next.area(t);
        for (int t = 0; t < prev.triangle_count(); ++t)
            CHECK(acc[t] == doctest::Approx(prev.area(t)).epsilon(1e-12));
        prev = next;
    }
}

TEST_CASE("element_size: bisecting the reference triangle leaves children with h = 1") {
    const Mesh m = reference_triangle();
    const Mesh m2 = m.bisect({0});
    REQUIRE(m2.triangle_count() == 2);
    CHECK(m2.element_size(0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(m2.element_size(1) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("shape_regularity: equilateral value and scale invariance") {
    const double s3 = std::sqrt(3.0);
    const Mesh eq = Mesh::build({{0, 0}, {1, 0}, {0.5, 0.5 * s3}}, {{{0, 1, 2}}});
    CHECK(eq.shape_regularity() == doctest::Approx(1.0 / (2.0 * s3)).epsilon(1e-13));

    const Mesh big = Mesh::build({{0, 0}, {7.25, 0}, {3.625, 3.625 * s3}}, {{{0, 1, 2}}});
    CHECK(big.shape_regularity() == doctest::Approx(eq.shape_regularity()).epsilon(1e-13));
}

TEST_CASE("shape_regularity: 10 uniform sweeps never undercut the bisection catalogue") {
    const Mesh m0 = Mesh::builtin(Domain::square);
    double catalogue_worst = 1.0;
    std::set<std::array<long long, 3>> classes;
    for (int t = 0; t < m0.triangle_count(); ++t) {
        const auto& tri = m0.tri(t);
        const int r = tri.refedge;
        oracle::nvb_catalogue(m0.vertex(tri.v[r]), m0.vertex(tri.v[(r + 1) % 3]),
                              m0.vertex(tri.v[(r + 2) % 3]), 10, catalogue_worst, &classes);
    }

    Mesh m = m0;
    std::set<std::array<long long, 3>> observed;
    std::set<std::array<long long, 3>> initial_classes;
    for (int t = 0; t < m0.triangle_count(); ++t) {
        const auto& v = m0.tri(t).v;
        initial_classes.insert(oracle::angle_class(m0.vertex(v[0]), m0.vertex(v[1]), m0.vertex(v[2])));
    }
    for (int sweep = 0; sweep < 10; ++sweep) {
        m = uniform_refine(m, 1);
        CHECK(m.shape_regularity() >= catalogue_worst - 1e-12);
        for (int t = 0; t < m.triangle_count(); ++t) {
            const auto& v = m.tri(t).v;
            observed.insert(oracle::angle_class(m.vertex(v[0]), m.vertex(v[1]), m.vertex(v[2])));
        }
    }
    // NVB similarity: at most 4 classes per initial similarity class
    CHECK(observed.size() <= 4 * initial_classes.size());
}

TEST_CASE("builtin domains are conforming and have the advertised sizes") {
    const Mesh lshape = Mesh::builtin(Domain::lshape);
    CHECK(lshape.triangle_count() == 6);
    require_conforming(lshape);

    const Mesh hole = Mesh::builtin(Domain::square_one_hole);
    CHECK(hole.triangle_count() == 16);
    require_conforming(hole);

    const Mesh holes2 = Mesh::builtin(Domain::square_two_holes);
    CHECK(holes2.triangle_count() == 26);
    require_conforming(holes2);

    CHECK_THROWS_AS(domain_from_name("donut"), std::invalid_argument);
}

TEST_CASE("mesh JSON round trip preserves structure, missing refedge re-initializes") {
    const Mesh m = uniform_refine(Mesh::builtin(Domain::lshape), 1);
    const std::string path = "mesh_roundtrip_test.json";
    m.save_json(path);
    const Mesh r = Mesh::load_json(path);
    REQUIRE(r.triangle_count() == m.triangle_count());
    REQUIRE(r.vertex_count() == m.vertex_count());
    for (int t = 0; t < m.triangle_count(); ++t) {
        CHECK(r.tri(t).v == m.tri(t).v);
        CHECK(r.tri(t).refedge == m.tri(t).refedge);
    }
    std::remove(path.c_str());

    // without the refinement_edge entry the loader falls back to longest edges
    {
        std::ofstream out("mesh_norefedge_test.json");
        out << "{\"vertices\": [[0,0],[1,0],[1,1],[0,1]], \"triangles\": [[0,1,2],[0,2,3]]}\n";
    }
    const Mesh bare = Mesh::load_json("mesh_norefedge_test.json");
    const Mesh ref = Mesh::builtin(Domain::square);
    for (int t = 0; t < bare.triangle_count(); ++t) CHECK(bare.tri(t).refedge == ref.tri(t).refedge);
    std::remove("mesh_norefedge_test.json");
}

TEST_CASE("bisect: out-of-range marks are rejected") {
    const Mesh m = Mesh::builtin(Domain::square);
    CHECK_THROWS_AS(m.bisect({5}), std::invalid_argument);
    CHECK_THROWS_AS(m.bisect({-1}), std::invalid_argument);
}

TEST_CASE("bisect: conformity is maintained under cascading completions") {
    // repeatedly bisect only the triangle nearest the reentrant corner; the
    // deep grading forces long completion chains
    Mesh m = Mesh::builtin(Domain::lshape);
    for (int round = 0; round < 30; ++round) {
        int best = 0;
        double best_dist = std::numeric_limits<double>::max();
        for (int t = 0; t < m.triangle_count(); ++t) {
            const double d = norm(m.centroid(t));
            if (d < best_dist) {
                best_dist = d;
                best = t;
            }
        }
        m = m.bisect({best});
        require_conforming(m);
    }
    CHECK(m.triangle_count() > 60);
    // generations spread widely yet the mesh stays conforming
    int max_gen = 0;
    for (int t = 0; t < m.triangle_count(); ++t) max_gen = std::max(max_gen, m.tri(t).gen);
    CHECK(max_gen >= 10);
}
