#include <bodyfit/body.hpp>
#include <bodyfit/body_losses.hpp>
#include <bodyfit/fixtures.hpp>

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace bodyfit;
namespace bt = bodyfit::testing;

namespace {

Eigen::Vector3d random_point(std::mt19937_64& rng, double extent)
{
    std::uniform_real_distribution<double> u(-extent, extent);
    return {u(rng), u(rng), u(rng)};
}

} // namespace

TEST(BuildBody, KeepsContacts)
{
    const auto sphere = fixtures::icosahedron();
    const auto spec = build_body(sphere, sphere.vertices());
    EXPECT_EQ(spec.contacts.rows(), 12);
}

TEST(BuildBody, EmptyContactsAllowed)
{
    const auto spec = build_body(fixtures::icosphere(1), Points(0, 3));
    EXPECT_EQ(spec.contacts.rows(), 0);
}

TEST(BuildBody, EmptyBodyRejected) { EXPECT_THROW(build_body(TriMesh(), Points(0, 3)), PreconditionError); }

TEST(BuildBody, ContactIndicesResolveToVertices)
{
    const auto body = fixtures::icosphere(1);
    const Points c = contacts_from_indices(body, {0, 5});
    EXPECT_EQ(c.row(1), body.vertices().row(5));
    EXPECT_THROW(contacts_from_indices(body, {body.num_vertices()}), PreconditionError);
}

TEST(Bvh, ClosestMatchesBruteForce)
{
    std::mt19937_64 rng(21);
    for (const auto& mesh : {fixtures::icosphere(3), fixtures::torus(0.7, 0.2, 24, 10)}) {
        const TriangleBVH bvh(mesh.vertices(), mesh.faces());
        for (int i = 0; i < 100; ++i) {
            const Eigen::Vector3d q = random_point(rng, 1.6);
            const auto hit = bvh.closest(q);
            const auto ref = bt::brute_closest(mesh.vertices(), mesh.faces(), q);
            EXPECT_EQ(hit.face, ref.face);
            EXPECT_LT(std::abs(std::sqrt(hit.squared_distance) - std::sqrt(ref.squared_distance)), 1e-12);
        }
    }
}

TEST(Bvh, HierarchicalWindingMatchesDirectSum)
{
    std::mt19937_64 rng(4);
    const auto mesh = fixtures::torus(0.7, 0.2, 24, 10);
    const TriangleBVH bvh(mesh.vertices(), mesh.faces());
    for (int i = 0; i < 200; ++i) {
        const Eigen::Vector3d q = random_point(rng, 1.2);
        EXPECT_NEAR(bvh.winding_number(q), bvh.winding_number_direct(q), 1e-9);
    }
}

TEST(SignedDistance, SphereOutsideAndInside)
{
    const auto spec = build_body(fixtures::icosphere(5), Points(0, 3));
    const auto out = signed_distance(spec, Eigen::Vector3d(2, 0, 0));
    EXPECT_NEAR(out.distance, 1.0, 1e-3);
    EXPECT_LT((out.gradient - Eigen::Vector3d(1, 0, 0)).norm(), 1e-3);
    const auto in = signed_distance(spec, Eigen::Vector3d(0, 0, 0));
    EXPECT_NEAR(in.distance, -1.0, 1e-3);
    EXPECT_NEAR(in.gradient.norm(), 1.0, 1e-12);
}

TEST(SignedDistance, ZeroAtBodyVertex)
{
    const auto body = fixtures::icosphere(2);
    const auto spec = build_body(body, Points(0, 3));
    for (Eigen::Index v = 0; v < body.num_vertices(); v += 17) {
        EXPECT_NEAR(signed_distance(spec, body.vertex(v)).distance, 0.0, 1e-9);
    }
}

TEST(SignedDistance, SignAgreesWithRayParity)
{
    std::mt19937_64 rng(77);
    const auto body = fixtures::torus(0.7, 0.25, 24, 12);
    const auto spec = build_body(body, Points(0, 3));
    const Eigen::Vector3d dir = Eigen::Vector3d(0.31, 0.77, -0.55).normalized();
    const int probes = 2000;
    int disagreements = 0;
    for (int i = 0; i < probes; ++i) {
        const Eigen::Vector3d q = random_point(rng, 1.1);
        const auto sd = signed_distance(spec, q);
        if ((sd.distance < 0) != bt::ray_parity_inside(body.vertices(), body.faces(), q, dir) && std::abs(sd.distance) > 1e-9) {
            ++disagreements;
        }
    }
    EXPECT_LE(disagreements, probes / 1000);
}

TEST(SignedDistance, GradientMatchesFiniteDifferences)
{
    std::mt19937_64 rng(8);
    const auto body = fixtures::icosphere(3);
    const auto spec = build_body(body, Points(0, 3));
    int checked = 0;
    while (checked < 50) {
        const Eigen::Vector3d q = random_point(rng, 1.5);
        if (q.norm() < 0.3) continue;  // stay away from the medial axis at the center
        const auto sd = signed_distance(spec, q);
        const Eigen::VectorXd fd =
            bt::finite_difference([&](const Eigen::VectorXd& x) { return signed_distance(spec, Eigen::Vector3d(x)).distance; }, q);
        EXPECT_LT((fd - sd.gradient).norm(), 1e-3) << q.transpose();
        ++checked;
    }
}

TEST(SignedDistance, BatchedMatchesSingle)
{
    std::mt19937_64 rng(1);
    const auto spec = build_body(fixtures::torus(0.7, 0.2, 16, 8), Points(0, 3));
    Points Q(64, 3);
    for (Eigen::Index i = 0; i < Q.rows(); ++i) Q.row(i) = random_point(rng, 1.0).transpose();
    const auto batch = signed_distance(spec, Q);
    for (Eigen::Index i = 0; i < Q.rows(); ++i) {
        EXPECT_EQ(batch[static_cast<std::size_t>(i)].distance, signed_distance(spec, Eigen::Vector3d(Q.row(i).transpose())).distance);
    }
}

TEST(SignedDistance, OpenSheetIsUndecidableNearItsPlane)
{
    Points V(4, 3);
    V << -1, -1, 0, 1, -1, 0, 1, 1, 0, -1, 1, 0;
    Faces F(2, 3);
    F << 0, 1, 2, 0, 2, 3;
    const auto spec = build_body(TriMesh(V, F), Points(0, 3));
    const auto sd = signed_distance(spec, Eigen::Vector3d(0.1, 0.1, -0.01));
    EXPECT_FALSE(sd.decidable);
    Points q(2, 3);
    q << 0.1, 0.1, -0.01, 0, 0, 5;
    try {
        penetration_loss(q, spec, 0.0);
        FAIL() << "expected SignUndecidableError";
    } catch (const SignUndecidableError& e) {
        EXPECT_EQ(e.points(), (std::vector<std::size_t>{0}));
    }
}
