#include <bodyfit/fixtures.hpp>
#include <bodyfit/jacobian_field.hpp>
#include <bodyfit/poisson.hpp>

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace bodyfit;
namespace bt = bodyfit::testing;

namespace {

PoissonSystem make_system(const TriMesh& mesh, Eigen::Index pin = 0)
{
    return assemble_system(mesh, build_gradient_operator(mesh), pin);
}

JacobianField constant_field(Eigen::Index m, const Eigen::Matrix3d& C)
{
    JacobianField field;
    field.matrices.assign(static_cast<std::size_t>(m), C);
    return field;
}

JacobianField random_field(Eigen::Index m, std::mt19937_64& rng, double amplitude)
{
    std::normal_distribution<double> n(0.0, amplitude);
    auto field = init_identity_field(m);
    for (auto& J : field.matrices) {
        for (int k = 0; k < 9; ++k) J.data()[k] += n(rng);
    }
    return field;
}

Eigen::VectorXd flatten_field(const JacobianField& field)
{
    Eigen::VectorXd x(9 * static_cast<Eigen::Index>(field.size()));
    for (std::size_t f = 0; f < field.size(); ++f) {
        for (int k = 0; k < 9; ++k) x[9 * static_cast<Eigen::Index>(f) + k] = field[f].data()[k];
    }
    return x;
}

JacobianField unflatten_field(const Eigen::VectorXd& x)
{
    JacobianField field = init_identity_field(x.size() / 9);
    for (std::size_t f = 0; f < field.size(); ++f) {
        for (int k = 0; k < 9; ++k) field.matrices[f].data()[k] = x[9 * static_cast<Eigen::Index>(f) + k];
    }
    return field;
}

Eigen::VectorXd flatten_grad(const Matrix3List& g)
{
    JacobianField field;
    field.matrices = g;
    return flatten_field(field);
}

} // namespace

TEST(PoissonSystem, MatrixIsSymmetric)
{
    const auto sys = make_system(fixtures::icosphere(2));
    const Eigen::SparseMatrix<double> diff = sys.matrix() - Eigen::SparseMatrix<double>(sys.matrix().transpose());
    EXPECT_LE(Eigen::MatrixXd(diff).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(PoissonSystem, FactorizationResidual)
{
    const auto sys = make_system(fixtures::icosphere(3));
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n;
    for (int trial = 0; trial < 5; ++trial) {
        Eigen::VectorXd b(sys.free_matrix().rows());
        for (auto& v : b) v = n(rng);
        const Eigen::VectorXd x = sys.solve_free(b);
        EXPECT_LE((sys.free_matrix() * x - b).norm() / b.norm(), 1e-10);
    }
}

TEST(PoissonSystem, DisconnectedMeshNamesSmallerComponent)
{
    const auto big = fixtures::icosphere(1);
    const auto small = fixtures::icosahedron();
    Points V(big.num_vertices() + small.num_vertices(), 3);
    V << big.vertices(), (small.vertices().rowwise() + Eigen::RowVector3d(5, 0, 0));
    Faces F(big.num_faces() + small.num_faces(), 3);
    F << big.faces(), (small.faces().array() + static_cast<int>(big.num_vertices())).matrix();
    try {
        make_system(TriMesh(V, F));
        FAIL() << "expected DisconnectedMeshError";
    } catch (const DisconnectedMeshError& e) {
        EXPECT_EQ(e.smallest_size(), 12u);
        EXPECT_EQ(e.smallest_vertex(), static_cast<std::size_t>(big.num_vertices()));
    }
}

TEST(PoissonSystem, PinOutOfRange)
{
    const auto mesh = fixtures::icosahedron();
    EXPECT_THROW(make_system(mesh, 12), PreconditionError);
    EXPECT_THROW(make_system(mesh, -1), PreconditionError);
}

TEST(PoissonSystem, FieldSizeMismatch)
{
    const auto sys = make_system(fixtures::icosahedron());
    EXPECT_THROW(sys.solve(init_identity_field(19)), PreconditionError);
}

TEST(SolveDeformation, IdentityFieldReproducesRest)
{
    for (const auto& mesh : {fixtures::icosphere(2), fixtures::torus(0.7, 0.2, 16, 8)}) {
        const auto sys = make_system(mesh, 3);
        const auto state = solve_deformation(sys, init_identity_field(mesh));
        EXPECT_LE((state.vertices - mesh.vertices()).cwiseAbs().maxCoeff(), 1e-8);
    }
}

TEST(SolveDeformation, ConstantFieldsAreRecoveredExactly)
{
    std::mt19937_64 rng(9);
    const auto mesh = fixtures::torus(0.7, 0.2, 16, 8);
    const auto sys = make_system(mesh, 0);
    const Eigen::Matrix3d R = bt::random_rotation(rng);
    Eigen::Matrix3d C;
    C << 1.2, 0.3, -0.1, 0.0, 0.8, 0.2, 0.1, -0.4, 1.5;
    for (const Eigen::Matrix3d& M : {R, Eigen::Matrix3d(2.0 * Eigen::Matrix3d::Identity()), C}) {
        const Points V = sys.solve(constant_field(mesh.num_faces(), M));
        const Points expected = mesh.vertices() * M.transpose();
        EXPECT_LE(bt::max_error_up_to_translation(V, expected), 1e-8);
        EXPECT_LE((V.row(0) - mesh.vertices().row(0)).norm(), 1e-12);  // pin holds
    }
}

TEST(SolveDeformation, SolutionMinimizesObjective)
{
    std::mt19937_64 rng(13);
    const auto mesh = fixtures::icosphere(1);
    const auto sys = make_system(mesh, 2);
    const auto field = random_field(mesh.num_faces(), rng, 0.3);
    const Points V = sys.solve(field);
    const double best = sys.objective(V, field);
    std::normal_distribution<double> n(0.0, 1e-3);
    for (int trial = 0; trial < 20; ++trial) {
        Points P = V;
        for (Eigen::Index i = 0; i < P.size(); ++i) P.data()[i] += n(rng);
        P.row(2) = V.row(2);
        EXPECT_GE(sys.objective(P, field), best);
    }
}

TEST(SolveDeformation, Idempotent)
{
    std::mt19937_64 rng(14);
    const auto mesh = fixtures::icosphere(2);
    const auto sys = make_system(mesh, 0);
    const Points V1 = sys.solve(random_field(mesh.num_faces(), rng, 0.2));
    JacobianField again;
    again.matrices = sys.gradient_operator().tangential_jacobians(V1);
    const Points V2 = sys.solve(again);
    EXPECT_LE((V1 - V2).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(SolveDeformation, PinChangesOnlyTranslation)
{
    std::mt19937_64 rng(15);
    const auto mesh = fixtures::torus(0.7, 0.2, 12, 6);
    const auto field = random_field(mesh.num_faces(), rng, 0.2);
    const Points a = make_system(mesh, 0).solve(field);
    const Points b = make_system(mesh, 40).solve(field);
    EXPECT_LE(bt::max_error_up_to_translation(a, b), 1e-8);
}

TEST(Backprop, ZeroGradientGivesZero)
{
    const auto mesh = fixtures::icosahedron();
    const auto sys = make_system(mesh);
    for (const auto& g : backprop_to_jacobians(sys, Points::Zero(12, 3))) EXPECT_EQ(g.norm(), 0.0);
}

TEST(Backprop, SquaredNormMatchesFiniteDifferences)
{
    std::mt19937_64 rng(16);
    const auto mesh = fixtures::icosahedron();
    const auto sys = make_system(mesh, 0);
    const auto field = random_field(mesh.num_faces(), rng, 0.2);
    const auto loss = [&](const Eigen::VectorXd& x) { return sys.solve(unflatten_field(x)).squaredNorm(); };
    const Points V = sys.solve(field);
    const Eigen::VectorXd analytic = flatten_grad(backprop_to_jacobians(sys, 2.0 * V));
    const Eigen::VectorXd fd = bt::finite_difference(loss, flatten_field(field));
    EXPECT_LT(bt::max_relative_error(analytic, fd), 1e-4);
}

TEST(Backprop, SmoothLossOnLargerMeshMatchesFiniteDifferences)
{
    std::mt19937_64 rng(17);
    const auto mesh = fixtures::torus(0.7, 0.2, 8, 6);  // 96 faces
    const auto sys = make_system(mesh, 5);
    const auto field = random_field(mesh.num_faces(), rng, 0.1);
    const auto loss = [&](const Eigen::VectorXd& x) {
        const Points V = sys.solve(unflatten_field(x));
        return (V.array().sin() * V.col(0).replicate(1, 3).array()).sum();
    };
    const Points V = sys.solve(field);
    Points g = V.array().cos() * V.col(0).replicate(1, 3).array();
    g.col(0) += V.array().sin().matrix().rowwise().sum();
    const Eigen::VectorXd analytic = flatten_grad(backprop_to_jacobians(sys, g));
    const Eigen::VectorXd fd = bt::finite_difference(loss, flatten_field(field));
    EXPECT_LT(bt::max_relative_error(analytic, fd), 1e-4);
}

TEST(Backprop, Linear)
{
    const auto mesh = fixtures::icosphere(1);
    const auto sys = make_system(mesh);
    const Points a = Points::Random(mesh.num_vertices(), 3);
    const Points b = Points::Random(mesh.num_vertices(), 3);
    const auto ga = backprop_to_jacobians(sys, a);
    const auto gb = backprop_to_jacobians(sys, b);
    const auto gab = backprop_to_jacobians(sys, a + b);
    for (std::size_t f = 0; f < ga.size(); ++f) EXPECT_LE((gab[f] - ga[f] - gb[f]).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Regularizer, IdentityFieldIsZero)
{
    const auto r = field_regularizer(init_identity_field(30));
    EXPECT_EQ(r.loss, 0.0);
    for (const auto& g : r.gradient) EXPECT_EQ(g.norm(), 0.0);
}

TEST(Regularizer, DoubledFaceGivesSqrtThree)
{
    auto field = init_identity_field(10);
    field.matrices[4] = 2.0 * Eigen::Matrix3d::Identity();
    EXPECT_NEAR(field_regularizer(field).loss, std::sqrt(3.0), 1e-15);
}

TEST(Regularizer, MatchesFiniteDifferences)
{
    std::mt19937_64 rng(18);
    const auto field = random_field(15, rng, 0.3);
    const Eigen::VectorXd analytic = flatten_grad(field_regularizer(field).gradient);
    const Eigen::VectorXd fd =
        bt::finite_difference([](const Eigen::VectorXd& x) { return field_regularizer(unflatten_field(x)).loss; }, flatten_field(field));
    EXPECT_LT(bt::max_relative_error(analytic, fd), 1e-4);
}

TEST(NearestVertex, LowestIndexOnTies)
{
    Points V(3, 3);
    V << 1, 0, 0, -1, 0, 0, 0, 5, 0;
    EXPECT_EQ(nearest_vertex(V, Eigen::Vector3d::Zero()), 0);
}
