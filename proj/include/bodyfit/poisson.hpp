#pragma once

#include "errors.hpp"
#include "gradient_operator.hpp"
#include "jacobian_field.hpp"
#include "mesh.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <limits>
#include <memory>
#include <vector>

namespace bodyfit {

/// Area-weighted least-squares system recovering vertex positions from a Jacobian field:
///
///   min_V  sum_f |f| || D_f(V) - J_f ||_F^2   subject to  V[pinned] = pinned_position
///
/// with D_f the tangential Jacobian of FaceGradientOperator. The normal equations
/// A = G^T M G (M = face areas repeated on each face's three gradient rows) are restricted
/// to the free vertices and factorized once; each solve only forms right-hand sides.
class PoissonSystem {
public:
    PoissonSystem(const TriMesh& mesh, FaceGradientOperator op, Eigen::Index pinned_vertex)
        : op_(std::move(op)), pinned_(pinned_vertex)
    {
        const Eigen::Index n = mesh.num_vertices();
        if (pinned_vertex < 0 || pinned_vertex >= n) {
            throw PreconditionError("pinned vertex " + std::to_string(pinned_vertex) + " outside [0, " +
                                    std::to_string(n) + ")");
        }
        if (op_.num_vertices() != n || op_.num_faces() != mesh.num_faces()) {
            throw PreconditionError("gradient operator does not match mesh");
        }
        check_connected(mesh);
        pinned_position_ = mesh.vertex(pinned_vertex);

        const auto& G = op_.matrix();
        const Eigen::Index m = op_.num_faces();
        Eigen::VectorXd row_weights(3 * m);
        for (Eigen::Index f = 0; f < m; ++f) row_weights.segment<3>(3 * f).setConstant(op_.areas()[f]);
        const Eigen::SparseMatrix<double> weighted_transpose = G.transpose() * row_weights.asDiagonal();  // G^T M
        A_ = weighted_transpose * G;
        A_ = 0.5 * (Eigen::SparseMatrix<double>(A_.transpose()) + A_);  // exact symmetry

        // selection of free vertices
        free_index_.assign(static_cast<std::size_t>(n), -1);
        std::vector<Eigen::Triplet<double>> select;
        Eigen::Index next = 0;
        for (Eigen::Index v = 0; v < n; ++v) {
            if (v == pinned_) continue;
            free_index_[static_cast<std::size_t>(v)] = next;
            select.emplace_back(next, v, 1.0);
            ++next;
        }
        Eigen::SparseMatrix<double> S(n - 1, n);
        S.setFromTriplets(select.begin(), select.end());

        A_ff_ = S * A_ * S.transpose();
        A_fp_ = S * Eigen::VectorXd(A_.col(pinned_));
        rhs_operator_ = S * weighted_transpose;

        auto solver = std::make_shared<Solver>();
        solver->compute(A_ff_);
        if (solver->info() != Eigen::Success) throw Error("sparse Cholesky factorization of the Poisson system failed");
        solver_ = std::move(solver);
    }

    const FaceGradientOperator& gradient_operator() const noexcept { return op_; }
    const Eigen::SparseMatrix<double>& matrix() const noexcept { return A_; }
    const Eigen::SparseMatrix<double>& free_matrix() const noexcept { return A_ff_; }
    Eigen::Index pinned_vertex() const noexcept { return pinned_; }
    const Eigen::Vector3d& pinned_position() const noexcept { return pinned_position_; }
    Eigen::Index num_vertices() const noexcept { return op_.num_vertices(); }
    Eigen::Index num_faces() const noexcept { return op_.num_faces(); }

    void set_pinned_position(const Eigen::Vector3d& p) { pinned_position_ = p; }

    /// Solves A_ff x = b with the stored factorization.
    Eigen::VectorXd solve_free(const Eigen::VectorXd& b) const { return solver_->solve(b); }

    /// Vertex positions minimizing the weighted Jacobian mismatch for the given field.
    Points solve(const JacobianField& field) const
    {
        check_field(field);
        const Eigen::Index n = num_vertices();
        const Eigen::Index m = num_faces();
        Points V(n, 3);
        Eigen::VectorXd target(3 * m);
        for (int c = 0; c < 3; ++c) {
            for (Eigen::Index f = 0; f < m; ++f) target.segment<3>(3 * f) = field[static_cast<std::size_t>(f)].row(c).transpose();
            const Eigen::VectorXd rhs = rhs_operator_ * target - A_fp_ * pinned_position_[c];
            const Eigen::VectorXd x = solve_free(rhs);
            for (Eigen::Index v = 0; v < n; ++v) {
                const auto k = free_index_[static_cast<std::size_t>(v)];
                V(v, c) = k < 0 ? pinned_position_[c] : x[k];
            }
        }
        return V;
    }

    /// Adjoint of solve(): maps dLoss/dVertices to dLoss/dJ_f. The pinned vertex is a
    /// constant of the solve, so its entry of the incoming gradient does not contribute.
    Matrix3List backprop(const Points& vertex_grad) const
    {
        if (vertex_grad.rows() != num_vertices()) throw PreconditionError("vertex gradient has wrong row count");
        const Eigen::Index n = num_vertices();
        const Eigen::Index m = num_faces();
        Matrix3List out(static_cast<std::size_t>(m), Eigen::Matrix3d::Zero());
        Eigen::VectorXd g(n - 1);
        for (int c = 0; c < 3; ++c) {
            for (Eigen::Index v = 0; v < n; ++v) {
                const auto k = free_index_[static_cast<std::size_t>(v)];
                if (k >= 0) g[k] = vertex_grad(v, c);
            }
            const Eigen::VectorXd y = solve_free(g);
            const Eigen::VectorXd dtarget = rhs_operator_.transpose() * y;
            for (Eigen::Index f = 0; f < m; ++f) out[static_cast<std::size_t>(f)].row(c) = dtarget.segment<3>(3 * f).transpose();
        }
        return out;
    }

    /// sum_f |f| ||D_f(V) - J_f||_F^2, the quantity solve() minimizes.
    double objective(const Points& V, const JacobianField& field) const
    {
        check_field(field);
        double total = 0.0;
        for (Eigen::Index f = 0; f < num_faces(); ++f) {
            total += op_.areas()[f] * (op_.tangential_jacobian(V, f) - field[static_cast<std::size_t>(f)]).squaredNorm();
        }
        return total;
    }

private:
    using Solver = Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>;

    void check_field(const JacobianField& field) const
    {
        if (static_cast<Eigen::Index>(field.size()) != num_faces()) {
            throw PreconditionError("Jacobian field has " + std::to_string(field.size()) + " matrices, system has " +
                                    std::to_string(num_faces()) + " faces");
        }
    }

    static void check_connected(const TriMesh& mesh)
    {
        const auto label = connected_components(mesh.num_vertices(), mesh.faces());
        const int components = label.empty() ? 0 : *std::max_element(label.begin(), label.end()) + 1;
        if (components <= 1) return;
        std::vector<std::size_t> size(static_cast<std::size_t>(components), 0);
        std::vector<std::size_t> first(static_cast<std::size_t>(components), std::numeric_limits<std::size_t>::max());
        for (std::size_t v = 0; v < label.size(); ++v) {
            ++size[static_cast<std::size_t>(label[v])];
            first[static_cast<std::size_t>(label[v])] = std::min(first[static_cast<std::size_t>(label[v])], v);
        }
        const auto smallest = static_cast<std::size_t>(std::min_element(size.begin(), size.end()) - size.begin());
        throw DisconnectedMeshError(static_cast<std::size_t>(components), size[smallest], first[smallest]);
    }

    FaceGradientOperator op_;
    Eigen::Index pinned_ = 0;
    Eigen::Vector3d pinned_position_ = Eigen::Vector3d::Zero();
    Eigen::SparseMatrix<double> A_;
    Eigen::SparseMatrix<double> A_ff_;
    Eigen::VectorXd A_fp_;
    Eigen::SparseMatrix<double> rhs_operator_;  // rows of G^T M for free vertices
    std::vector<Eigen::Index> free_index_;
    std::shared_ptr<const Solver> solver_;
};

inline PoissonSystem assemble_system(const TriMesh& mesh, const FaceGradientOperator& op, Eigen::Index pinned_vertex)
{
    return PoissonSystem(mesh, op, pinned_vertex);
}

/// Deformed positions together with the field that produced them.
struct DeformationState {
    Points vertices = Points(0, 3);
    JacobianField field;
    const PoissonSystem* system = nullptr;
};

inline DeformationState solve_deformation(const PoissonSystem& system, const JacobianField& field)
{
    return DeformationState{system.solve(field), field, &system};
}

inline Matrix3List backprop_to_jacobians(const PoissonSystem& system, const Points& vertex_grad)
{
    return system.backprop(vertex_grad);
}

/// Index of the vertex closest to p (lowest index on ties).
inline Eigen::Index nearest_vertex(const Points& V, const Eigen::Vector3d& p)
{
    Eigen::Index best = 0;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < V.rows(); ++i) {
        const double d2 = (V.row(i).transpose() - p).squaredNorm();
        if (d2 < best_d2) {
            best_d2 = d2;
            best = i;
        }
    }
    return best;
}

} // namespace bodyfit
