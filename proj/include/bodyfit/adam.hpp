#pragma once

#include "errors.hpp"
#include "jacobian_field.hpp"

#include <cmath>

namespace bodyfit {

struct AdamParams {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    void validate() const
    {
        if (!(learning_rate > 0)) throw PreconditionError("learning rate must be > 0");
        if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1)) throw PreconditionError("Adam betas must lie in [0, 1)");
        if (!(epsilon > 0)) throw PreconditionError("Adam epsilon must be > 0");
    }
};

struct AdamState {
    Matrix3List first_moment;
    Matrix3List second_moment;
    int step = 0;
};

/// One adaptive-moment update applied entrywise to the 9m field parameters.
inline void adam_step(JacobianField& field, const Matrix3List& grad, AdamState& state, const AdamParams& params)
{
    if (grad.size() != field.size()) throw PreconditionError("gradient and field sizes differ");
    if (state.first_moment.empty()) {
        state.first_moment.assign(field.size(), Eigen::Matrix3d::Zero());
        state.second_moment.assign(field.size(), Eigen::Matrix3d::Zero());
    }
    if (state.first_moment.size() != field.size()) throw PreconditionError("optimizer state does not match field size");

    ++state.step;
    const double correction1 = 1.0 - std::pow(params.beta1, state.step);
    const double correction2 = 1.0 - std::pow(params.beta2, state.step);
    for (std::size_t i = 0; i < field.size(); ++i) {
        auto& m = state.first_moment[i];
        auto& v = state.second_moment[i];
        m = params.beta1 * m + (1.0 - params.beta1) * grad[i];
        v = params.beta2 * v + (1.0 - params.beta2) * grad[i].cwiseAbs2();
        const Eigen::Matrix3d m_hat = m / correction1;
        const Eigen::Matrix3d v_hat = v / correction2;
        field[i].array() -= params.learning_rate * m_hat.array() / (v_hat.array().sqrt() + params.epsilon);
    }
}

} // namespace bodyfit
