#pragma once

#include "curvelab/curve_model.hpp"

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace curvelab {

/// Rows of the generator that belong to one eigenvalue lambda = a + i omega.
///
/// Real chains list rows by ascending m; rotation chains list (cos, sin)
/// pairs by ascending m.
struct FlowBlock {
    std::vector<Eigen::Index> rows;
    double a = 0.0;
    double omega = 0.0;
};

/// Generator A of the basis dynamics  d/dt Y^i = sum_k A(i,k) Y^k.
///
/// Parameters move as row vectors (r -> r E_h); basis functions move with
/// E_h on the left (Y_{t+h} = E_h Y_t).
struct FlowMatrix {
    Eigen::MatrixXd A;
    /// Empty when the block structure is unknown; the generic exponential is
    /// used then.
    std::vector<FlowBlock> blocks;
};

struct FundamentalSolution {
    Eigen::MatrixXd E;
    double h = 0.0;
};

FlowMatrix generator(const LinearModel& model);

/// E_h = exp(h A), blockwise in closed form when blocks are known.
FundamentalSolution fundamental_solution(const FlowMatrix& flow, double h);

/// Scaling-and-squaring Pade exponential of a general square matrix.
Eigen::MatrixXd generic_expm(const Eigen::MatrixXd& m);

/// phi_h(r) = r E_h; negative h gives the backward extension of the flow.
Params translate(const LinearModel& model, const Params& r, double h);

struct SpaReport {
    /// max |Y_t(phi_h r) - Y_{t+h}(r)|
    double yield_error = 0.0;
    /// max relative |P_t(phi_h r) - P_{t+h}(r)/P_h(r)|
    double price_error = 0.0;
    /// max |phi_{h2}(phi_{h1} r) - phi_{h1+h2}(r)|
    double kolmogorov_error = 0.0;
};

SpaReport verify_spa(const LinearModel& model, const Params& r, std::span<const double> times,
                     std::span<const double> shifts);

} // namespace curvelab
