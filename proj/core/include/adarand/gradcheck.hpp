#ifndef ADARAND_GRADCHECK_HPP
#define ADARAND_GRADCHECK_HPP

#include <functional>

#include "adarand/matrix.hpp"

namespace adarand {

/// Central-difference gradient of a scalar loss with respect to a
/// parameter matrix: entry (i,j) = (loss(at + h e_ij) - loss(at - h e_ij)) / 2h.
/// The loss must be deterministic given its input.
RealMatrix finite_diff_grad(const std::function<double(const RealMatrix&)>& loss_fn,
                            const RealMatrix& at, double h = 1e-5);

/// ||a - b||_F / max(||a||_F, ||b||_F, floor). Used by every gradient test.
double relative_error(const RealMatrix& a, const RealMatrix& b, double floor = 1e-12);

}  // namespace adarand

#endif
